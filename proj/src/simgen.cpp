#include "mmde/simgen.hpp"

#include <cmath>

#include "mmde/density.hpp"
#include "mmde/error.hpp"
#include "mmde/parallel.hpp"
#include "mmde/similarity.hpp"

namespace mmde {

void validate_toy_spec(const ToyGmmSpec& spec) {
  if (spec.components < 2) {
    throw UsageError("toy spec: need at least 2 components");
  }
  if (!(spec.eta >= 0.0 && spec.eta < 1.0)) {
    throw UsageError("toy spec: eta must lie in [0, 1)");
  }
  if (spec.pairs == 0 || spec.d_v == 0 || spec.d_c == 0) {
    throw UsageError("toy spec: pairs and dimensions must be positive");
  }
  if (!(spec.mean_hi > spec.mean_lo) || !(spec.cov_hi > spec.cov_lo) ||
      spec.cov_lo < 0.0) {
    throw UsageError("toy spec: invalid mean or covariance range");
  }
}

PairedDataset generate_multidim_toy(const ToyGmmSpec& spec) {
  validate_toy_spec(spec);
  const std::size_t T = spec.components;

  // component parameters: means then standard deviations, video side first
  SplitMix64 model_rng = substream(spec.seed, Stream::toy_model);
  auto draw_means = [&](std::size_t d) {
    std::vector<double> out(T * d);
    for (auto& v : out) {
      v = spec.mean_lo + (spec.mean_hi - spec.mean_lo) * model_rng.next_double();
    }
    return out;
  };
  auto draw_stds = [&](std::size_t d) {
    std::vector<double> out(T * d);
    for (auto& v : out) {
      // variance uniform on (cov_lo, cov_hi]
      const double var =
          spec.cov_lo + (spec.cov_hi - spec.cov_lo) * model_rng.next_double_open();
      v = std::sqrt(var);
    }
    return out;
  };
  const std::vector<double> mean_v = draw_means(spec.d_v);
  const std::vector<double> mean_c = draw_means(spec.d_c);
  const std::vector<double> std_v = draw_stds(spec.d_v);
  const std::vector<double> std_c = draw_stds(spec.d_c);

  EmbeddingMatrix videos{spec.pairs, spec.d_v,
                         std::vector<float>(spec.pairs * spec.d_v)};
  EmbeddingMatrix captions{spec.pairs, spec.d_c,
                           std::vector<float>(spec.pairs * spec.d_c)};
  std::vector<std::uint8_t> truth(spec.pairs);
  std::vector<std::uint32_t> video_concept(spec.pairs);

  // per-pair substreams keep generation order-free and reproducible
  for (std::size_t i = 0; i < spec.pairs; ++i) {
    SplitMix64 rng = substream(spec.seed, Stream::toy_pair, i);
    const bool wrong = rng.next_double() < spec.eta;
    std::size_t cv, cc;
    if (wrong) {
      cv = rng.next_below(T);
      cc = (cv + 1 + rng.next_below(T - 1)) % T;
    } else {
      cv = cc = rng.next_below(T);
    }
    truth[i] = wrong ? 0 : 1;
    video_concept[i] = static_cast<std::uint32_t>(cv);
    float* vrow = videos.row_ptr(i);
    for (std::size_t d = 0; d < spec.d_v; ++d) {
      vrow[d] = static_cast<float>(mean_v[cv * spec.d_v + d] +
                                   std_v[cv * spec.d_v + d] * rng.next_normal());
    }
    float* crow = captions.row_ptr(i);
    for (std::size_t d = 0; d < spec.d_c; ++d) {
      crow[d] = static_cast<float>(mean_c[cc * spec.d_c + d] +
                                   std_c[cc * spec.d_c + d] * rng.next_normal());
    }
  }

  std::vector<std::string> groups(spec.pairs);
  for (std::size_t i = 0; i < spec.pairs; ++i) {
    groups[i] = std::to_string(video_concept[i]);
  }
  return make_dataset(std::move(videos), std::move(captions),
                      std::move(groups), std::move(truth));
}

PairedDataset generate_scalar_pairs(const ScalarGmm& gmm, double eta,
                                    std::size_t pairs, std::uint64_t seed) {
  validate_gmm(gmm);
  if (!(eta >= 0.0 && eta <= 1.0)) {
    throw UsageError("generate_scalar_pairs: eta must lie in [0, 1]");
  }
  if (pairs == 0) {
    throw UsageError("generate_scalar_pairs: need at least one pair");
  }
  const std::size_t T = gmm.components();
  EmbeddingMatrix x{pairs, 1, std::vector<float>(pairs)};
  EmbeddingMatrix y{pairs, 1, std::vector<float>(pairs)};
  std::vector<std::uint8_t> truth(pairs);
  for (std::size_t i = 0; i < pairs; ++i) {
    SplitMix64 rng = substream(seed, Stream::scalar_pair, i);
    const bool wrong = rng.next_double() < eta;
    const std::size_t a = rng.next_below(T);
    const std::size_t b = wrong ? (a + 1 + rng.next_below(T - 1)) % T : a;
    truth[i] = wrong ? 0 : 1;
    x.data[i] =
        static_cast<float>(gmm.mu_x[a] + gmm.sigma_x[a] * rng.next_normal());
    y.data[i] =
        static_cast<float>(gmm.mu_y[b] + gmm.sigma_y[b] * rng.next_normal());
  }
  return make_dataset(std::move(x), std::move(y), {}, std::move(truth));
}

std::vector<EmpiricalSweepPoint> empirical_error_sweep(
    SweepParam param, std::span<const double> grid, const ToyGmmSpec& base,
    const RunConfig& base_run, std::size_t runs, bool hold_k0) {
  if (grid.empty()) throw UsageError("sweep: empty grid");
  if (runs == 0) throw UsageError("sweep: need at least one run");
  const double base_k0 = k0_value(base.pairs, base.components, base.eta);

  std::vector<EmpiricalSweepPoint> points(grid.size());
  for (std::size_t g = 0; g < grid.size(); ++g) {
    EmpiricalSweepPoint& point = points[g];
    point.param_value = grid[g];
    try {
      ToyGmmSpec spec = base;
      RunConfig run = base_run;
      switch (param) {
        case SweepParam::k:
          run.k = static_cast<std::size_t>(grid[g]);
          if (run.k == 0) throw UsageError("sweep: k must be at least 1");
          break;
        case SweepParam::eta:
          spec.eta = grid[g];
          break;
        case SweepParam::m:
          spec.pairs = static_cast<std::size_t>(grid[g]);
          break;
        case SweepParam::t_components:
          spec.components = static_cast<std::size_t>(grid[g]);
          if (hold_k0) {
            spec.pairs = static_cast<std::size_t>(
                std::llround(base_k0 * grid[g] / (1.0 - spec.eta)));
          }
          break;
      }
      point.k0 = k0_value(spec.pairs, spec.components, spec.eta);
      double error_sum = 0.0;
      double threshold_sum = 0.0;
      for (std::size_t r = 0; r < runs; ++r) {
        spec.seed = substream(base.seed, Stream::generic, r).next();
        run.seed = spec.seed;
        const PairedDataset ds = generate_multidim_toy(spec);
        // the toy scoring path ignores group tokens: same-concept rows are
        // exactly the density signal
        const ModalityStats stats = run.sim == SimKernel::neg_abs
                                        ? ModalityStats::identity()
                                        : estimate_modality_stats(ds, run);
        PairedDataset ungrouped;
        ungrouped.videos = ds.videos;
        ungrouped.captions = ds.captions;
        ungrouped.truth = ds.truth;
        const KnnResult knn = knn_scores(ungrouped, stats, run);
        const std::vector<double> p_hat = normalize_phat(knn.s_bar);
        const EvalReport report = evaluate(p_hat, ds.truth);
        error_sum += report.error_at_best_f1;
        threshold_sum += report.best_f1_threshold;
      }
      point.mean_error = error_sum / static_cast<double>(runs);
      point.mean_threshold = threshold_sum / static_cast<double>(runs);
    } catch (const std::exception& e) {
      point.failed = true;
      point.error = e.what();
    }
  }
  return points;
}

}  // namespace mmde
