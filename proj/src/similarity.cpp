#include "mmde/similarity.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "mmde/error.hpp"
#include "mmde/rng.hpp"

namespace mmde {

namespace {

// unordered pair index u in [0, M(M-1)/2) -> (i, j) with i < j
std::pair<std::size_t, std::size_t> decode_pair(std::uint64_t u,
                                                std::uint64_t m) {
  // solve i as the largest row whose triangle offset is <= u
  const double md = static_cast<double>(m);
  double guess =
      std::floor((2.0 * md - 1.0 -
                  std::sqrt((2.0 * md - 1.0) * (2.0 * md - 1.0) -
                            8.0 * static_cast<double>(u))) /
                 2.0);
  std::uint64_t i = guess < 0.0 ? 0 : static_cast<std::uint64_t>(guess);
  auto offset = [m](std::uint64_t r) { return r * m - r * (r + 1) / 2; };
  while (i > 0 && offset(i) > u) --i;
  while (offset(i + 1) <= u) ++i;
  const std::uint64_t j = i + 1 + (u - offset(i));
  return {i, j};
}

// Floyd's algorithm: n distinct values from [0, total)
std::vector<std::uint64_t> sample_without_replacement(std::uint64_t total,
                                                      std::uint64_t n,
                                                      SplitMix64& rng) {
  std::unordered_set<std::uint64_t> seen;
  seen.reserve(n * 2);
  std::vector<std::uint64_t> picked;
  picked.reserve(n);
  for (std::uint64_t j = total - n; j < total; ++j) {
    const std::uint64_t r = rng.next_below(j + 1);
    const std::uint64_t v = seen.insert(r).second ? r : j;
    if (v != r) seen.insert(v);
    picked.push_back(v);
  }
  std::sort(picked.begin(), picked.end());
  return picked;
}

double kernel_value(SimKernel kernel, std::span<const float> a,
                    std::span<const float> b) {
  if (kernel == SimKernel::cosine) return cosine_sim(a, b);
  return neg_abs_sim(a[0], b[0]);
}

struct Accumulator {
  double sum = 0.0;
  double sum_sq = 0.0;
  void add(double v) {
    sum += v;
    sum_sq += v * v;
  }
};

}  // namespace

double cosine_sim(std::span<const float> x, std::span<const float> y) {
  if (x.size() != y.size()) {
    throw DataError(data_errc::row_mismatch,
                    "cosine_sim: dimension mismatch");
  }
  double dot = 0.0, nx = 0.0, ny = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double a = x[i];
    const double b = y[i];
    dot += a * b;
    nx += a * a;
    ny += b * b;
  }
  if (nx == 0.0 || ny == 0.0) {
    throw DataError(data_errc::zero_norm, "cosine_sim: zero-norm vector");
  }
  return dot / (std::sqrt(nx) * std::sqrt(ny));
}

double neg_abs_sim(double x, double y) { return -std::fabs(x - y); }

ModalityStats estimate_modality_stats(const PairedDataset& dataset,
                                      const RunConfig& cfg) {
  const std::size_t m = dataset.size();
  if (m < 2) {
    throw DataError(data_errc::bad_value,
                    "estimate_modality_stats: need at least 2 rows");
  }
  if (cfg.sim == SimKernel::neg_abs &&
      (dataset.videos.dim != 1 || dataset.captions.dim != 1)) {
    throw DataError(data_errc::bad_value,
                    "estimate_modality_stats: neg_abs kernel needs 1-d rows");
  }
  const std::uint64_t total =
      static_cast<std::uint64_t>(m) * (m - 1) / 2;
  Accumulator video_acc, caption_acc;
  std::size_t n = 0;
  auto accumulate = [&](std::size_t i, std::size_t j) {
    video_acc.add(
        kernel_value(cfg.sim, dataset.videos.row(i), dataset.videos.row(j)));
    caption_acc.add(kernel_value(cfg.sim, dataset.captions.row(i),
                                 dataset.captions.row(j)));
    ++n;
  };
  if (total <= cfg.stats_sample) {
    for (std::size_t i = 0; i + 1 < m; ++i) {
      for (std::size_t j = i + 1; j < m; ++j) accumulate(i, j);
    }
  } else {
    SplitMix64 rng = substream(cfg.seed, Stream::stats_pairs);
    for (const std::uint64_t u :
         sample_without_replacement(total, cfg.stats_sample, rng)) {
      const auto [i, j] = decode_pair(u, m);
      accumulate(i, j);
    }
  }
  auto finish = [&](const Accumulator& acc, const char* side) {
    const double mean = acc.sum / static_cast<double>(n);
    const double var =
        (acc.sum_sq - static_cast<double>(n) * mean * mean) /
        static_cast<double>(n - 1);
    const double sd = var > 0.0 ? std::sqrt(var) : 0.0;
    if (!(sd > 0.0)) {
      throw DataError(data_errc::zero_variance,
                      std::string("estimate_modality_stats: zero similarity "
                                  "variance in ") +
                          side + " modality");
    }
    return std::pair<double, double>{mean, sd};
  };
  ModalityStats stats;
  std::tie(stats.mu_v, stats.sigma_v) = finish(video_acc, "video");
  std::tie(stats.mu_c, stats.sigma_c) = finish(caption_acc, "caption");
  stats.sample_size = n;
  stats.seed = cfg.seed;
  return stats;
}

double multimodal_sim(std::size_t i, std::size_t j, const PairedDataset& ds,
                      const ModalityStats& stats, Combiner combiner,
                      SimKernel kernel) {
  double av, ac;
  if (kernel == SimKernel::neg_abs) {
    av = neg_abs_sim(ds.videos.row(i)[0], ds.videos.row(j)[0]);
    ac = neg_abs_sim(ds.captions.row(i)[0], ds.captions.row(j)[0]);
  } else {
    av = (cosine_sim(ds.videos.row(i), ds.videos.row(j)) - stats.mu_v) /
         stats.sigma_v;
    ac = (cosine_sim(ds.captions.row(i), ds.captions.row(j)) - stats.mu_c) /
         stats.sigma_c;
  }
  return combiner == Combiner::min ? std::min(av, ac) : 0.5 * (av + ac);
}

}  // namespace mmde
