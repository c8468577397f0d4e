#include "mmde/density.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mmde/error.hpp"
#include "mmde/parallel.hpp"

namespace mmde {

namespace {

struct Candidate {
  double sim;
  std::uint32_t index;
};

// total order: higher similarity first, ties by ascending index
inline bool better(const Candidate& a, const Candidate& b) {
  return a.sim > b.sim || (a.sim == b.sim && a.index < b.index);
}

constexpr std::size_t kTile = 256;  // candidate rows per cache tile

}  // namespace

KnnResult knn_scores(const PairedDataset& dataset, const ModalityStats& stats,
                     const RunConfig& cfg) {
  validate_config(cfg);
  const std::size_t m = dataset.size();
  const std::size_t k = cfg.k;
  if (cfg.sim == SimKernel::neg_abs &&
      (dataset.videos.dim != 1 || dataset.captions.dim != 1)) {
    throw DataError(data_errc::bad_value,
                    "knn_scores: neg_abs kernel needs 1-d rows");
  }

  // per-row admissible counts: everything but self and same-group rows
  if (dataset.has_groups()) {
    std::vector<std::size_t> group_sizes;
    for (const auto gid : dataset.group_ids) {
      if (gid >= group_sizes.size()) group_sizes.resize(gid + 1, 0);
      ++group_sizes[gid];
    }
    for (std::size_t i = 0; i < m; ++i) {
      const std::size_t admissible = m - group_sizes[dataset.group_ids[i]];
      if (k >= admissible) {
        throw DataError(
            data_errc::k_too_large,
            "knn_scores: k=" + std::to_string(k) + " too large for row " +
                std::to_string(i) + " (" + std::to_string(admissible) +
                " rows outside its group)");
      }
    }
  } else if (k >= m - 1 || m < 2) {
    throw DataError(data_errc::k_too_large,
                    "knn_scores: k=" + std::to_string(k) +
                        " too large for row 0 (" + std::to_string(m - 1) +
                        " admissible rows)");
  }

  KnnResult result;
  result.rows = m;
  result.k = k;
  result.neighbors.resize(m * k);
  result.s_bar.resize(m);

  const bool grouped = dataset.has_groups();
  parallel_for(m, cfg.threads, [&](std::size_t begin, std::size_t end) {
    std::vector<Candidate> top;
    top.reserve(k + 1);
    for (std::size_t i = begin; i < end; ++i) {
      top.clear();
      const std::uint32_t gid = grouped ? dataset.group_ids[i] : 0;
      for (std::size_t tile = 0; tile < m; tile += kTile) {
        const std::size_t tile_end = std::min(m, tile + kTile);
        for (std::size_t j = tile; j < tile_end; ++j) {
          if (j == i) continue;
          if (grouped && dataset.group_ids[j] == gid) continue;
          const Candidate cand{
              multimodal_sim(i, j, dataset, stats, cfg.combiner, cfg.sim),
              static_cast<std::uint32_t>(j)};
          if (top.size() == k && !better(cand, top.back())) continue;
          auto pos = std::upper_bound(
              top.begin(), top.end(), cand,
              [](const Candidate& a, const Candidate& b) { return better(a, b); });
          top.insert(pos, cand);
          if (top.size() > k) top.pop_back();
        }
      }
      double sum = 0.0;
      for (std::size_t r = 0; r < k; ++r) {
        result.neighbors[i * k + r] = top[r].index;
        sum += top[r].sim;
      }
      result.s_bar[i] = sum / static_cast<double>(k);
    }
  });
  // TODO: candidate pruning for the min combiner (a top-K pair must beat the
  // running threshold in both modalities), worthwhile beyond ~10^5 rows.
  return result;
}

std::vector<double> normalize_phat(std::span<const double> s_bar) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (const double s : s_bar) {
    lo = std::min(lo, s);
    hi = std::max(hi, s);
  }
  std::vector<double> p_hat(s_bar.size());
  if (hi > lo) {
    const double range = hi - lo;
    for (std::size_t i = 0; i < s_bar.size(); ++i) {
      p_hat[i] = (s_bar[i] - lo) / range;
    }
  } else {
    std::fill(p_hat.begin(), p_hat.end(), 1.0);
  }
  return p_hat;
}

std::vector<std::uint8_t> hard_threshold(std::span<const double> p_hat,
                                         double theta) {
  std::vector<std::uint8_t> keep(p_hat.size());
  for (std::size_t i = 0; i < p_hat.size(); ++i) {
    keep[i] = p_hat[i] >= theta ? 1 : 0;
  }
  return keep;
}

EvalReport evaluate(std::span<const double> p_hat,
                    std::span<const std::uint8_t> truth) {
  if (p_hat.size() != truth.size()) {
    throw DataError(data_errc::row_mismatch,
                    "evaluate: scores and labels differ in length");
  }
  std::size_t positives = 0;
  for (const auto t : truth) {
    if (t > 1) {
      throw DataError(data_errc::bad_labels, "evaluate: labels must be 0/1");
    }
    positives += t;
  }
  const std::size_t negatives = truth.size() - positives;
  if (positives == 0 || negatives == 0) {
    throw DataError(data_errc::bad_labels,
                    "evaluate: need at least one positive and one negative");
  }

  // sort values ascending, keeping labels; sweep thresholds over distinct values
  std::vector<std::size_t> order(p_hat.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return p_hat[a] < p_hat[b];
  });

  EvalReport report;
  // suffix counts of positives: predictions at threshold v keep all >= v
  std::size_t tp = positives;
  std::size_t fp = negatives;
  std::size_t idx = 0;
  double best_f1 = -1.0;
  while (idx < order.size()) {
    const double value = p_hat[order[idx]];
    // drop everything below `value` from the kept set
    // (counts currently reflect threshold <= previous distinct value)
    const double precision =
        static_cast<double>(tp) / static_cast<double>(tp + fp);
    const double recall =
        static_cast<double>(tp) / static_cast<double>(positives);
    const double f1 = (precision + recall) > 0.0
                          ? 2.0 * precision * recall / (precision + recall)
                          : 0.0;
    report.pr_curve.push_back({value, precision, recall, f1});
    if (f1 > best_f1) {
      best_f1 = f1;
      report.best_f1_threshold = value;
      report.error_at_best_f1 = 1.0 - precision;
    }
    // advance past all rows sharing this value
    while (idx < order.size() && p_hat[order[idx]] == value) {
      if (truth[order[idx]]) {
        --tp;
      } else {
        --fp;
      }
      ++idx;
    }
  }
  report.best_f1 = best_f1;

  auto cdf = [&](std::uint8_t label) {
    std::vector<std::pair<double, double>> points;
    const std::size_t total = label ? positives : negatives;
    std::size_t seen = 0;
    for (std::size_t r = 0; r < order.size(); ++r) {
      if (truth[order[r]] != label) continue;
      ++seen;
      const double value = p_hat[order[r]];
      const double frac = static_cast<double>(seen) / static_cast<double>(total);
      if (!points.empty() && points.back().first == value) {
        points.back().second = frac;
      } else {
        points.emplace_back(value, frac);
      }
    }
    return points;
  };
  report.cdf_pos = cdf(1);
  report.cdf_neg = cdf(0);
  return report;
}

}  // namespace mmde
