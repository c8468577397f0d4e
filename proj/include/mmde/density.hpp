#ifndef MMDE_DENSITY_HPP
#define MMDE_DENSITY_HPP

#include <cstdint>
#include <span>
#include <vector>

#include "mmde/dataset.hpp"
#include "mmde/similarity.hpp"

namespace mmde {

// Exact k-nearest-neighbor output: per row, the K neighbor indices ordered by
// descending similarity (ties by ascending index) and the mean similarity to
// them.
struct KnnResult {
  std::size_t rows = 0;
  std::size_t k = 0;
  std::vector<std::uint32_t> neighbors;  // rows*k, row-major, rank order
  std::vector<double> s_bar;

  std::span<const std::uint32_t> row(std::size_t i) const {
    return {neighbors.data() + i * k, k};
  }
};

// Brute-force exact search over all admissible rows (self excluded; rows
// sharing the query's group excluded when groups are present). Parallel over
// queries; the output is identical for any thread count.
KnnResult knn_scores(const PairedDataset& dataset, const ModalityStats& stats,
                     const RunConfig& cfg);

// (s - min) / (max - min); all ones when max == min
std::vector<double> normalize_phat(std::span<const double> s_bar);

// keep[i] = p_hat[i] >= theta
std::vector<std::uint8_t> hard_threshold(std::span<const double> p_hat,
                                         double theta);

// Threshold sweep of keep = (p_hat >= theta) against binary ground truth.
struct EvalReport {
  struct PrPoint {
    double threshold;
    double precision;
    double recall;
    double f1;
  };
  std::vector<PrPoint> pr_curve;  // one point per distinct p_hat, ascending
  std::vector<std::pair<double, double>> cdf_pos;  // (value, cum fraction)
  std::vector<std::pair<double, double>> cdf_neg;
  double best_f1_threshold = 0.0;
  double best_f1 = 0.0;
  double error_at_best_f1 = 0.0;  // 1 - precision at the best-F1 threshold
};

EvalReport evaluate(std::span<const double> p_hat,
                    std::span<const std::uint8_t> truth);

}  // namespace mmde

#endif  // MMDE_DENSITY_HPP
