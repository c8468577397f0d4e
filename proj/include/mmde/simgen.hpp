#ifndef MMDE_SIMGEN_HPP
#define MMDE_SIMGEN_HPP

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mmde/dataset.hpp"
#include "mmde/theory.hpp"

namespace mmde {

// Multidimensional two-modality Gaussian-mixture dataset spec. Component
// means are uniform on [mean_lo, mean_hi]^d, diagonal covariance entries
// uniform on (cov_lo, cov_hi]. A pair is wrongly associated with probability
// eta: its two sides then come from different components.
struct ToyGmmSpec {
  std::size_t components = 50;  // T
  double eta = 0.5;
  std::size_t pairs = 1250;  // M
  std::size_t d_v = 128;
  std::size_t d_c = 128;
  double mean_lo = 0.0;
  double mean_hi = 1.0;
  double cov_lo = 0.0;
  double cov_hi = 0.3;
  std::uint64_t seed = 1;
};

void validate_toy_spec(const ToyGmmSpec& spec);

// Labeled dataset with group tokens set to the video-side component index.
// Fully determined by the spec (per-pair substreams).
PairedDataset generate_multidim_toy(const ToyGmmSpec& spec);

// 1-d labeled pairs from a fixed scalar mixture: both sides share a component
// with probability 1-eta, otherwise the two components differ.
PairedDataset generate_scalar_pairs(const ScalarGmm& gmm, double eta,
                                    std::size_t pairs, std::uint64_t seed);

// One grid point of the data-driven sweep: generate a toy dataset, run the
// scoring pipeline, evaluate against the labels, average over runs.
struct EmpiricalSweepPoint {
  double param_value = 0.0;
  double mean_error = 0.0;      // 1 - precision at the best-F1 threshold
  double mean_threshold = 0.0;  // best-F1 threshold
  double k0 = 0.0;
  bool failed = false;
  std::string error;
};

std::vector<EmpiricalSweepPoint> empirical_error_sweep(
    SweepParam param, std::span<const double> grid, const ToyGmmSpec& base,
    const RunConfig& base_run, std::size_t runs, bool hold_k0 = false);

}  // namespace mmde

#endif  // MMDE_SIMGEN_HPP
