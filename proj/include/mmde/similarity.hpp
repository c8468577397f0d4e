#ifndef MMDE_SIMILARITY_HPP
#define MMDE_SIMILARITY_HPP

#include <cstdint>
#include <span>

#include "mmde/dataset.hpp"

namespace mmde {

// Sample mean/std of within-modality pairwise similarities, used to z-score
// the two sides before combining them into a pair-level similarity.
struct ModalityStats {
  double mu_v = 0.0;
  double sigma_v = 1.0;
  double mu_c = 0.0;
  double sigma_c = 1.0;
  std::size_t sample_size = 0;
  std::uint64_t seed = 0;

  // no normalization (mu=0, sigma=1); the 1-d kernel mode uses this
  static ModalityStats identity() { return {}; }
};

double cosine_sim(std::span<const float> x, std::span<const float> y);
double neg_abs_sim(double x, double y);

// Mean/std over all unordered row pairs per modality when their count fits in
// cfg.stats_sample, otherwise over cfg.stats_sample pairs drawn uniformly
// without replacement (seeded). Std uses the n-1 denominator.
ModalityStats estimate_modality_stats(const PairedDataset& dataset,
                                      const RunConfig& cfg);

// Similarity between pairs i and j: per-modality kernel values are z-scored
// with `stats` and combined by min or mean. The neg_abs kernel skips the
// z-scoring (identity stats) so that the combined value is the plain average
// of the two scalar similarities.
double multimodal_sim(std::size_t i, std::size_t j, const PairedDataset& ds,
                      const ModalityStats& stats, Combiner combiner,
                      SimKernel kernel);

}  // namespace mmde

#endif  // MMDE_SIMILARITY_HPP
