#ifndef MMDE_THEORY_HPP
#define MMDE_THEORY_HPP

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mmde/rng.hpp"

namespace mmde {

// 1-d Gaussian mixture with T components per modality. Components must be
// 6-sigma separated: |mu_i - mu_j| > 6 * max(sigma) within each modality.
struct ScalarGmm {
  std::vector<double> mu_x, sigma_x;  // video side
  std::vector<double> mu_y, sigma_y;  // caption side

  std::size_t components() const { return mu_x.size(); }
};

void validate_gmm(const ScalarGmm& gmm);

// Configuration for the tail-bound evaluation.
struct BoundConfig {
  std::size_t k = 8;
  double eta = 0.5;      // fraction of wrongly associated pairs
  std::size_t m = 1000;  // dataset size
  std::vector<double> t_grid;  // empty -> integers 1..100
  std::size_t repetitions = 10;
  std::uint64_t seed = 1;
  unsigned threads = 0;

  std::vector<double> resolved_t_grid() const;
};

void validate_bound_config(const BoundConfig& cfg);

// log E[exp(-t|X|)] for X ~ N(mu, sigma^2); valid for any real t, evaluated
// in log space so large sigma*t does not overflow.
double log_folded_mgf(double t, double mu, double sigma);
double folded_mgf(double t, double mu, double sigma);

// log probability that exactly n of the M pairs share the query pair's
// component pair, given its association label. Binomial with success
// probability (1-eta)/T (label 1) or eta/(T(T-1)) (label 0).
double log_prob_co_concept_count(std::size_t n, int label,
                                 const BoundConfig& cfg, std::size_t T);

// Evaluation context: the query's component pair (a, b), the conditioning
// point (x, y), and the component pairs assigned to non-co-concept neighbors.
struct ZContext {
  std::size_t a = 0;
  std::size_t b = 0;
  double x = 0.0;
  double y = 0.0;
  std::vector<std::pair<std::uint32_t, std::uint32_t>> filler;  // k entries
};

// uniform component pair (label 1: a == b), query at the component centers,
// k filler pairs != (a, b)
ZContext draw_context(SplitMix64& rng, const ScalarGmm& gmm, int label,
                      std::size_t k);

// log MGF of the mean neighbor similarity given n co-concept pairs: a product
// of folded-normal factors at t/(2K), min(n,K) of them from the query's own
// component pair and K-n from the assigned filler pairs.
double log_mgf_mean_sim_given_count(double t, std::size_t n,
                                    const ZContext& ctx, const ScalarGmm& gmm,
                                    std::size_t k);

// binomial mixture over the co-concept count; `omitted` bounds the truncated
// upper-tail mass (the sum over n >= K collapses to one closed term, so the
// truncation applies only inside that tail weight)
struct LogMgf {
  double log_mgf;
  double omitted;
};
LogMgf log_mgf_mean_sim(double t, int label, const ZContext& ctx,
                        const ScalarGmm& gmm, const BoundConfig& cfg);

// One-sided tail bounds at threshold tau:
//   bound0 >= P(mean sim >= tau | label 0) = M0(t) * exp(-t*tau)
//   bound1 >= P(mean sim <= tau | label 1) = M1(-t) * exp(t*tau)
// Values above 1 are returned as-is (vacuous).
struct ChernoffPair {
  double bound0;
  double bound1;
};
ChernoffPair chernoff_bounds(double tau, double t, double log_mgf0_at_t,
                             double log_mgf1_at_neg_t);

// Result of optimizing the equalized bound over the t grid.
struct BoundResult {
  struct PerT {
    double t;
    double bound0;
    double bound1;
  };
  double tau_star = 0.0;  // threshold equalizing the two bounds at best_t
  double bound = 1.0;     // equalized bound at best_t, clamped to [0, 1]
  double best_t = 0.0;
  bool vacuous = false;  // true when the bound exceeds 1 everywhere
  double k0 = 0.0;       // (M/T) * (1 - eta)
  std::vector<PerT> per_t;
};

// Mixture model sampler: component means uniform on [lo, hi], sigmas uniform
// on (0, min-gap/6], means resampled if a gap degenerates to zero.
struct GmmSampler {
  std::size_t components = 50;
  double lo = 0.0;
  double hi = 100.0;
};

ScalarGmm sample_scalar_gmm(const GmmSampler& sampler, SplitMix64& rng);

// Equalized Chernoff bound minimized over the t grid, averaged over
// `repetitions` draws. The first overload redraws the mixture each
// repetition; the second keeps it fixed and redraws only the context.
BoundResult optimal_bound(const BoundConfig& cfg, const GmmSampler& sampler);
BoundResult optimal_bound(const BoundConfig& cfg, const ScalarGmm& gmm);

enum class SweepParam { k, eta, m, t_components };

struct SweepPoint {
  double param_value = 0.0;
  BoundResult result;
  bool failed = false;
  std::string error;
};

// One bound per grid value; errors at individual points are recorded without
// aborting the sweep. With hold_k0, sweeping T rescales M so that
// (M/T)*(1-eta) stays at its base value.
std::vector<SweepPoint> sweep_bound(SweepParam param,
                                    std::span<const double> grid,
                                    const BoundConfig& base,
                                    const GmmSampler& sampler,
                                    bool hold_k0 = false);

double k0_value(std::size_t m, std::size_t T, double eta);

}  // namespace mmde

#endif  // MMDE_THEORY_HPP
