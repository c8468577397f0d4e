#include "mmde/theory.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mmde/error.hpp"
#include "mmde/logspace.hpp"
#include "mmde/parallel.hpp"

namespace mmde {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double co_concept_rate(int label, double eta, std::size_t T) {
  if (label == 1) return (1.0 - eta) / static_cast<double>(T);
  if (T < 2) {
    throw DataError(data_errc::bad_value,
                    "log_prob_co_concept_count: label 0 needs T >= 2");
  }
  return eta / (static_cast<double>(T) * static_cast<double>(T - 1));
}

}  // namespace

void validate_gmm(const ScalarGmm& gmm) {
  const std::size_t T = gmm.components();
  if (T < 2 || gmm.sigma_x.size() != T || gmm.mu_y.size() != T ||
      gmm.sigma_y.size() != T) {
    throw DataError(data_errc::bad_value,
                    "ScalarGmm: need T >= 2 components on both sides");
  }
  auto check_side = [T](const std::vector<double>& mu,
                        const std::vector<double>& sigma, const char* side) {
    double sigma_max = 0.0;
    for (const double s : sigma) {
      if (!(s > 0.0)) {
        throw DataError(data_errc::bad_value,
                        std::string("ScalarGmm: non-positive sigma on ") + side);
      }
      sigma_max = std::max(sigma_max, s);
    }
    for (std::size_t i = 0; i + 1 < T; ++i) {
      for (std::size_t j = i + 1; j < T; ++j) {
        if (!(std::fabs(mu[i] - mu[j]) > 6.0 * sigma_max)) {
          throw DataError(
              data_errc::bad_value,
              std::string("ScalarGmm: components not 6-sigma separated on ") +
                  side);
        }
      }
    }
  };
  check_side(gmm.mu_x, gmm.sigma_x, "video side");
  check_side(gmm.mu_y, gmm.sigma_y, "caption side");
}

std::vector<double> BoundConfig::resolved_t_grid() const {
  if (!t_grid.empty()) return t_grid;
  std::vector<double> grid(100);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    grid[i] = static_cast<double>(i + 1);
  }
  return grid;
}

void validate_bound_config(const BoundConfig& cfg) {
  if (cfg.k == 0) throw UsageError("bound config: k must be at least 1");
  if (cfg.m < cfg.k + 1) {
    throw UsageError("bound config: m must be at least k+1");
  }
  if (!(cfg.eta >= 0.0 && cfg.eta < 1.0)) {
    throw UsageError("bound config: eta must lie in [0, 1)");
  }
  if (cfg.repetitions == 0) {
    throw UsageError("bound config: repetitions must be at least 1");
  }
  for (const double t : cfg.t_grid) {
    if (!(t > 0.0)) throw UsageError("bound config: t grid must be positive");
  }
}

double log_folded_mgf(double t, double mu, double sigma) {
  if (!(sigma > 0.0)) {
    throw DataError(data_errc::bad_value, "log_folded_mgf: sigma must be > 0");
  }
  // E[e^{-t|X|}] for X ~ N(mu, sigma^2), from the two half-line integrals
  const double base = 0.5 * sigma * sigma * t * t;
  const double r = mu / sigma;
  const double upper = base - mu * t + log_norm_cdf(r - sigma * t);
  const double lower = base + mu * t + log_norm_cdf(-r - sigma * t);
  return log_add(upper, lower);
}

double folded_mgf(double t, double mu, double sigma) {
  return std::exp(log_folded_mgf(t, mu, sigma));
}

double log_prob_co_concept_count(std::size_t n, int label,
                                 const BoundConfig& cfg, std::size_t T) {
  const double q = co_concept_rate(label, cfg.eta, T);
  return log_binom_pmf(cfg.m, n, q);
}

ZContext draw_context(SplitMix64& rng, const ScalarGmm& gmm, int label,
                      std::size_t k) {
  const std::size_t T = gmm.components();
  ZContext ctx;
  ctx.a = rng.next_below(T);
  ctx.b = label == 1 ? ctx.a : (ctx.a + 1 + rng.next_below(T - 1)) % T;
  ctx.x = gmm.mu_x[ctx.a];
  ctx.y = gmm.mu_y[ctx.b];
  ctx.filler.reserve(k);
  while (ctx.filler.size() < k) {
    const auto alpha = static_cast<std::uint32_t>(rng.next_below(T));
    const auto beta = static_cast<std::uint32_t>(rng.next_below(T));
    if (alpha == ctx.a && beta == ctx.b) continue;
    ctx.filler.emplace_back(alpha, beta);
  }
  return ctx;
}

double log_mgf_mean_sim_given_count(double t, std::size_t n,
                                    const ZContext& ctx, const ScalarGmm& gmm,
                                    std::size_t k) {
  const double tk = t / (2.0 * static_cast<double>(k));
  const std::size_t co = std::min(n, k);
  double log_mgf = 0.0;
  if (co > 0) {
    const double factor =
        log_folded_mgf(tk, gmm.mu_x[ctx.a] - ctx.x, gmm.sigma_x[ctx.a]) +
        log_folded_mgf(tk, gmm.mu_y[ctx.b] - ctx.y, gmm.sigma_y[ctx.b]);
    log_mgf += static_cast<double>(co) * factor;
  }
  for (std::size_t j = 0; j < k - co; ++j) {
    const auto [alpha, beta] = ctx.filler[j];
    log_mgf += log_folded_mgf(tk, gmm.mu_x[alpha] - ctx.x, gmm.sigma_x[alpha]);
    log_mgf += log_folded_mgf(tk, gmm.mu_y[beta] - ctx.y, gmm.sigma_y[beta]);
  }
  return log_mgf;
}

namespace {

// Binomial weights over the co-concept count. The conditional MGF is constant
// for n >= k, so weights collapse to k individual terms plus one tail mass.
struct MixtureWeights {
  std::vector<double> log_w;  // n = 0 .. min(k, m+1)-1
  double log_tail = kNegInf;  // total mass at n >= k
  double omitted = 0.0;       // bound on mass dropped by the tail window
};

MixtureWeights co_concept_weights(int label, const BoundConfig& cfg,
                                  std::size_t T) {
  const std::size_t k = cfg.k;
  const double q = co_concept_rate(label, cfg.eta, T);
  MixtureWeights weights;
  const std::size_t head = std::min<std::size_t>(k, cfg.m + 1);
  weights.log_w.resize(head);
  for (std::size_t n = 0; n < head; ++n) {
    weights.log_w[n] = log_binom_pmf(cfg.m, n, q);
  }
  if (k <= cfg.m) {
    // sum the pmf over a window past the mode, truncating once the remainder
    // is provably negligible
    const double mean = static_cast<double>(cfg.m) * q;
    const double sd = std::sqrt(std::max(mean * (1.0 - q), 1.0));
    const std::size_t hi = std::min<std::size_t>(
        cfg.m,
        static_cast<std::size_t>(std::max(mean, double(k)) + 40.0 * sd + 50.0));
    double tail = kNegInf;
    double last = kNegInf;
    for (std::size_t n = k; n <= hi; ++n) {
      last = log_binom_pmf(cfg.m, n, q);
      tail = log_add(tail, last);
    }
    weights.log_tail = tail;
    if (hi < cfg.m && last != kNegInf) {
      weights.omitted = std::exp(last) * static_cast<double>(cfg.m - hi);
    }
  }
  return weights;
}

double mixture_log_mgf(double t, const MixtureWeights& weights,
                       const ZContext& ctx, const ScalarGmm& gmm,
                       std::size_t k) {
  const double tk = t / (2.0 * static_cast<double>(k));
  const double co_factor =
      log_folded_mgf(tk, gmm.mu_x[ctx.a] - ctx.x, gmm.sigma_x[ctx.a]) +
      log_folded_mgf(tk, gmm.mu_y[ctx.b] - ctx.y, gmm.sigma_y[ctx.b]);
  // prefix sums of filler factors: fill[j] = sum of the first j of them
  std::vector<double> fill(k + 1, 0.0);
  for (std::size_t j = 0; j < k; ++j) {
    const auto [alpha, beta] = ctx.filler[j];
    fill[j + 1] =
        fill[j] +
        log_folded_mgf(tk, gmm.mu_x[alpha] - ctx.x, gmm.sigma_x[alpha]) +
        log_folded_mgf(tk, gmm.mu_y[beta] - ctx.y, gmm.sigma_y[beta]);
  }
  double total = kNegInf;
  for (std::size_t n = 0; n < weights.log_w.size(); ++n) {
    if (weights.log_w[n] == kNegInf) continue;
    const double cond = static_cast<double>(n) * co_factor + fill[k - n];
    total = log_add(total, weights.log_w[n] + cond);
  }
  if (weights.log_tail != kNegInf) {
    total = log_add(total,
                    weights.log_tail + static_cast<double>(k) * co_factor);
  }
  return total;
}

}  // namespace

LogMgf log_mgf_mean_sim(double t, int label, const ZContext& ctx,
                        const ScalarGmm& gmm, const BoundConfig& cfg) {
  const MixtureWeights weights =
      co_concept_weights(label, cfg, gmm.components());
  return {mixture_log_mgf(t, weights, ctx, gmm, cfg.k), weights.omitted};
}

ChernoffPair chernoff_bounds(double tau, double t, double log_mgf0_at_t,
                             double log_mgf1_at_neg_t) {
  return {std::exp(log_mgf0_at_t - t * tau),
          std::exp(log_mgf1_at_neg_t + t * tau)};
}

ScalarGmm sample_scalar_gmm(const GmmSampler& sampler, SplitMix64& rng) {
  const std::size_t T = sampler.components;
  if (T < 2) {
    throw DataError(data_errc::bad_value, "sample_scalar_gmm: need T >= 2");
  }
  auto draw_side = [&](std::vector<double>& mu, std::vector<double>& sigma) {
    double min_gap = 0.0;
    do {
      mu.resize(T);
      for (auto& v : mu) {
        v = sampler.lo + (sampler.hi - sampler.lo) * rng.next_double();
      }
      min_gap = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i + 1 < T; ++i) {
        for (std::size_t j = i + 1; j < T; ++j) {
          min_gap = std::min(min_gap, std::fabs(mu[i] - mu[j]));
        }
      }
    } while (!(min_gap > 0.0));
    sigma.resize(T);
    // uniform on (0, gap/6], shrunk a hair so the separation stays strict
    const double cap = min_gap / 6.0 * (1.0 - 1e-12);
    for (auto& s : sigma) s = cap * rng.next_double_open();
  };
  ScalarGmm gmm;
  draw_side(gmm.mu_x, gmm.sigma_x);
  draw_side(gmm.mu_y, gmm.sigma_y);
  validate_gmm(gmm);
  return gmm;
}

namespace {

BoundResult optimal_bound_impl(const BoundConfig& cfg,
                               const GmmSampler* sampler,
                               const ScalarGmm* fixed) {
  validate_bound_config(cfg);
  const std::vector<double> grid = cfg.resolved_t_grid();
  if (grid.empty()) throw UsageError("bound config: empty t grid");
  const std::size_t T =
      fixed ? fixed->components() : sampler->components;

  const MixtureWeights weights0 = co_concept_weights(0, cfg, T);
  const MixtureWeights weights1 = co_concept_weights(1, cfg, T);

  // Each repetition is one experiment: optimize (tau, t) for its model and
  // context, clamp the resulting probability bound to [0, 1], then average
  // the repetitions. per_t curves are averaged the same way.
  std::vector<double> sum_b0(grid.size(), 0.0);
  std::vector<double> sum_b1(grid.size(), 0.0);
  double sum_bound = 0.0;
  double sum_tau = 0.0;
  double sum_best_t = 0.0;
  std::size_t informative = 0;
  for (std::size_t rep = 0; rep < cfg.repetitions; ++rep) {
    ScalarGmm drawn;
    const ScalarGmm* gmm = fixed;
    if (!fixed) {
      SplitMix64 model_rng = substream(cfg.seed, Stream::bound_model, rep, T);
      drawn = sample_scalar_gmm(*sampler, model_rng);
      gmm = &drawn;
    }
    SplitMix64 ctx_rng = substream(cfg.seed, Stream::bound_context, rep, T);
    const ZContext ctx1 = draw_context(ctx_rng, *gmm, 1, cfg.k);
    const ZContext ctx0 = draw_context(ctx_rng, *gmm, 0, cfg.k);
    double best_log_eq = std::numeric_limits<double>::infinity();
    double best_tau = 0.0;
    double best_t = grid.front();
    for (std::size_t ti = 0; ti < grid.size(); ++ti) {
      const double t = grid[ti];
      const double log_m0 = mixture_log_mgf(t, weights0, ctx0, *gmm, cfg.k);
      const double log_m1 = mixture_log_mgf(-t, weights1, ctx1, *gmm, cfg.k);
      const double tau = (log_m0 - log_m1) / (2.0 * t);
      const auto pair = chernoff_bounds(tau, t, log_m0, log_m1);
      sum_b0[ti] += std::clamp(pair.bound0, 0.0, 1.0);
      sum_b1[ti] += std::clamp(pair.bound1, 0.0, 1.0);
      const double log_eq = 0.5 * (log_m0 + log_m1);
      if (log_eq < best_log_eq) {
        best_log_eq = log_eq;
        best_tau = tau;
        best_t = t;
      }
    }
    sum_bound += std::clamp(std::exp(best_log_eq), 0.0, 1.0);
    sum_tau += best_tau;
    sum_best_t += best_t;
    informative += best_log_eq < 0.0;
  }

  BoundResult result;
  result.k0 = k0_value(cfg.m, T, cfg.eta);
  result.per_t.resize(grid.size());
  const double reps = static_cast<double>(cfg.repetitions);
  for (std::size_t ti = 0; ti < grid.size(); ++ti) {
    result.per_t[ti] = {grid[ti], sum_b0[ti] / reps, sum_b1[ti] / reps};
  }
  result.bound = sum_bound / reps;
  result.tau_star = sum_tau / reps;
  result.best_t = sum_best_t / reps;
  result.vacuous = informative == 0;
  return result;
}

}  // namespace

BoundResult optimal_bound(const BoundConfig& cfg, const GmmSampler& sampler) {
  return optimal_bound_impl(cfg, &sampler, nullptr);
}

BoundResult optimal_bound(const BoundConfig& cfg, const ScalarGmm& gmm) {
  validate_gmm(gmm);
  return optimal_bound_impl(cfg, nullptr, &gmm);
}

double k0_value(std::size_t m, std::size_t T, double eta) {
  return static_cast<double>(m) / static_cast<double>(T) * (1.0 - eta);
}

std::vector<SweepPoint> sweep_bound(SweepParam param,
                                    std::span<const double> grid,
                                    const BoundConfig& base,
                                    const GmmSampler& sampler,
                                    bool hold_k0) {
  if (grid.empty()) throw UsageError("sweep: empty grid");
  const double base_k0 = k0_value(base.m, sampler.components, base.eta);
  std::vector<SweepPoint> points(grid.size());
  parallel_for(grid.size(), base.threads, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t g = lo; g < hi; ++g) {
      SweepPoint& point = points[g];
      point.param_value = grid[g];
      try {
        BoundConfig cfg = base;
        cfg.threads = 1;
        GmmSampler smp = sampler;
        switch (param) {
          case SweepParam::k:
            cfg.k = static_cast<std::size_t>(grid[g]);
            break;
          case SweepParam::eta:
            cfg.eta = grid[g];
            break;
          case SweepParam::m:
            cfg.m = static_cast<std::size_t>(grid[g]);
            break;
          case SweepParam::t_components:
            smp.components = static_cast<std::size_t>(grid[g]);
            if (hold_k0) {
              cfg.m = static_cast<std::size_t>(std::llround(
                  base_k0 * grid[g] / (1.0 - cfg.eta)));
            }
            break;
        }
        point.result = optimal_bound(cfg, smp);
      } catch (const std::exception& e) {
        point.failed = true;
        point.error = e.what();
      }
    }
  });
  return points;
}

}  // namespace mmde
