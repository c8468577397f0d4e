#ifndef MMDE_LOGSPACE_HPP
#define MMDE_LOGSPACE_HPP

#include <cstdint>
#include <span>

namespace mmde {

// log(e^a + e^b), tolerant of -inf inputs
double log_add(double a, double b);

// log(1 - e^a) for a <= 0
double log1m_exp(double a);

// log Phi(x) for the standard normal CDF, stable into the deep lower tail
// (asymptotic series below the erfc underflow point).
double log_norm_cdf(double x);

// log of the Binomial(n_trials, q) mass at k; exact at q = 0 and q = 1
double log_binom_pmf(std::uint64_t n_trials, std::uint64_t k, double q);

// log(n choose k) via lgamma
double log_choose(std::uint64_t n, std::uint64_t k);

}  // namespace mmde

#endif  // MMDE_LOGSPACE_HPP
