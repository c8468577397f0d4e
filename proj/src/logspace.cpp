#include "mmde/logspace.hpp"

#include <cmath>
#include <limits>

namespace mmde {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kLogSqrt2Pi = 0.91893853320467274178;  // log sqrt(2*pi)
}  // namespace

double log_add(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  if (a < b) std::swap(a, b);
  return a + std::log1p(std::exp(b - a));
}

double log1m_exp(double a) {
  // a <= 0; log(1 - e^a). Split at log(1/2) for accuracy.
  if (a >= 0.0) return kNegInf;
  if (a > -0.6931471805599453) return std::log(-std::expm1(a));
  return std::log1p(-std::exp(a));
}

double log_norm_cdf(double x) {
  if (x > -26.0) {
    // erfc(13/sqrt(2)*2) stays well above the underflow threshold here
    return std::log(0.5 * std::erfc(-x * 0.70710678118654752440));
  }
  // Mills-ratio asymptotic series: Phi(-z) = phi(z)/z * (1 - 1/z^2 + 3/z^4 - ...)
  const double z = -x;
  const double inv_z2 = 1.0 / (z * z);
  double series = 1.0;
  double term = 1.0;
  for (int k = 1; k <= 6; ++k) {
    term *= -(2 * k - 1) * inv_z2;
    series += term;
  }
  return -0.5 * z * z - std::log(z) - kLogSqrt2Pi + std::log(series);
}

double log_choose(std::uint64_t n, std::uint64_t k) {
  if (k > n) return kNegInf;
  return std::lgamma(static_cast<double>(n) + 1.0) -
         std::lgamma(static_cast<double>(k) + 1.0) -
         std::lgamma(static_cast<double>(n - k) + 1.0);
}

double log_binom_pmf(std::uint64_t n_trials, std::uint64_t k, double q) {
  if (k > n_trials) return kNegInf;
  if (q <= 0.0) return k == 0 ? 0.0 : kNegInf;
  if (q >= 1.0) return k == n_trials ? 0.0 : kNegInf;
  return log_choose(n_trials, k) + static_cast<double>(k) * std::log(q) +
         static_cast<double>(n_trials - k) * std::log1p(-q);
}

}  // namespace mmde
