// Apache License, Version 2.0, refer to LICENSE.txt

#ifndef BNPTVP_SPECIAL_HPP
#define BNPTVP_SPECIAL_HPP

#include <cmath>
#include <limits>
#include <numbers>

namespace bnptvp {

namespace detail {

// Large-argument expansion of log K_nu(x); accurate for x >> nu^2.
inline double log_bessel_k_asymptotic(double nu, double x) {
  const double mu = 4.0 * nu * nu;
  double term = 1.0;
  double sum = 1.0;
  for (int k = 1; k < 12; ++k) {
    const double odd = 2.0 * k - 1.0;
    const double next = term * (mu - odd * odd) / (k * 8.0 * x);
    if (std::abs(next) >= std::abs(term)) break;
    term = next;
    sum += term;
    if (std::abs(term) < 1e-17 * std::abs(sum)) break;
  }
  return 0.5 * std::log(std::numbers::pi / (2.0 * x)) - x + std::log(sum);
}

// Small-argument leading term of log K_nu(x).
inline double log_bessel_k_small(double nu, double x) {
  if (nu == 0.0) return std::log(-std::log(0.5 * x) - std::numbers::egamma);
  return std::lgamma(nu) - std::log(2.0) + nu * std::log(2.0 / x);
}

inline double log_bessel_k_base(double nu, double x) {
  if (x > 500.0) return log_bessel_k_asymptotic(nu, x);
  const double k = std::cyl_bessel_k(nu, x);
  if (std::isfinite(k) && k > 0.0) return std::log(k);
  return log_bessel_k_small(nu, x);
}

}  // namespace detail

/// log K_nu(x), modified Bessel function of the second kind, x > 0.
///
/// Evaluated on the fractional order and carried to |nu| by the upward
/// recurrence K_{v+1} = K_{v-1} + (2v/x) K_v in ratio form, so neither large
/// orders nor large arguments overflow.
inline double log_bessel_k(double nu, double x) {
  if (!(x > 0.0)) return std::numeric_limits<double>::infinity();
  nu = std::abs(nu);
  const double whole = std::floor(nu);
  const double frac = nu - whole;
  const double log_k0 = detail::log_bessel_k_base(frac, x);
  if (whole == 0.0) return log_k0;
  const double log_k1 = detail::log_bessel_k_base(frac + 1.0, x);
  double log_k = log_k1;
  double ratio = std::exp(log_k1 - log_k0);  // K_{v+1} / K_v
  double order = frac + 1.0;
  for (double i = 1.0; i < whole; i += 1.0) {
    ratio = 1.0 / ratio + 2.0 * order / x;
    log_k += std::log(ratio);
    order += 1.0;
  }
  return log_k;
}

/// K_{nu+1}(x) / K_nu(x).
inline double bessel_k_ratio(double nu, double x) {
  return std::exp(log_bessel_k(nu + 1.0, x) - log_bessel_k(nu, x));
}

inline double log_normal_pdf(double x, double mean, double variance) {
  const double r = x - mean;
  return -0.5 * (std::log(2.0 * std::numbers::pi * variance) + r * r / variance);
}

}  // namespace bnptvp

#endif  // BNPTVP_SPECIAL_HPP
