// Apache License, Version 2.0, refer to LICENSE.txt

#ifndef BNPTVP_TESTS_SUPPORT_HPP
#define BNPTVP_TESTS_SUPPORT_HPP

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "bnptvp/bnptvp.hpp"

namespace bnptvp::testing {

/// sup |F_n - F| for the sample against a continuous cdf.
inline double ks_distance(std::vector<double> x, const std::function<double(double)>& cdf) {
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  double d = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double f = cdf(x[i]);
    d = std::max({d, f - i / n, (i + 1) / n - f});
  }
  return d;
}

/// Asymptotic Kolmogorov critical value at the given level (0.01 -> 1.628).
inline double ks_critical(std::size_t n, double level = 0.01) {
  return std::sqrt(-0.5 * std::log(level / 2.0)) / std::sqrt(static_cast<double>(n));
}

/// Tabulated cdf from a log-density by Simpson integration on [lo, hi].
class QuadratureCdf {
 public:
  QuadratureCdf(const std::function<double(double)>& log_pdf, double lo, double hi, int cells = 200000)
      : lo_(lo), h_((hi - lo) / cells), cum_(static_cast<std::size_t>(cells) + 1, 0.0) {
    double prev = std::exp(log_pdf(lo));
    if (!std::isfinite(prev)) prev = 0.0;
    for (int i = 1; i <= cells; ++i) {
      const double a = lo + (i - 1) * h_;
      const double mid = std::exp(log_pdf(a + 0.5 * h_));
      double end = std::exp(log_pdf(a + h_));
      if (!std::isfinite(end)) end = 0.0;
      cum_[static_cast<std::size_t>(i)] = cum_[static_cast<std::size_t>(i) - 1] + h_ / 6.0 * (prev + 4.0 * mid + end);
      mean_ += h_ / 6.0 * (a * prev + 4.0 * (a + 0.5 * h_) * mid + (a + h_) * end);
      prev = end;
    }
    total_ = cum_.back();
    mean_ /= total_;
  }

  double operator()(double x) const {
    if (x <= lo_) return 0.0;
    const double pos = (x - lo_) / h_;
    const auto i = static_cast<std::size_t>(pos);
    if (i + 1 >= cum_.size()) return 1.0;
    const double frac = pos - static_cast<double>(i);
    return (cum_[i] + frac * (cum_[i + 1] - cum_[i])) / total_;
  }

  double mean() const { return mean_; }

 private:
  double lo_;
  double h_;
  std::vector<double> cum_;
  double total_ = 1.0;
  double mean_ = 0.0;
};

/// Regularized incomplete beta by continued fraction.
inline double beta_cdf(double x, double a, double b) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  auto cf = [](double x, double a, double b) {
    const double tiny = 1e-300;
    double c = 1.0;
    double d = 1.0 - (a + b) * x / (a + 1.0);
    if (std::abs(d) < tiny) d = tiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m < 500; ++m) {
      const double m2 = 2.0 * m;
      double aa = m * (b - m) * x / ((a + m2 - 1.0) * (a + m2));
      d = 1.0 + aa * d;
      if (std::abs(d) < tiny) d = tiny;
      c = 1.0 + aa / c;
      if (std::abs(c) < tiny) c = tiny;
      d = 1.0 / d;
      h *= d * c;
      aa = -(a + m) * (a + b + m) * x / ((a + m2) * (a + m2 + 1.0));
      d = 1.0 + aa * d;
      if (std::abs(d) < tiny) d = tiny;
      c = 1.0 + aa / c;
      if (std::abs(c) < tiny) c = tiny;
      d = 1.0 / d;
      const double del = d * c;
      h *= del;
      if (std::abs(del - 1.0) < 1e-15) break;
    }
    return h;
  };
  const double lbt = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
  if (x < (a + 1.0) / (a + b + 2.0)) return std::exp(lbt) * cf(x, a, b) / a;
  return 1.0 - std::exp(lbt) * cf(1.0 - x, b, a) / b;
}

inline double normal_cdf(double x, double mean, double variance) {
  return 0.5 * std::erfc(-(x - mean) / std::sqrt(2.0 * variance));
}

/// KS distance for a discrete law on 0..K-1: max gap of the cumulative sums.
inline double discrete_ks(const std::vector<int>& draws, const std::vector<double>& p) {
  std::vector<double> freq(p.size(), 0.0);
  for (int d : draws) freq[static_cast<std::size_t>(d)] += 1.0;
  double emp = 0.0;
  double ref = 0.0;
  double gap = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    emp += freq[k] / static_cast<double>(draws.size());
    ref += p[k];
    gap = std::max(gap, std::abs(emp - ref));
  }
  return gap;
}

/// Normalized probabilities from log-weights.
inline std::vector<double> softmax(const std::vector<double>& lw) {
  const double top = *std::max_element(lw.begin(), lw.end());
  std::vector<double> p(lw.size());
  double total = 0.0;
  for (std::size_t k = 0; k < lw.size(); ++k) total += p[k] = std::exp(lw[k] - top);
  for (auto& v : p) v /= total;
  return p;
}

}  // namespace bnptvp::testing

#endif  // BNPTVP_TESTS_SUPPORT_HPP
