// Apache License, Version 2.0, refer to LICENSE.txt

#ifndef BNPTVP_DIAGNOSTICS_HPP
#define BNPTVP_DIAGNOSTICS_HPP

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "bnptvp/error.hpp"
#include "bnptvp/model.hpp"

namespace bnptvp {

inline double mean_of(std::span<const double> x) {
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

inline double variance_of(std::span<const double> x) {
  if (x.size() < 2) return 0.0;
  const double m = mean_of(x);
  double acc = 0.0;
  for (double v : x) acc += (v - m) * (v - m);
  return acc / static_cast<double>(x.size() - 1);
}

/// Linear-interpolation quantile of an unsorted sample.
inline double quantile_of(std::vector<double> x, double p) {
  if (x.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(x.begin(), x.end());
  const double h = p * static_cast<double>(x.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, x.size() - 1);
  return x[lo] + (h - static_cast<double>(lo)) * (x[hi] - x[lo]);
}

/// Effective sample size by Geyer's initial monotone sequence estimator.
/// NaN for a constant trace.
inline double effective_sample_size(std::span<const double> x) {
  const std::size_t n = x.size();
  if (n < 4) return std::numeric_limits<double>::quiet_NaN();
  const double m = mean_of(x);
  std::vector<double> c(x.size());
  for (std::size_t i = 0; i < n; ++i) c[i] = x[i] - m;
  auto autocov = [&](std::size_t lag) {
    double acc = 0.0;
    for (std::size_t i = 0; i + lag < n; ++i) acc += c[i] * c[i + lag];
    return acc / static_cast<double>(n);
  };
  const double c0 = autocov(0);
  if (!(c0 > 0.0)) return std::numeric_limits<double>::quiet_NaN();

  double sum = 0.0;
  double prev_pair = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k + 1 < n; k += 2) {
    double pair = (autocov(k) + autocov(k + 1)) / c0;
    if (pair <= 0.0) break;
    pair = std::min(pair, prev_pair);
    sum += pair;
    prev_pair = pair;
  }
  const double tau = std::max(-1.0 + 2.0 * sum, 1.0 / std::log10(static_cast<double>(n)));
  return static_cast<double>(n) / tau;
}

/// Split-chain potential scale reduction over two or more chains.
inline double split_rhat(const std::vector<std::vector<double>>& chains) {
  std::vector<std::span<const double>> halves;
  for (const auto& c : chains) {
    const std::size_t half = c.size() / 2;
    if (half < 2) return std::numeric_limits<double>::quiet_NaN();
    halves.emplace_back(c.data(), half);
    halves.emplace_back(c.data() + (c.size() - half), half);
  }
  std::size_t len = halves.front().size();
  for (const auto& h : halves) len = std::min(len, h.size());
  const double m = static_cast<double>(halves.size());
  const double nl = static_cast<double>(len);
  std::vector<double> means;
  double within = 0.0;
  for (const auto& h : halves) {
    const auto part = h.first(len);
    means.push_back(mean_of(part));
    within += variance_of(part);
  }
  within /= m;
  const double between = nl * variance_of(means);
  if (!(within > 0.0)) return std::numeric_limits<double>::quiet_NaN();
  const double var_plus = (nl - 1.0) / nl * within + between / nl;
  return std::sqrt(var_plus / within);
}

struct SummaryRow {
  std::string name;
  double mean = 0.0;
  double sd = 0.0;
  double q05 = 0.0;
  double q50 = 0.0;
  double q95 = 0.0;
  double ess = 0.0;
  double rhat = std::numeric_limits<double>::quiet_NaN();
};

struct Summary {
  bool has_rhat = false;
  std::vector<SummaryRow> rows;
};

/// Scalar traces (one per chain) of every reported parameter, in a fixed order.
inline std::vector<std::pair<std::string, std::vector<std::vector<double>>>> collect_traces(
    const std::vector<PosteriorDraws>& chains) {
  const ModelSpec& spec = chains.front().spec;
  const int n = spec.n;
  const int S = spec.slices();
  std::vector<std::pair<std::string, std::vector<std::vector<double>>>> out;
  auto add = [&](std::string name, auto getter) {
    std::vector<std::vector<double>> per_chain;
    for (const auto& c : chains) {
      std::vector<double> trace;
      trace.reserve(c.draws.size());
      for (const auto& d : c.draws) trace.push_back(getter(d));
      per_chain.push_back(std::move(trace));
    }
    out.emplace_back(std::move(name), std::move(per_chain));
  };
  for (int s = 0; s < S; ++s)
    for (int j = 0; j < n * n; ++j)
      add("beta[" + std::to_string(j % n + 1) + "," + std::to_string(j / n + 1) + "," + std::to_string(s + 2) + "]",
          [=](const DrawRecord& d) { return d.beta(j, s); });
  for (int i = 0; i < n; ++i)
    for (int k = i; k < n; ++k)
      add("sigma[" + std::to_string(i + 1) + "," + std::to_string(k + 1) + "]",
          [=](const DrawRecord& d) { return d.sigma(i, k); });
  for (int s = 0; s < S; ++s)
    add("pi[" + std::to_string(s + 2) + "]", [=](const DrawRecord& d) { return d.pi[s]; });
  add("k_star", [](const DrawRecord& d) { return static_cast<double>(d.k_star); });
  if (spec.variant != SpikeVariant::dirac) add("tau0", [](const DrawRecord& d) { return d.tau0; });
  return out;
}

inline Summary summarize(const std::vector<PosteriorDraws>& chains) {
  if (chains.empty()) throw InvalidParameters("summarize: no chains supplied");
  for (const auto& c : chains) {
    if (c.empty()) throw InvalidParameters("summarize: empty draw set");
    if (c.spec.n != chains.front().spec.n || c.spec.T != chains.front().spec.T)
      throw InvalidParameters("summarize: chains disagree on dimensions");
  }
  Summary out;
  out.has_rhat = chains.size() >= 2;
  for (auto& [name, per_chain] : collect_traces(chains)) {
    SummaryRow row;
    row.name = name;
    std::vector<double> pooled;
    row.ess = 0.0;
    for (const auto& c : per_chain) {
      pooled.insert(pooled.end(), c.begin(), c.end());
      row.ess += effective_sample_size(c);
    }
    row.mean = mean_of(pooled);
    row.sd = std::sqrt(variance_of(pooled));
    row.q05 = quantile_of(pooled, 0.05);
    row.q50 = quantile_of(pooled, 0.50);
    row.q95 = quantile_of(pooled, 0.95);
    if (out.has_rhat) row.rhat = split_rhat(per_chain);
    out.rows.push_back(std::move(row));
  }
  return out;
}

inline void write_summary_csv(const Summary& s, std::ostream& os) {
  os << "parameter,mean,sd,q05,q50,q95,ess";
  if (s.has_rhat) os << ",rhat";
  os << "\n";
  auto num = [](double x) {
    if (std::isnan(x)) return std::string("NA");
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", x);
    return std::string(buf);
  };
  for (const auto& r : s.rows) {
    os << r.name << ',' << num(r.mean) << ',' << num(r.sd) << ',' << num(r.q05) << ',' << num(r.q50) << ','
       << num(r.q95) << ',' << num(r.ess);
    if (s.has_rhat) os << ',' << num(r.rhat);
    os << "\n";
  }
}

}  // namespace bnptvp

#endif  // BNPTVP_DIAGNOSTICS_HPP
