// Apache License, Version 2.0, refer to LICENSE.txt

#ifndef BNPTVP_TSDDP_HPP
#define BNPTVP_TSDDP_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "bnptvp/distributions.hpp"
#include "bnptvp/error.hpp"

namespace bnptvp {

/// P0: mu ~ N(c, d) (d is a variance), tau ~ Ga(a1, b1) shape-scale.
struct BaseMeasure {
  double c = 0.0;
  double d = 4.0;
  double a1 = 20.0;
  double b1 = 0.1;

  void validate() const {
    if (!std::isfinite(c) || !(d > 0.0) || !(a1 > 0.0) || !(b1 > 0.0))
      throw InvalidParameters("base measure: need d > 0, a1 > 0, b1 > 0");
  }
  friend bool operator==(const BaseMeasure&, const BaseMeasure&) = default;
};

struct Atom {
  double mu = 0.0;
  double tau = 1.0;
  friend bool operator==(const Atom&, const Atom&) = default;
};

/// Time-series dependent DP over slices t = 0..T-1.
///
/// Component k carries a stick trajectory v[k][0..T-1], the binomial links
/// z[k][0..T-2] joining slice t to t+1, and one atom shared by all slices.
struct TsddpChain {
  double alpha = 1.0;
  int m = 5;
  int T = 2;
  BaseMeasure base;
  std::vector<std::vector<double>> v;
  std::vector<std::vector<int>> z;
  std::vector<std::vector<double>> w;
  std::vector<Atom> atoms;

  std::size_t size() const { return v.size(); }

  /// 1 - sum_k w[k][t] over the represented components, as a product.
  double remaining_mass(int t) const {
    double rest = 1.0;
    for (const auto& vk : v) rest *= 1.0 - vk[static_cast<std::size_t>(t)];
    return rest;
  }

  friend bool operator==(const TsddpChain&, const TsddpChain&) = default;
};

inline constexpr double kStickFloor = 1e-12;

inline double clamp_stick(double v) { return std::clamp(v, kStickFloor, 1.0 - kStickFloor); }

inline void recompute_weights(TsddpChain& chain) {
  const auto T = static_cast<std::size_t>(chain.T);
  chain.w.assign(chain.v.size(), std::vector<double>(T, 0.0));
  for (std::size_t t = 0; t < T; ++t) {
    double rest = 1.0;
    for (std::size_t k = 0; k < chain.v.size(); ++k) {
      chain.w[k][t] = chain.v[k][t] * rest;
      rest *= 1.0 - chain.v[k][t];
    }
  }
}

template <class URBG>
Atom sample_atom(const BaseMeasure& base, URBG& rng) {
  Atom a;
  a.mu = sample_normal(base.c, std::sqrt(base.d), rng);
  a.tau = sample_gamma(base.a1, base.b1, rng);
  return a;
}

/// One component's trajectory from the prior Markov chain:
/// v_1 ~ Be(1, alpha), z_t | v_t ~ Bin(m, v_t), v_{t+1} | z_t ~ Be(1 + z_t, alpha + m - z_t).
template <class URBG>
void append_component(TsddpChain& chain, URBG& rng) {
  const auto T = static_cast<std::size_t>(chain.T);
  std::vector<double> vk(T);
  std::vector<int> zk(T - 1);
  vk[0] = clamp_stick(sample_beta(1.0, chain.alpha, rng));
  for (std::size_t t = 0; t + 1 < T; ++t) {
    zk[t] = sample_binomial(chain.m, vk[t], rng);
    vk[t + 1] = clamp_stick(
        sample_beta(1.0 + zk[t], chain.alpha + chain.m - zk[t], rng));
  }
  chain.v.push_back(std::move(vk));
  chain.z.push_back(std::move(zk));
  chain.atoms.push_back(sample_atom(chain.base, rng));
}

template <class URBG>
TsddpChain init_chain(double alpha, int m, int T, const BaseMeasure& base, int k_init, URBG& rng) {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw InvalidParameters("tsDDP: alpha must be positive");
  if (m < 0) throw InvalidParameters("tsDDP: m must be nonnegative");
  if (T < 2) throw InvalidParameters("tsDDP: need at least two time slices");
  if (k_init < 1) throw InvalidParameters("tsDDP: need at least one initial component");
  base.validate();
  TsddpChain chain;
  chain.alpha = alpha;
  chain.m = m;
  chain.T = T;
  chain.base = base;
  for (int k = 0; k < k_init; ++k) append_component(chain, rng);
  recompute_weights(chain);
  return chain;
}

/// Appends prior components until the chain holds k_new of them.
template <class URBG>
void grow_components(TsddpChain& chain, std::size_t k_new, URBG& rng) {
  if (k_new <= chain.size()) return;
  while (chain.size() < k_new) append_component(chain, rng);
  recompute_weights(chain);
}

/// Grows the chain until the unrepresented mass of slice t falls below
/// level[t] for every t.
template <class URBG>
void grow_until_covered(TsddpChain& chain, const std::vector<double>& level, URBG& rng) {
  bool grew = false;
  for (;;) {
    bool covered = true;
    for (int t = 0; t < chain.T; ++t) {
      if (chain.remaining_mass(t) >= level[static_cast<std::size_t>(t)]) {
        covered = false;
        break;
      }
    }
    if (covered) break;
    append_component(chain, rng);
    grew = true;
    if (chain.size() > 100000) throw NumericalError("tsDDP: slice levels could not be covered");
  }
  if (grew) recompute_weights(chain);
}

/// Drops components with index >= keep.
inline void truncate_components(TsddpChain& chain, std::size_t keep) {
  if (keep >= chain.size()) return;
  chain.v.resize(keep);
  chain.z.resize(keep);
  chain.atoms.resize(keep);
  recompute_weights(chain);
}

struct CorrelationResult {
  double rho = 0.0;
  bool converged = false;
};

/// Corr(P_t(A), P_{t+1}(A)) for constant dependence m, truncated at H terms and
/// checked against 2H terms.
inline CorrelationResult tsddp_correlation(double alpha, double m, double p0_mass, int H = 500) {
  if (!(alpha > 0.0) || !(m >= 0.0) || !(p0_mass > 0.0 && p0_mass < 1.0) || H < 1)
    throw InvalidParameters("correlation: need alpha > 0, m >= 0, 0 < P0(A) < 1, H >= 1");
  const double a = (2.0 * (1.0 + m) + alpha) / ((1.0 + alpha + m) * (1.0 + alpha) * (2.0 + alpha));
  const double b = (alpha - 1.0) / (1.0 + alpha) + a;
  const double odds = p0_mass / (1.0 - p0_mass);

  auto series = [&](int terms) {
    double first = 0.0;
    double second = 0.0;
    double prod = 1.0;
    for (int h = 1; h <= terms; ++h) {
      first += a * prod;
      second += (2.0 - (1.0 + alpha) * a) * prod;
      prod *= b;
    }
    return (1.0 + alpha) * first + odds * (second - (1.0 + alpha));
  };

  CorrelationResult out;
  out.rho = series(H);
  const double refined = series(2 * H);
  out.converged = std::abs(refined - out.rho) < 1e-8;
  return out;
}

}  // namespace bnptvp

#endif  // BNPTVP_TSDDP_HPP
