// Apache License, Version 2.0, refer to LICENSE.txt

#ifndef BNPTVP_SYNTHETIC_HPP
#define BNPTVP_SYNTHETIC_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include "bnptvp/distributions.hpp"
#include "bnptvp/error.hpp"
#include "bnptvp/var_core.hpp"

namespace bnptvp {

struct SyntheticOptions {
  int n = 3;
  int T = 100;
  double sparsity = 0.8;
  std::uint64_t seed = 1;
  int regimes = 2;
  double noise_var = 0.1;
  std::vector<double> atoms = {-0.6, 0.5, 0.85};
  bool allow_explosive = false;
  int max_attempts = 200;
};

struct SyntheticSystem {
  Panel panel;
  std::vector<Matrix> path;  // B_2..B_T
  Matrix sigma;
  double lyapunov = 0.0;
  int attempts = 0;
};

inline void validate(const SyntheticOptions& o) {
  if (o.n < 1) throw InvalidParameters("simulate: n must be at least 1");
  if (o.T < 3) throw InvalidParameters("simulate: t-len must be at least 3");
  if (!(o.sparsity >= 0.0 && o.sparsity <= 1.0)) throw InvalidParameters("simulate: sparsity must lie in [0, 1]");
  if (o.regimes < 1) throw InvalidParameters("simulate: need at least one regime");
  if (!(o.noise_var > 0.0)) throw InvalidParameters("simulate: noise variance must be positive");
  if (o.atoms.empty()) throw InvalidParameters("simulate: empty atom set");
}

/// Top Lyapunov exponent of a coefficient path, estimated by drawing its
/// matrices i.i.d. (the path's empirical law) over a long horizon.
template <class URBG>
double path_lyapunov(const std::vector<Matrix>& path, URBG& rng, int horizon = 4000, int replicates = 4) {
  bool all_zero = true;
  for (const auto& b : path) all_zero = all_zero && b.isZero(0.0);
  if (all_zero) return -std::numeric_limits<double>::infinity();
  std::uniform_int_distribution<std::size_t> pick(0, path.size() - 1);
  return lyapunov_exponent([&](URBG& r) -> Matrix { return path[pick(r)]; }, horizon, replicates, rng);
}

/// Piecewise-constant sparse coefficients whose nonzero entries share a few
/// values, redrawn until the system is stable (unless explosive is allowed).
inline SyntheticSystem simulate_synthetic(const SyntheticOptions& o) {
  validate(o);
  Rng rng(o.seed);
  const int n = o.n;
  const int nn = n * n;
  const int S = o.T - 1;
  const int regimes = std::min(o.regimes, S);
  int nonzero = static_cast<int>(std::lround((1.0 - o.sparsity) * nn));
  if (o.sparsity < 1.0) nonzero = std::max(nonzero, 1);

  SyntheticSystem sys;
  sys.sigma = Matrix::Identity(n, n) * o.noise_var;
  for (int attempt = 1; attempt <= o.max_attempts; ++attempt) {
    std::vector<Matrix> regime_b;
    for (int r = 0; r < regimes; ++r) {
      std::vector<int> slots(static_cast<std::size_t>(nn));
      std::iota(slots.begin(), slots.end(), 0);
      std::shuffle(slots.begin(), slots.end(), rng);
      Matrix b = Matrix::Zero(n, n);
      std::uniform_int_distribution<std::size_t> pick(0, o.atoms.size() - 1);
      for (int k = 0; k < nonzero; ++k) {
        const int j = slots[static_cast<std::size_t>(k)];
        b(j % n, j / n) = o.atoms[pick(rng)];
      }
      regime_b.push_back(b);
    }
    sys.path.clear();
    for (int s = 0; s < S; ++s) sys.path.push_back(regime_b[static_cast<std::size_t>(s * regimes / S)]);
    sys.lyapunov = path_lyapunov(sys.path, rng);
    sys.attempts = attempt;
    if (sys.lyapunov < 0.0 || o.allow_explosive) break;
  }
  if (!(sys.lyapunov < 0.0) && !o.allow_explosive)
    throw NumericalError("simulate: no stable coefficient path found; pass --allow-explosive to accept one");
  sys.panel = simulate_tvp_var(sys.path, sys.sigma, Vector::Zero(n), rng);
  return sys;
}

}  // namespace bnptvp

#endif  // BNPTVP_SYNTHETIC_HPP
