// Apache License, Version 2.0, refer to LICENSE.txt

#ifndef BNPTVP_GIBBS_HPP
#define BNPTVP_GIBBS_HPP

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "bnptvp/distributions.hpp"
#include "bnptvp/error.hpp"
#include "bnptvp/model.hpp"
#include "bnptvp/special.hpp"
#include "bnptvp/tsddp.hpp"
#include "bnptvp/var_core.hpp"

namespace bnptvp {

// ---------------------------------------------------------------------------
// Full-conditional parameters. Each returns the exact parameters of the
// distribution the corresponding update draws from.

/// v_{k,t} | rest. z_prev / z_next are the links into and out of slice t
/// (absent at the first / last slice).
inline BetaParams stick_conditional(double alpha, int m, std::optional<int> z_prev,
                                    std::optional<int> z_next, int at_k, int above_k) {
  BetaParams p{1.0 + at_k, alpha + above_k};
  if (z_prev) {
    p.a += *z_prev;
    p.b += m - *z_prev;
  }
  if (z_next) {
    p.a += *z_next;
    p.b += m - *z_next;
  }
  return p;
}

/// Unnormalized log-mass of z_{k,t} = 0..m given v_{k,t} and v_{k,t+1}.
inline std::vector<double> aux_log_mass(double alpha, int m, double v_now, double v_next) {
  std::vector<double> out(static_cast<std::size_t>(m) + 1);
  const double slope = std::log(v_now) + std::log(v_next) - std::log1p(-v_now) - std::log1p(-v_next);
  for (int z = 0; z <= m; ++z) {
    out[static_cast<std::size_t>(z)] = -2.0 * std::lgamma(z + 1.0) - std::lgamma(m - z + 1.0) -
                                       std::lgamma(alpha + m - z) + z * slope;
  }
  return out;
}

/// Per-component, per-stick-slice slab counts.
inline std::vector<std::vector<int>> allocation_counts(const ChainState& state, std::size_t components,
                                                       int stick_slices) {
  std::vector<std::vector<int>> counts(components, std::vector<int>(static_cast<std::size_t>(stick_slices), 0));
  for (Eigen::Index s = 0; s < state.d_alloc.cols(); ++s)
    for (Eigen::Index j = 0; j < state.d_alloc.rows(); ++j) {
      const int d = state.d_alloc(j, s);
      if (d > 0) ++counts[static_cast<std::size_t>(d - 1)][static_cast<std::size_t>(s + 1)];
    }
  return counts;
}

inline GigParams lambda_conditional(const ModelSpec& spec, const ChainState& state, Eigen::Index j,
                                    Eigen::Index s) {
  const double beta = state.beta(j, s);
  const int d = state.d_alloc(j, s);
  if (d > 0) {
    const Atom& atom = state.sticks.atoms[static_cast<std::size_t>(d - 1)];
    return {0.5, atom.tau, (beta - atom.mu) * (beta - atom.mu)};
  }
  if (spec.variant == SpikeVariant::de_diffuse) return {0.5, state.tau0, beta * beta};
  // lambda is not in the likelihood of a Dirac or Normal spike slot.
  return {1.0, 2.0 / pseudo_lambda_scale(spec.hyper), 0.0};
}

struct AtomSums {
  int count = 0;
  double inv_lambda = 0.0;
  double beta_over_lambda = 0.0;
  double lambda = 0.0;
};

inline std::vector<AtomSums> atom_sums(const ChainState& state) {
  std::vector<AtomSums> sums(state.sticks.size());
  for (Eigen::Index s = 0; s < state.d_alloc.cols(); ++s)
    for (Eigen::Index j = 0; j < state.d_alloc.rows(); ++j) {
      const int d = state.d_alloc(j, s);
      if (d <= 0) continue;
      AtomSums& a = sums[static_cast<std::size_t>(d - 1)];
      const double lam = state.lambda(j, s);
      ++a.count;
      a.inv_lambda += 1.0 / lam;
      a.beta_over_lambda += state.beta(j, s) / lam;
      a.lambda += lam;
    }
  return sums;
}

inline NormalParams mu_conditional(const Hyper& h, const AtomSums& a) {
  const double var = 1.0 / (1.0 / h.d + a.inv_lambda);
  return {var * (h.c / h.d + a.beta_over_lambda), var};
}

inline GammaParams tau_conditional(const Hyper& h, const AtomSums& a) {
  return {h.a1 + a.count, 2.0 * h.b1 / (2.0 + h.b1 * a.lambda)};
}

/// Spike scale: Gamma (DE spike on lambda) or Inverse-Gamma (Normal spike on beta).
struct ScaleConditional {
  double shape = 1.0;
  double scale = 1.0;
  bool inverse = false;
};

inline ScaleConditional tau0_conditional(const ModelSpec& spec, const ChainState& state) {
  const Hyper& h = spec.hyper;
  int count = 0;
  double sum_lambda = 0.0;
  double sum_sq = 0.0;
  for (Eigen::Index s = 0; s < state.gamma.cols(); ++s)
    for (Eigen::Index j = 0; j < state.gamma.rows(); ++j) {
      if (state.gamma(j, s) != 0) continue;
      ++count;
      sum_lambda += state.lambda(j, s);
      sum_sq += state.beta(j, s) * state.beta(j, s);
    }
  if (spec.variant == SpikeVariant::normal_diffuse)
    return {h.a0 + 0.5 * count, h.b0 + 0.5 * sum_sq, true};
  return {h.a0 + count, 2.0 * h.b0 / (2.0 + h.b0 * sum_lambda), false};
}

/// Log-weights over allocation labels 0 (spike) .. K for slot (j, s).
/// Diffuse variants condition on beta_{j,s}. The Dirac variant integrates
/// beta_{j,s} out against the partial residual, summarized by
/// q = x' Sigma^{-1} x and r = x' Sigma^{-1} y~.
inline std::vector<double> allocation_log_weights(const ModelSpec& spec, const ChainState& state,
                                                  Eigen::Index j, Eigen::Index s, double q = 0.0,
                                                  double r = 0.0) {
  const TsddpChain& chain = state.sticks;
  const std::size_t slice = static_cast<std::size_t>(s) + 1;
  const double pi = state.pi[s];
  const double lam = state.lambda(j, s);
  const double beta = state.beta(j, s);
  const double u = state.u(j, s);
  const double log_pi = std::log(pi);
  const double log_slab = std::log1p(-pi);
  const double ninf = -std::numeric_limits<double>::infinity();

  std::vector<double> lw(chain.size() + 1, ninf);
  const double pseudo = log_exponential_pdf(lam, pseudo_lambda_scale(spec.hyper));
  switch (spec.variant) {
    case SpikeVariant::de_diffuse:
      lw[0] = log_pi + log_normal_pdf(beta, 0.0, lam) + log_exponential_pdf(lam, 2.0 / state.tau0);
      break;
    case SpikeVariant::normal_diffuse:
      lw[0] = log_pi + log_normal_pdf(beta, 0.0, state.tau0) + pseudo;
      break;
    case SpikeVariant::dirac:
      lw[0] = log_pi + pseudo;
      break;
  }
  for (std::size_t k = 0; k < chain.size(); ++k) {
    if (!(chain.w[k][slice] > u)) continue;
    const Atom& atom = chain.atoms[k];
    double l = log_slab + log_exponential_pdf(lam, 2.0 / atom.tau);
    if (spec.variant == SpikeVariant::dirac) {
      const double prec = 1.0 / lam + q;
      const double lin = atom.mu / lam + r;
      l += -0.5 * std::log(lam * prec) + 0.5 * lin * lin / prec - 0.5 * atom.mu * atom.mu / lam;
    } else {
      l += log_normal_pdf(beta, atom.mu, lam);
    }
    lw[k + 1] = l;
  }
  return lw;
}

/// Gaussian full conditional of beta_s in canonical form, restricted to the
/// listed coordinates (all n^2 for diffuse spikes, the slab set for Dirac).
struct CanonicalGaussian {
  std::vector<Eigen::Index> index;
  Vector mean_term;
  Matrix precision;
};

inline CanonicalGaussian beta_conditional(const ModelSpec& spec, const ChainState& state, const Panel& panel,
                                          const Matrix& sigma_inv, Eigen::Index s) {
  const Eigen::Index n = spec.n;
  const Vector y_prev = panel.y.row(s).transpose();
  const Vector y_now = panel.y.row(s + 1).transpose();
  const Vector sy = sigma_inv * y_now;

  CanonicalGaussian g;
  for (Eigen::Index j = 0; j < n * n; ++j)
    if (spec.variant != SpikeVariant::dirac || state.gamma(j, s) != 0) g.index.push_back(j);
  const auto dim = static_cast<Eigen::Index>(g.index.size());
  g.mean_term.resize(dim);
  g.precision.resize(dim, dim);
  for (Eigen::Index a = 0; a < dim; ++a) {
    const Eigen::Index ja = g.index[static_cast<std::size_t>(a)];
    const Eigen::Index ra = ja % n;
    const Eigen::Index ca = ja / n;
    for (Eigen::Index b = 0; b < dim; ++b) {
      const Eigen::Index jb = g.index[static_cast<std::size_t>(b)];
      g.precision(a, b) = y_prev[ca] * y_prev[jb / n] * sigma_inv(ra, jb % n);
    }
    double prior_mean = 0.0;
    double prior_var = 0.0;
    const int d = state.d_alloc(ja, s);
    if (d > 0) {
      prior_mean = state.sticks.atoms[static_cast<std::size_t>(d - 1)].mu;
      prior_var = state.lambda(ja, s);
    } else if (spec.variant == SpikeVariant::normal_diffuse) {
      prior_var = state.tau0;
    } else {
      prior_var = state.lambda(ja, s);
    }
    g.precision(a, a) += 1.0 / prior_var;
    g.mean_term[a] = prior_mean / prior_var + y_prev[ca] * sy[ra];
  }
  return g;
}

inline Matrix residual_outer(const ChainState& state, const Panel& panel) {
  const Eigen::Index n = panel.n();
  Matrix acc = Matrix::Zero(n, n);
  for (Eigen::Index s = 0; s < state.beta.cols(); ++s) {
    const Vector y_prev = panel.y.row(s).transpose();
    const Vector r = panel.y.row(s + 1).transpose() - apply_design(y_prev, state.beta.col(s));
    acc.noalias() += r * r.transpose();
  }
  return acc;
}

inline InverseWishartParams sigma_conditional(const ModelSpec& spec, const ChainState& state,
                                              const Panel& panel) {
  Matrix scale = spec.hyper.psi + residual_outer(state, panel);
  return {spec.hyper.nu + static_cast<double>(state.beta.cols()), 0.5 * (scale + scale.transpose())};
}

inline BetaParams pi_conditional(const ModelSpec& spec, const ChainState& state, Eigen::Index s) {
  const int slab = state.gamma.col(s).sum();
  return {1.0 + spec.coefficients() - slab, spec.hyper.eta + slab};
}

// ---------------------------------------------------------------------------
// Updates

/// Test hooks for deliberately corrupting a step.
struct SweepHooks {
  bool swap_pi_parameters = false;
};

inline Matrix inverse_spd(const Matrix& a) {
  Eigen::LLT<Matrix> llt(a);
  if (llt.info() != Eigen::Success) throw SingularPrecision("covariance is not positive definite");
  return llt.solve(Matrix::Identity(a.rows(), a.cols()));
}

template <class URBG>
void update_sticks_aux_slices(const ModelSpec& spec, ChainState& state, URBG& rng) {
  TsddpChain& chain = state.sticks;
  const int T = chain.T;
  const auto counts = allocation_counts(state, chain.size(), T);

  std::vector<int> above(static_cast<std::size_t>(T), 0);
  for (const auto& row : counts)
    for (int t = 0; t < T; ++t) above[static_cast<std::size_t>(t)] += row[static_cast<std::size_t>(t)];

  for (std::size_t k = 0; k < chain.size(); ++k) {
    auto& vk = chain.v[k];
    auto& zk = chain.z[k];
    for (int t = 0; t < T; ++t) {
      const auto ts = static_cast<std::size_t>(t);
      above[ts] -= counts[k][ts];
      std::optional<int> z_prev;
      std::optional<int> z_next;
      if (t > 0) z_prev = zk[ts - 1];
      if (t + 1 < T) z_next = zk[ts];
      const BetaParams p = stick_conditional(spec.hyper.alpha, chain.m, z_prev, z_next, counts[k][ts], above[ts]);
      vk[ts] = clamp_stick(sample_beta(p.a, p.b, rng));
    }
    for (int t = 0; t + 1 < T; ++t) {
      const auto ts = static_cast<std::size_t>(t);
      const auto lm = aux_log_mass(spec.hyper.alpha, chain.m, vk[ts], vk[ts + 1]);
      zk[ts] = static_cast<int>(sample_categorical_log(std::span<const double>(lm), rng));
    }
  }
  recompute_weights(chain);

  std::vector<double> level(static_cast<std::size_t>(T), 2.0);
  for (Eigen::Index s = 0; s < state.u.cols(); ++s)
    for (Eigen::Index j = 0; j < state.u.rows(); ++j) {
      const int d = state.d_alloc(j, s);
      const double top = d > 0 ? chain.w[static_cast<std::size_t>(d - 1)][static_cast<std::size_t>(s + 1)] : 1.0;
      const double u = top * uniform_open(rng);
      state.u(j, s) = u;
      auto& lv = level[static_cast<std::size_t>(s + 1)];
      lv = std::min(lv, u);
    }
  grow_until_covered(chain, level, rng);
}

template <class URBG>
void update_lambda(const ModelSpec& spec, ChainState& state, URBG& rng) {
  for (Eigen::Index s = 0; s < state.lambda.cols(); ++s)
    for (Eigen::Index j = 0; j < state.lambda.rows(); ++j)
      state.lambda(j, s) = sample_gig(lambda_conditional(spec, state, j, s), rng);
}

template <class URBG>
void update_atoms(const ModelSpec& spec, ChainState& state, URBG& rng) {
  const auto sums = atom_sums(state);
  for (std::size_t k = 0; k < sums.size(); ++k) {
    const NormalParams mu = mu_conditional(spec.hyper, sums[k]);
    const GammaParams tau = tau_conditional(spec.hyper, sums[k]);
    state.sticks.atoms[k].mu = sample_normal(mu.mean, std::sqrt(mu.variance), rng);
    state.sticks.atoms[k].tau = sample_gamma(tau.shape, tau.scale, rng);
  }
  if (spec.variant == SpikeVariant::dirac) {
    state.tau0 = 0.0;
    return;
  }
  const ScaleConditional c = tau0_conditional(spec, state);
  state.tau0 = c.inverse ? sample_inverse_gamma(c.shape, c.scale, rng) : sample_gamma(c.shape, c.scale, rng);
}

template <class URBG>
void update_allocations(const ModelSpec& spec, ChainState& state, const Panel& panel, URBG& rng) {
  const Eigen::Index n = spec.n;
  const Eigen::Index nn = n * n;
  const bool dirac = spec.variant == SpikeVariant::dirac;
  Matrix sigma_inv;
  if (dirac) sigma_inv = inverse_spd(state.sigma);

  for (Eigen::Index s = 0; s < state.beta.cols(); ++s) {
    Vector y_prev;
    Vector resid;
    if (dirac) {
      y_prev = panel.y.row(s).transpose();
      resid = panel.y.row(s + 1).transpose() - apply_design(y_prev, state.beta.col(s));
    }
    for (Eigen::Index j = 0; j < nn; ++j) {
      double q = 0.0;
      double r = 0.0;
      const Eigen::Index row = j % n;
      double x = 0.0;
      if (dirac) {
        x = y_prev[j / n];
        resid[row] += x * state.beta(j, s);
        q = x * x * sigma_inv(row, row);
        r = x * sigma_inv.row(row).dot(resid);
      }
      const auto lw = allocation_log_weights(spec, state, j, s, q, r);
      const int label = static_cast<int>(sample_categorical_log(std::span<const double>(lw), rng));
      state.d_alloc(j, s) = label;
      state.gamma(j, s) = label > 0 ? 1 : 0;
      if (dirac) {
        if (label > 0) {
          const Atom& atom = state.sticks.atoms[static_cast<std::size_t>(label - 1)];
          const double lam = state.lambda(j, s);
          const double prec = 1.0 / lam + q;
          state.beta(j, s) = sample_normal((atom.mu / lam + r) / prec, std::sqrt(1.0 / prec), rng);
        } else {
          state.beta(j, s) = 0.0;
        }
        resid[row] -= x * state.beta(j, s);
      }
    }
  }
  truncate_components(state.sticks, static_cast<std::size_t>(state.k_star()));
}

/// Exact draw of beta_s by perturbing a prior draw: with u ~ prior and
/// e ~ N(0, Sigma), beta = u + D X'(X D X' + Sigma)^{-1}(y - X u - e).
/// Every column of X_t has a single nonzero, so X D X' is diagonal and the
/// only factorization is n x n.
template <class URBG>
void update_beta(const ModelSpec& spec, ChainState& state, const Panel& panel, URBG& rng) {
  const Eigen::Index n = spec.n;
  const Eigen::Index nn = n * n;
  const bool dirac = spec.variant == SpikeVariant::dirac;
  Eigen::LLT<Matrix> sigma_llt(state.sigma);
  if (sigma_llt.info() != Eigen::Success) throw SingularPrecision("covariance is not positive definite");
  const Matrix l = sigma_llt.matrixL();

  Vector prior_var(nn);
  Vector u(nn);
  Vector e(n);
  for (Eigen::Index s = 0; s < state.beta.cols(); ++s) {
    const Vector y_prev = panel.y.row(s).transpose();
    Vector resid = panel.y.row(s + 1).transpose();
    Matrix gram = state.sigma;
    for (Eigen::Index j = 0; j < nn; ++j) {
      const int d = state.d_alloc(j, s);
      if (dirac && d == 0) {
        prior_var[j] = 0.0;
        u[j] = 0.0;
        continue;
      }
      double mean = 0.0;
      if (d > 0) {
        mean = state.sticks.atoms[static_cast<std::size_t>(d - 1)].mu;
        prior_var[j] = state.lambda(j, s);
      } else {
        prior_var[j] = spec.variant == SpikeVariant::normal_diffuse ? state.tau0 : state.lambda(j, s);
      }
      u[j] = sample_normal(mean, std::sqrt(prior_var[j]), rng);
      const double x = y_prev[j / n];
      resid[j % n] -= x * u[j];
      gram(j % n, j % n) += x * x * prior_var[j];
    }
    for (Eigen::Index i = 0; i < n; ++i) e[i] = sample_normal(0.0, 1.0, rng);
    resid -= l * e;
    Eigen::LLT<Matrix> llt(gram);
    if (llt.info() != Eigen::Success) throw SingularPrecision("coefficient update: system matrix is not positive definite");
    const Vector w = llt.solve(resid);
    for (Eigen::Index j = 0; j < nn; ++j)
      state.beta(j, s) = prior_var[j] > 0.0 ? u[j] + prior_var[j] * y_prev[j / n] * w[j % n] : 0.0;
  }
}

template <class URBG>
void update_sigma(const ModelSpec& spec, ChainState& state, const Panel& panel, URBG& rng) {
  state.sigma = sample_inverse_wishart(sigma_conditional(spec, state, panel), rng);
}

template <class URBG>
void update_pi(const ModelSpec& spec, ChainState& state, URBG& rng, const SweepHooks& hooks = {}) {
  for (Eigen::Index s = 0; s < state.pi.size(); ++s) {
    BetaParams p = pi_conditional(spec, state, s);
    if (hooks.swap_pi_parameters) std::swap(p.a, p.b);
    state.pi[s] = std::clamp(sample_beta(p.a, p.b, rng), kStickFloor, 1.0 - kStickFloor);
  }
}

/// One sweep in the fixed order: sticks/links/slices, lambda, atoms and
/// spike scale, allocations, coefficients, covariance, mixing weights.
template <class URBG>
void sweep(const ModelSpec& spec, const Panel& panel, ChainState& state, URBG& rng, const SweepHooks& hooks = {}) {
  update_sticks_aux_slices(spec, state, rng);
  update_lambda(spec, state, rng);
  update_atoms(spec, state, rng);
  update_allocations(spec, state, panel, rng);
  update_beta(spec, state, panel, rng);
  update_sigma(spec, state, panel, rng);
  update_pi(spec, state, rng, hooks);
}

inline void check_panel(const ModelSpec& spec, const Panel& panel) {
  panel.validate();
  if (panel.n() != spec.n || panel.T() != spec.T)
    throw InvalidParameters("panel dimensions do not match the model specification");
}

/// Starting point: per-time ridge fit for beta, its residual covariance for
/// Sigma, everything in the slab on a single atom.
template <class URBG>
ChainState initial_state(const ModelSpec& spec, const Panel& panel, URBG& rng) {
  spec.validate();
  check_panel(spec, panel);
  const Eigen::Index n = spec.n;
  const Eigen::Index S = spec.slices();
  const Hyper& h = spec.hyper;

  ChainState st;
  st.beta.resize(n * n, S);
  for (Eigen::Index s = 0; s < S; ++s)
    st.beta.col(s) = ridge_fit(panel.y.row(s).transpose(), panel.y.row(s + 1).transpose(), 1.0);
  st.sigma = residual_outer(st, panel) / static_cast<double>(S);
  st.sigma.diagonal().array() += 1e-6;
  st.lambda = Matrix::Ones(n * n, S);
  st.u = Matrix::Zero(n * n, S);
  st.gamma = IntMatrix::Ones(n * n, S);
  st.d_alloc = IntMatrix::Ones(n * n, S);
  st.pi = Vector::Constant(S, 0.5);
  st.tau0 = spec.variant == SpikeVariant::dirac ? 0.0 : tau0_prior_mean(spec);
  st.sticks = init_chain(h.alpha, h.m, spec.T, h.base(), 1, rng);
  st.sticks.atoms[0] = Atom{0.0, h.a1 * h.b1};
  return st;
}

struct RunOptions {
  std::int64_t iters = 1000;
  std::int64_t burn_in = 0;
  std::int64_t thin = 1;
  std::uint64_t seed = 1;
  std::int64_t progress_every = 0;
  std::ostream* progress = nullptr;
  std::string label;
};

inline void validate(const RunOptions& o) {
  if (o.iters < 0 || o.burn_in < 0) throw InvalidParameters("iters and burn_in must be nonnegative");
  if (o.iters < o.burn_in) throw InvalidParameters("iters must be at least burn_in");
  if (o.thin < 1) throw InvalidParameters("thin must be at least 1");
}

inline PosteriorDraws run_chain(const ModelSpec& spec, const Panel& panel, const RunOptions& opt) {
  validate(opt);
  PosteriorDraws out;
  out.spec = spec;
  out.info.seed = opt.seed;
  out.info.iters = opt.iters;
  out.info.burn_in = opt.burn_in;
  out.info.thin = opt.thin;
  out.info.names = panel.names;
  out.info.means = panel.means;
  out.info.scales = panel.scales;

  Rng rng(opt.seed);
  ChainState state = initial_state(spec, panel, rng);
  for (std::int64_t it = 1; it <= opt.iters; ++it) {
    try {
      sweep(spec, panel, state, rng);
    } catch (const SingularPrecision& e) {
      throw SingularPrecision("iteration " + std::to_string(it) + ": " + e.what());
    } catch (const NumericalError& e) {
      throw NumericalError("iteration " + std::to_string(it) + ": " + e.what());
    }
    if (it > opt.burn_in && (it - opt.burn_in) % opt.thin == 0) out.draws.push_back(record_of(state, it));
    if (opt.progress && opt.progress_every > 0 && it % opt.progress_every == 0) {
      *opt.progress << opt.label << "iter " << it << "/" << opt.iters << "  k*=" << state.k_star()
                    << "  slab=" << state.gamma.sum() << "\n";
    }
  }
  return out;
}

}  // namespace bnptvp

#endif  // BNPTVP_GIBBS_HPP
