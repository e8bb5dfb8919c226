// Apache License, Version 2.0, refer to LICENSE.txt

#ifndef BNPTVP_GEWEKE_HPP
#define BNPTVP_GEWEKE_HPP

#include <cmath>
#include <cstdint>
#include <future>
#include <string>
#include <vector>

#include "bnptvp/diagnostics.hpp"
#include "bnptvp/distributions.hpp"
#include "bnptvp/error.hpp"
#include "bnptvp/gibbs.hpp"
#include "bnptvp/model.hpp"
#include "bnptvp/tsddp.hpp"
#include "bnptvp/var_core.hpp"

namespace bnptvp {

/// Small system with every monitored moment finite: a0 > 2 keeps the spike
/// scale's inverse moments bounded, nu = n + 10 keeps Sigma's fourth moments.
inline ModelSpec geweke_spec(SpikeVariant variant, int n = 2, int T = 4) {
  ModelSpec spec = default_spec(n, T, variant);
  Hyper& h = spec.hyper;
  h.c = 0.0;
  h.d = 0.5;
  h.a1 = 4.0;
  h.b1 = 0.5;
  h.a0 = 4.0;
  h.b0 = 0.5;
  h.alpha = 1.0;
  h.eta = 1.0;
  h.m = 3;
  h.nu = n + 10.0;
  h.psi = Matrix::Identity(n, n);
  return spec;
}

/// One joint draw of parameters and latent variables from the prior.
template <class URBG>
ChainState sample_prior_state(const ModelSpec& spec, URBG& rng) {
  const Hyper& h = spec.hyper;
  const Eigen::Index nn = spec.coefficients();
  const Eigen::Index S = spec.slices();

  ChainState st;
  st.pi.resize(S);
  for (Eigen::Index s = 0; s < S; ++s) st.pi[s] = std::clamp(sample_beta(1.0, h.eta, rng), kStickFloor, 1.0 - kStickFloor);
  st.sticks = init_chain(h.alpha, h.m, spec.T, h.base(), 1, rng);
  st.gamma = IntMatrix::Zero(nn, S);
  st.d_alloc = IntMatrix::Zero(nn, S);
  for (Eigen::Index s = 0; s < S; ++s)
    for (Eigen::Index j = 0; j < nn; ++j) {
      if (!sample_bernoulli(1.0 - st.pi[s], rng)) continue;
      st.gamma(j, s) = 1;
      const double target = uniform_open(rng);
      const auto slice = static_cast<std::size_t>(s) + 1;
      double cum = 0.0;
      std::size_t k = 0;
      for (;; ++k) {
        if (k == st.sticks.size()) grow_components(st.sticks, k + 1, rng);
        cum += st.sticks.w[k][slice];
        if (target < cum) break;
      }
      st.d_alloc(j, s) = static_cast<int>(k) + 1;
    }
  truncate_components(st.sticks, static_cast<std::size_t>(st.k_star()));

  switch (spec.variant) {
    case SpikeVariant::de_diffuse:
      st.tau0 = sample_gamma(h.a0, h.b0, rng);
      break;
    case SpikeVariant::normal_diffuse:
      st.tau0 = sample_inverse_gamma(h.a0, h.b0, rng);
      break;
    case SpikeVariant::dirac:
      st.tau0 = 0.0;
      break;
  }

  st.lambda.resize(nn, S);
  st.beta.resize(nn, S);
  st.u = Matrix::Zero(nn, S);
  for (Eigen::Index s = 0; s < S; ++s)
    for (Eigen::Index j = 0; j < nn; ++j) {
      const int d = st.d_alloc(j, s);
      if (d > 0) {
        const Atom& a = st.sticks.atoms[static_cast<std::size_t>(d - 1)];
        st.lambda(j, s) = sample_exponential(2.0 / a.tau, rng);
        st.beta(j, s) = sample_normal(a.mu, std::sqrt(st.lambda(j, s)), rng);
      } else if (spec.variant == SpikeVariant::de_diffuse) {
        st.lambda(j, s) = sample_exponential(2.0 / st.tau0, rng);
        st.beta(j, s) = sample_normal(0.0, std::sqrt(st.lambda(j, s)), rng);
      } else {
        st.lambda(j, s) = sample_exponential(pseudo_lambda_scale(h), rng);
        st.beta(j, s) = spec.variant == SpikeVariant::normal_diffuse ? sample_normal(0.0, std::sqrt(st.tau0), rng) : 0.0;
      }
    }
  st.sigma = sample_inverse_wishart(InverseWishartParams{h.nu, h.psi}, rng);
  return st;
}

/// Observations y_2..y_T given the coefficients, keeping y_1.
template <class URBG>
void resimulate_data(const ChainState& st, Panel& panel, URBG& rng) {
  const Eigen::Index n = panel.n();
  const Matrix l = st.sigma.llt().matrixL();
  Vector e(n);
  for (Eigen::Index s = 0; s < st.beta.cols(); ++s) {
    for (Eigen::Index i = 0; i < n; ++i) e[i] = sample_normal(0.0, 1.0, rng);
    const Vector prev = panel.y.row(s).transpose();
    panel.y.row(s + 1) = (apply_design(prev, st.beta.col(s)) + l * e).transpose();
  }
}

inline std::vector<std::string> geweke_statistic_names(const ModelSpec& spec) {
  std::vector<std::string> names = {"beta_first",  "beta_first_sq", "beta_last", "beta_last_sq", "beta_sq_sum",
                                    "sigma11",     "sigma11_sq",    "pi_first",  "pi_first_sq",  "pi_x_slab",
                                    "slab_count",  "slab_count_sq", "k_star",    "k_star_sq",    "log_lambda"};
  if (spec.n >= 2) names.push_back("sigma12");
  if (spec.variant != SpikeVariant::dirac) names.push_back("tau0");
  return names;
}

inline std::vector<double> geweke_statistics(const ModelSpec& spec, const ChainState& st) {
  const Eigen::Index last_j = st.beta.rows() - 1;
  const Eigen::Index last_s = st.beta.cols() - 1;
  const double b0 = st.beta(0, 0);
  const double bl = st.beta(last_j, last_s);
  const double slab0 = st.gamma.col(0).sum();
  const double slab = st.gamma.sum();
  const double k = st.k_star();
  std::vector<double> g = {b0,
                           b0 * b0,
                           bl,
                           bl * bl,
                           st.beta.squaredNorm(),
                           st.sigma(0, 0),
                           st.sigma(0, 0) * st.sigma(0, 0),
                           st.pi[0],
                           st.pi[0] * st.pi[0],
                           st.pi[0] * slab0,
                           slab,
                           slab * slab,
                           k,
                           k * k,
                           std::log(st.lambda(0, 0))};
  if (spec.n >= 2) g.push_back(st.sigma(0, 1));
  if (spec.variant != SpikeVariant::dirac) g.push_back(st.tau0);
  return g;
}

struct GewekeStatistic {
  std::string name;
  double mean_marginal = 0.0;
  double mean_successive = 0.0;
  double se_marginal = 0.0;
  double se_successive = 0.0;
  double z = 0.0;
};

struct GewekeResult {
  std::vector<GewekeStatistic> stats;
  double max_abs_z() const {
    double m = 0.0;
    for (const auto& s : stats) m = std::max(m, std::abs(s.z));
    return m;
  }
};

struct GewekeOptions {
  std::int64_t sweeps = 100000;
  std::uint64_t seed = 1;
  SweepHooks hooks;
};

/// Marginal-conditional draws (prior forward) against successive-conditional
/// draws (Gibbs sweep, then data regenerated), compared moment by moment.
inline GewekeResult geweke_joint_test(const ModelSpec& spec, const GewekeOptions& opt) {
  if (opt.sweeps < 1) throw InvalidParameters("geweke: need at least one sweep");
  spec.validate();
  const auto names = geweke_statistic_names(spec);
  const std::size_t K = names.size();
  const auto N = static_cast<std::size_t>(opt.sweeps);
  Vector y1 = Vector::Zero(spec.n);
  for (Eigen::Index i = 0; i < y1.size(); ++i) y1[i] = i % 2 == 0 ? 0.5 : -0.5;

  auto fresh_panel = [&]() {
    Panel p;
    p.y = Matrix::Zero(spec.T, spec.n);
    p.y.row(0) = y1.transpose();
    return p;
  };

  auto marginal = std::async(std::launch::async, [&]() {
    Rng rng(opt.seed);
    std::vector<std::vector<double>> out(K, std::vector<double>(N));
    for (std::size_t i = 0; i < N; ++i) {
      const ChainState st = sample_prior_state(spec, rng);
      const auto g = geweke_statistics(spec, st);
      for (std::size_t k = 0; k < K; ++k) out[k][i] = g[k];
    }
    return out;
  });

  std::vector<std::vector<double>> successive(K, std::vector<double>(N));
  {
    Rng rng(opt.seed ^ 0x9e3779b97f4a7c15ULL);
    ChainState st = sample_prior_state(spec, rng);
    Panel panel = fresh_panel();
    resimulate_data(st, panel, rng);
    for (std::size_t i = 0; i < N; ++i) {
      sweep(spec, panel, st, rng, opt.hooks);
      resimulate_data(st, panel, rng);
      const auto g = geweke_statistics(spec, st);
      for (std::size_t k = 0; k < K; ++k) successive[k][i] = g[k];
    }
  }
  const auto mc = marginal.get();

  GewekeResult res;
  for (std::size_t k = 0; k < K; ++k) {
    GewekeStatistic s;
    s.name = names[k];
    s.mean_marginal = mean_of(mc[k]);
    s.mean_successive = mean_of(successive[k]);
    s.se_marginal = std::sqrt(variance_of(mc[k]) / static_cast<double>(N));
    double ess = effective_sample_size(successive[k]);
    if (!std::isfinite(ess)) ess = static_cast<double>(N);
    s.se_successive = std::sqrt(variance_of(successive[k]) / ess);
    const double se = std::hypot(s.se_marginal, s.se_successive);
    const double diff = s.mean_marginal - s.mean_successive;
    s.z = se > 0.0 ? diff / se : (diff == 0.0 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), diff));
    res.stats.push_back(s);
  }
  return res;
}

}  // namespace bnptvp

#endif  // BNPTVP_GEWEKE_HPP
