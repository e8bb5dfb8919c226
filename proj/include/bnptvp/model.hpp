// Apache License, Version 2.0, refer to LICENSE.txt

#ifndef BNPTVP_MODEL_HPP
#define BNPTVP_MODEL_HPP

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "bnptvp/distributions.hpp"
#include "bnptvp/error.hpp"
#include "bnptvp/tsddp.hpp"

namespace bnptvp {

using IntMatrix = Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic>;

enum class SpikeVariant { dirac, normal_diffuse, de_diffuse };

inline std::string to_string(SpikeVariant v) {
  switch (v) {
    case SpikeVariant::dirac:
      return "dirac";
    case SpikeVariant::normal_diffuse:
      return "normal";
    case SpikeVariant::de_diffuse:
      return "de";
  }
  return "unknown";
}

inline SpikeVariant parse_variant(const std::string& s) {
  if (s == "dirac") return SpikeVariant::dirac;
  if (s == "normal" || s == "normal_diffuse") return SpikeVariant::normal_diffuse;
  if (s == "de" || s == "de_diffuse") return SpikeVariant::de_diffuse;
  throw InvalidParameters("unknown spike variant '" + s + "' (expected dirac, normal or de)");
}

struct Hyper {
  double c = 0.0;
  double d = 4.0;
  double a1 = 20.0;
  double b1 = 0.1;
  double a0 = 0.64;
  double b0 = 1.25;
  double alpha = 1.0;
  double eta = 1.0;
  int m = 5;
  double nu = 0.0;
  Matrix psi;

  BaseMeasure base() const { return {c, d, a1, b1}; }
};

/// Prior defaults for an n-dimensional system: nu = n + 12, Psi = I / n.
inline Hyper default_hyper(int n) {
  Hyper h;
  h.nu = n + 12.0;
  h.psi = Matrix::Identity(n, n) / static_cast<double>(n);
  return h;
}

struct ModelSpec {
  int n = 1;
  int T = 2;
  SpikeVariant variant = SpikeVariant::dirac;
  Hyper hyper;

  int coefficients() const { return n * n; }
  int slices() const { return T - 1; }

  void validate() const {
    if (n < 1) throw InvalidParameters("spec: n must be at least 1");
    if (T < 2) throw InvalidParameters("spec: T must be at least 2");
    const Hyper& h = hyper;
    if (!(h.d > 0.0)) throw InvalidParameters("spec: d must be positive");
    if (!(h.a1 > 0.0)) throw InvalidParameters("spec: a1 must be positive");
    if (!(h.b1 > 0.0)) throw InvalidParameters("spec: b1 must be positive");
    if (!(h.a0 > 0.0)) throw InvalidParameters("spec: a0 must be positive");
    if (!(h.b0 > 0.0)) throw InvalidParameters("spec: b0 must be positive");
    if (!(h.alpha > 0.0)) throw InvalidParameters("spec: alpha must be positive");
    if (!(h.eta > 0.0)) throw InvalidParameters("spec: eta must be positive");
    if (h.m < 0) throw InvalidParameters("spec: m must be nonnegative");
    if (!std::isfinite(h.c)) throw InvalidParameters("spec: c must be finite");
    validate_iw(h.nu, h.psi);
  }

 private:
  void validate_iw(double nu, const Matrix& psi) const {
    if (psi.rows() != n || psi.cols() != n) throw InvalidParameters("spec: psi must be n x n");
    InverseWishartParams iw{nu, psi};
    try {
      bnptvp::validate(iw);
    } catch (const InvalidParameters& e) {
      throw InvalidParameters(std::string("spec: nu/psi: ") + e.what());
    }
  }
};

inline ModelSpec default_spec(int n, int T, SpikeVariant variant) {
  ModelSpec spec;
  spec.n = n;
  spec.T = T;
  spec.variant = variant;
  spec.hyper = default_hyper(n);
  return spec;
}

/// Latent slots indexed (j, s): j = column-major position in B, s = 0..T-2
/// for times t = 2..T. Stick slice s + 1 of the tsDDP drives coefficient
/// slice s; stick slice 0 is the unobserved P_1.
///
/// d_alloc holds 0 for the spike and k >= 1 for tsDDP component k - 1.
struct ChainState {
  Matrix beta;
  Matrix lambda;
  Matrix u;
  IntMatrix gamma;
  IntMatrix d_alloc;
  Matrix sigma;
  double tau0 = 1.0;
  TsddpChain sticks;
  Vector pi;

  Eigen::Index slices() const { return beta.cols(); }

  /// Highest component referenced by a slab coefficient.
  int k_star() const { return d_alloc.size() == 0 ? 0 : d_alloc.maxCoeff(); }

  friend bool operator==(const ChainState& a, const ChainState& b) {
    return a.beta == b.beta && a.lambda == b.lambda && a.u == b.u && a.gamma == b.gamma &&
           a.d_alloc == b.d_alloc && a.sigma == b.sigma && a.tau0 == b.tau0 && a.sticks == b.sticks &&
           a.pi == b.pi;
  }
};

/// Pseudo-prior scale for lambda on spike slots that the likelihood does not
/// touch (Dirac and Normal spikes): Exp with the slab's prior-mean scale.
inline double pseudo_lambda_scale(const Hyper& h) { return 2.0 / (h.a1 * h.b1); }

inline double tau0_prior_mean(const ModelSpec& spec) {
  const Hyper& h = spec.hyper;
  if (spec.variant == SpikeVariant::de_diffuse) return h.a0 * h.b0;
  return h.a0 > 1.0 ? h.b0 / (h.a0 - 1.0) : h.b0;
}

struct DrawRecord {
  std::int64_t iteration = 0;
  Matrix beta;
  Matrix sigma;
  Vector pi;
  IntMatrix gamma;
  IntMatrix d_alloc;
  std::vector<Atom> atoms;
  double tau0 = 0.0;
  int k_star = 0;

  friend bool operator==(const DrawRecord& a, const DrawRecord& b) {
    return a.iteration == b.iteration && a.beta == b.beta && a.sigma == b.sigma && a.pi == b.pi &&
           a.gamma == b.gamma && a.d_alloc == b.d_alloc && a.atoms == b.atoms && a.tau0 == b.tau0 &&
           a.k_star == b.k_star;
  }
};

inline DrawRecord record_of(const ChainState& s, std::int64_t iteration) {
  DrawRecord r;
  r.iteration = iteration;
  r.beta = s.beta;
  r.sigma = s.sigma;
  r.pi = s.pi;
  r.gamma = s.gamma;
  r.d_alloc = s.d_alloc;
  r.k_star = s.k_star();
  r.atoms.assign(s.sticks.atoms.begin(), s.sticks.atoms.begin() + r.k_star);
  r.tau0 = s.tau0;
  return r;
}

struct RunInfo {
  std::uint64_t seed = 0;
  std::int64_t iters = 0;
  std::int64_t burn_in = 0;
  std::int64_t thin = 1;
  std::string input;
  std::vector<std::string> names;
  std::vector<double> means;
  std::vector<double> scales;
};

struct PosteriorDraws {
  ModelSpec spec;
  RunInfo info;
  std::vector<DrawRecord> draws;

  bool empty() const { return draws.empty(); }
  std::size_t size() const { return draws.size(); }
};

}  // namespace bnptvp

#endif  // BNPTVP_MODEL_HPP
