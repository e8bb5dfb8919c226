// Apache License, Version 2.0, refer to LICENSE.txt

#ifndef BNPTVP_DISTRIBUTIONS_HPP
#define BNPTVP_DISTRIBUTIONS_HPP

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "bnptvp/error.hpp"
#include "bnptvp/special.hpp"

// Gamma and Inverse-Gamma use the shape-scale parametrization throughout:
//   Ga(x|a,b)  = x^{a-1} e^{-x/b} / (b^a Gamma(a)),      E[x] = a b
//   IG(x|a,b)  = b^a x^{-a-1} e^{-b/x} / Gamma(a)
//   Exp(x|b)   = Ga(x|1,b)
// GiG(x|p,a,b) is proportional to x^{p-1} exp(-(a x + b / x) / 2).

namespace bnptvp {

using Rng = std::mt19937_64;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

struct GigParams {
  double p = 0.0;
  double a = 0.0;
  double b = 0.0;

  void validate() const {
    if (!std::isfinite(p) || !(a >= 0.0) || !(b >= 0.0) || !std::isfinite(a) ||
        !std::isfinite(b))
      throw InvalidParameters("GiG: parameters must be finite with a, b >= 0");
    if (b == 0.0 && !(a > 0.0 && p > 0.0))
      throw InvalidParameters("GiG: b = 0 requires a > 0 and p > 0");
    if (a == 0.0 && !(b > 0.0 && p < 0.0))
      throw InvalidParameters("GiG: a = 0 requires b > 0 and p < 0");
  }
};

struct InverseWishartParams {
  double nu = 0.0;
  Matrix psi;
};

struct BetaParams {
  double a = 1.0;
  double b = 1.0;
  friend bool operator==(const BetaParams&, const BetaParams&) = default;
};

struct GammaParams {
  double shape = 1.0;
  double scale = 1.0;
  friend bool operator==(const GammaParams&, const GammaParams&) = default;
};

struct NormalParams {
  double mean = 0.0;
  double variance = 1.0;
};

// ---------------------------------------------------------------------------
// Scalar families

/// Uniform on the open interval (0, 1).
template <class URBG>
double uniform_open(URBG& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  double u = 0.0;
  do {
    u = unif(rng);
  } while (u <= 0.0);
  return u;
}

template <class URBG>
double sample_normal(double mean, double sd, URBG& rng) {
  std::normal_distribution<double> dist(mean, sd);
  return dist(rng);
}

template <class URBG>
double sample_gamma(double shape, double scale, URBG& rng) {
  if (!(shape > 0.0) || !(scale > 0.0) || !std::isfinite(shape) || !std::isfinite(scale))
    throw InvalidParameters("gamma: shape and scale must be positive");
  std::gamma_distribution<double> dist(shape, scale);
  return dist(rng);
}

template <class URBG>
double sample_inverse_gamma(double shape, double scale, URBG& rng) {
  if (!(shape > 0.0) || !(scale > 0.0))
    throw InvalidParameters("inverse-gamma: shape and scale must be positive");
  return 1.0 / sample_gamma(shape, 1.0 / scale, rng);
}

template <class URBG>
double sample_exponential(double scale, URBG& rng) {
  return sample_gamma(1.0, scale, rng);
}

template <class URBG>
double sample_beta(double a, double b, URBG& rng) {
  if (!(a > 0.0) || !(b > 0.0) || !std::isfinite(a) || !std::isfinite(b))
    throw InvalidParameters("beta: both shapes must be positive");
  const double x = sample_gamma(a, 1.0, rng);
  const double y = sample_gamma(b, 1.0, rng);
  if (x + y > 0.0) return x / (x + y);
  // Both gamma draws underflowed (tiny shapes): the mass sits at the endpoints.
  return uniform_open(rng) < a / (a + b) ? 1.0 : 0.0;
}

template <class URBG>
int sample_binomial(int trials, double p, URBG& rng) {
  if (trials < 0 || !(p >= 0.0 && p <= 1.0))
    throw InvalidParameters("binomial: need trials >= 0 and p in [0, 1]");
  if (trials == 0) return 0;
  std::binomial_distribution<int> dist(trials, p);
  return dist(rng);
}

template <class URBG>
bool sample_bernoulli(double p, URBG& rng) {
  if (!(p >= 0.0 && p <= 1.0)) throw InvalidParameters("bernoulli: p must lie in [0, 1]");
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  return unif(rng) < p;
}

/// Index drawn proportionally to nonnegative weights (need not be normalized).
/// One uniform is compared against the running cumulative sum in index order.
template <class URBG>
std::size_t sample_categorical(std::span<const double> weights, URBG& rng) {
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w))
      throw InvalidParameters("categorical: weights must be finite and nonnegative");
    total += w;
  }
  if (!(total > 0.0)) throw InvalidParameters("categorical: weights sum to zero");
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double target = unif(rng) * total;
  double running = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    running += weights[i];
    if (target < running) return i;
  }
  // Rounding: return the last index carrying positive weight.
  for (std::size_t i = weights.size(); i-- > 0;)
    if (weights[i] > 0.0) return i;
  return weights.size() - 1;
}

/// Categorical draw from unnormalized log-weights (-inf allowed).
template <class URBG>
std::size_t sample_categorical_log(std::span<const double> log_weights, URBG& rng) {
  double top = -std::numeric_limits<double>::infinity();
  for (double lw : log_weights) top = std::max(top, lw);
  if (!std::isfinite(top))
    throw NumericalError("categorical: every log-weight is -inf or not finite");
  std::vector<double> w(log_weights.size());
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = std::exp(log_weights[i] - top);
  return sample_categorical(std::span<const double>(w), rng);
}

enum class Family { beta, gamma, inverse_gamma, exponential, binomial, bernoulli, categorical };

/// Generic front end. Parameter layout per family:
/// beta (a, b); gamma (shape, scale); inverse_gamma (shape, scale);
/// exponential (scale); binomial (trials, p); bernoulli (p);
/// categorical (w_0, w_1, ...), returning the index.
template <class URBG>
double sample_standard(Family family, std::span<const double> params, URBG& rng) {
  auto need = [&](std::size_t count) {
    if (params.size() != count) throw InvalidParameters("sample_standard: wrong parameter count");
  };
  switch (family) {
    case Family::beta:
      need(2);
      return sample_beta(params[0], params[1], rng);
    case Family::gamma:
      need(2);
      return sample_gamma(params[0], params[1], rng);
    case Family::inverse_gamma:
      need(2);
      return sample_inverse_gamma(params[0], params[1], rng);
    case Family::exponential:
      need(1);
      return sample_exponential(params[0], rng);
    case Family::binomial: {
      need(2);
      const double trials = params[0];
      if (trials != std::floor(trials) || trials < 0.0 || trials > 1e9)
        throw InvalidParameters("binomial: trials must be a nonnegative integer");
      return sample_binomial(static_cast<int>(trials), params[1], rng);
    }
    case Family::bernoulli:
      need(1);
      return sample_bernoulli(params[0], rng) ? 1.0 : 0.0;
    case Family::categorical:
      return static_cast<double>(sample_categorical(params, rng));
  }
  throw InvalidParameters("sample_standard: unknown family");
}

// ---------------------------------------------------------------------------
// Log densities

inline double log_gamma_pdf(double x, double shape, double scale) {
  if (!(x > 0.0)) return -std::numeric_limits<double>::infinity();
  return (shape - 1.0) * std::log(x) - x / scale - shape * std::log(scale) -
         std::lgamma(shape);
}

inline double log_inverse_gamma_pdf(double x, double shape, double scale) {
  if (!(x > 0.0)) return -std::numeric_limits<double>::infinity();
  return shape * std::log(scale) - std::lgamma(shape) - (shape + 1.0) * std::log(x) - scale / x;
}

inline double log_exponential_pdf(double x, double scale) {
  if (x < 0.0) return -std::numeric_limits<double>::infinity();
  return -std::log(scale) - x / scale;
}

inline double log_beta_pdf(double x, double a, double b) {
  if (!(x > 0.0 && x < 1.0)) return -std::numeric_limits<double>::infinity();
  return (a - 1.0) * std::log(x) + (b - 1.0) * std::log1p(-x) + std::lgamma(a + b) -
         std::lgamma(a) - std::lgamma(b);
}

/// Log density of GiG(p, a, b), including the a = 0 and b = 0 limits.
inline double log_gig_pdf(double x, const GigParams& g) {
  if (!(x > 0.0)) return -std::numeric_limits<double>::infinity();
  if (g.b == 0.0) return log_gamma_pdf(x, g.p, 2.0 / g.a);
  if (g.a == 0.0) return log_inverse_gamma_pdf(x, -g.p, g.b / 2.0);
  const double omega = std::sqrt(g.a * g.b);
  return 0.5 * g.p * std::log(g.a / g.b) - std::log(2.0) - log_bessel_k(g.p, omega) +
         (g.p - 1.0) * std::log(x) - 0.5 * (g.a * x + g.b / x);
}

/// E[X] for X ~ GiG(p, a, b) with a, b > 0.
inline double gig_mean(const GigParams& g) {
  const double omega = std::sqrt(g.a * g.b);
  return std::sqrt(g.b / g.a) * bessel_k_ratio(g.p, omega);
}

// ---------------------------------------------------------------------------
// Generalized inverse Gaussian.
//
// Hoermann & Leydold (2014): the standardized variate GiG(lambda, omega, omega)
// with lambda >= 0 is drawn by one of three schemes, then rescaled by
// sqrt(b/a) and inverted for negative orders.

namespace detail {

inline double gig_mode(double lambda, double omega) {
  if (lambda >= 1.0)
    return (std::sqrt((lambda - 1.0) * (lambda - 1.0) + omega * omega) + (lambda - 1.0)) / omega;
  return omega / (std::sqrt((1.0 - lambda) * (1.0 - lambda) + omega * omega) + (1.0 - lambda));
}

// Ratio-of-uniforms, mode shift, Cardano solution for the bounding rectangle.
template <class URBG>
double gig_rou_shift(double lambda, double omega, URBG& rng) {
  const double t = 0.5 * (lambda - 1.0);
  const double s = 0.25 * omega;
  const double xm = gig_mode(lambda, omega);
  const double nc = t * std::log(xm) - s * (xm + 1.0 / xm);

  const double a = -(2.0 * (lambda + 1.0) / omega + xm);
  const double b = 2.0 * (lambda - 1.0) * xm / omega - 1.0;
  const double c = xm;
  const double p = b - a * a / 3.0;
  const double q = 2.0 * a * a * a / 27.0 - a * b / 3.0 + c;
  const double phi = std::acos(-q / (2.0 * std::sqrt(-(p * p * p) / 27.0)));
  const double fak = 2.0 * std::sqrt(-p / 3.0);
  const double y1 = fak * std::cos(phi / 3.0) - a / 3.0;
  const double y2 = fak * std::cos(phi / 3.0 + 4.0 / 3.0 * std::numbers::pi) - a / 3.0;

  const double uplus = (y1 - xm) * std::exp(t * std::log(y1) - s * (y1 + 1.0 / y1) - nc);
  const double uminus = (y2 - xm) * std::exp(t * std::log(y2) - s * (y2 + 1.0 / y2) - nc);

  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (;;) {
    const double u = uminus + unif(rng) * (uplus - uminus);
    const double v = uniform_open(rng);
    const double x = u / v + xm;
    if (x <= 0.0) continue;
    if (std::log(v) <= t * std::log(x) - s * (x + 1.0 / x) - nc) return x;
  }
}

// Ratio-of-uniforms without mode shift.
template <class URBG>
double gig_rou_noshift(double lambda, double omega, URBG& rng) {
  const double t = 0.5 * (lambda - 1.0);
  const double s = 0.25 * omega;
  const double xm = gig_mode(lambda, omega);
  const double nc = t * std::log(xm) - s * (xm + 1.0 / xm);
  const double ym = ((lambda + 1.0) + std::sqrt((lambda + 1.0) * (lambda + 1.0) + omega * omega)) /
                    omega;
  const double um = std::exp(0.5 * (lambda + 1.0) * std::log(ym) - s * (ym + 1.0 / ym) - nc);

  for (;;) {
    const double u = um * uniform_open(rng);
    const double v = uniform_open(rng);
    const double x = u / v;
    if (std::log(v) <= t * std::log(x) - s * (x + 1.0 / x) - nc) return x;
  }
}

// Three-piece envelope for the non-T-concave region (lambda < 1, small omega).
template <class URBG>
double gig_split_envelope(double lambda, double omega, URBG& rng) {
  const double xm = gig_mode(lambda, omega);
  const double x0 = omega / (1.0 - lambda);

  const double k0 = std::exp((lambda - 1.0) * std::log(xm) - 0.5 * omega * (xm + 1.0 / xm));
  const double area0 = k0 * x0;
  double k1 = 0.0;
  double area1 = 0.0;
  double k2 = 0.0;
  double area2 = 0.0;
  if (x0 >= 2.0 / omega) {
    k2 = std::pow(x0, lambda - 1.0);
    area2 = k2 * 2.0 * std::exp(-omega * x0 / 2.0) / omega;
  } else {
    k1 = std::exp(-omega);
    area1 = lambda == 0.0 ? k1 * std::log(2.0 / (omega * omega))
                          : k1 / lambda * (std::pow(2.0 / omega, lambda) - std::pow(x0, lambda));
    k2 = std::pow(2.0 / omega, lambda - 1.0);
    area2 = k2 * 2.0 * std::exp(-1.0) / omega;
  }
  const double total = area0 + area1 + area2;
  const double tail_start = std::max(x0, 2.0 / omega);

  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (;;) {
    double v = total * unif(rng);
    double x = 0.0;
    double hx = 0.0;
    if (v <= area0) {
      x = x0 * v / area0;
      hx = k0;
    } else if ((v -= area0) <= area1) {
      if (lambda == 0.0) {
        x = omega * std::exp(std::exp(omega) * v);
        hx = k1 / x;
      } else {
        x = std::pow(std::pow(x0, lambda) + lambda / k1 * v, 1.0 / lambda);
        hx = k1 * std::pow(x, lambda - 1.0);
      }
    } else {
      v -= area1;
      x = -2.0 / omega * std::log(std::exp(-omega / 2.0 * tail_start) - omega / (2.0 * k2) * v);
      hx = k2 * std::exp(-omega / 2.0 * x);
    }
    if (!(x > 0.0) || !std::isfinite(x)) continue;
    const double u = unif(rng) * hx;
    if (std::log(u) <= (lambda - 1.0) * std::log(x) - 0.5 * omega * (x + 1.0 / x)) return x;
  }
}

}  // namespace detail

template <class URBG>
double sample_gig(const GigParams& g, URBG& rng) {
  g.validate();
  if (g.b == 0.0) return sample_gamma(g.p, 2.0 / g.a, rng);
  if (g.a == 0.0) return sample_inverse_gamma(-g.p, g.b / 2.0, rng);

  const double lambda = std::abs(g.p);
  const double omega = std::sqrt(g.a * g.b);
  const double scale = std::sqrt(g.b / g.a);

  double x = 0.0;
  if (lambda > 2.0 || omega > 3.0) {
    x = detail::gig_rou_shift(lambda, omega, rng);
  } else if (lambda >= 1.0 - 2.25 * omega * omega || omega > 0.2) {
    x = detail::gig_rou_noshift(lambda, omega, rng);
  } else if (omega > 1e-10) {
    x = detail::gig_split_envelope(lambda, omega, rng);
  } else {
    // omega underflows the envelope constants: the variate is Gamma-like
    // (p > 0) or Inverse-Gamma-like (p < 0) at this scale.
    if (g.p > 0.0) return sample_gamma(g.p, 2.0 / g.a, rng);
    if (g.p < 0.0) return sample_inverse_gamma(-g.p, g.b / 2.0, rng);
    x = detail::gig_split_envelope(lambda, 1e-10, rng);
  }
  return g.p < 0.0 ? scale / x : scale * x;
}

// ---------------------------------------------------------------------------
// Multivariate

/// Draw from N(Q^{-1} m, Q^{-1}) given the precision Q and mean term m,
/// using a single Cholesky factorization of Q.
template <class URBG>
Vector sample_mvn_from_precision(const Vector& mean_term, const Matrix& precision, URBG& rng) {
  const Eigen::Index dim = precision.rows();
  if (precision.cols() != dim || mean_term.size() != dim)
    throw InvalidParameters("mvn: dimension mismatch between precision and mean term");
  if (dim == 0) return Vector(0);
  Eigen::LLT<Matrix> llt(precision);
  if (llt.info() != Eigen::Success) throw SingularPrecision("mvn: precision is not positive definite");
  const Matrix& l = llt.matrixLLT();
  const double top = l.diagonal().cwiseAbs().maxCoeff();
  if (!(l.diagonal().minCoeff() > 1e-7 * top) || !std::isfinite(top))
    throw SingularPrecision("mvn: precision is numerically singular");

  Vector mean = llt.solve(mean_term);
  Vector z(dim);
  for (Eigen::Index i = 0; i < dim; ++i) z[i] = sample_normal(0.0, 1.0, rng);
  // L^{-T} z has covariance (L L^T)^{-1}.
  llt.matrixU().solveInPlace(z);
  return mean + z;
}

inline void validate(const InverseWishartParams& iw) {
  const Eigen::Index n = iw.psi.rows();
  if (n == 0 || iw.psi.cols() != n) throw InvalidParameters("inverse-Wishart: scale must be square");
  if (!(iw.nu > static_cast<double>(n) - 1.0))
    throw InvalidParameters("inverse-Wishart: need nu > n - 1");
  if (!iw.psi.isApprox(iw.psi.transpose(), 1e-10))
    throw InvalidParameters("inverse-Wishart: scale must be symmetric");
  Eigen::LLT<Matrix> llt(iw.psi);
  if (llt.info() != Eigen::Success)
    throw InvalidParameters("inverse-Wishart: scale must be positive definite");
}

/// Sigma ~ IW(nu, Psi), density proportional to
/// |Sigma|^{-(nu+n+1)/2} exp(-tr(Psi Sigma^{-1}) / 2).
/// Bartlett decomposition of the Wishart(nu, Psi^{-1}) precision.
template <class URBG>
Matrix sample_inverse_wishart(const InverseWishartParams& iw, URBG& rng) {
  validate(iw);
  const Eigen::Index n = iw.psi.rows();
  const Matrix psi = 0.5 * (iw.psi + iw.psi.transpose());
  const Matrix l = psi.llt().matrixL();

  Matrix bartlett = Matrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    bartlett(i, i) = std::sqrt(2.0 * sample_gamma(0.5 * (iw.nu - static_cast<double>(i)), 1.0, rng));
    for (Eigen::Index j = 0; j < i; ++j) bartlett(i, j) = sample_normal(0.0, 1.0, rng);
  }
  // Sigma = (L A^{-T})(L A^{-T})^T = X^T X with X = A^{-1} L^T.
  Matrix x = l.transpose();
  bartlett.triangularView<Eigen::Lower>().solveInPlace(x);
  Matrix sigma = x.transpose() * x;
  return 0.5 * (sigma + sigma.transpose());
}

}  // namespace bnptvp

#endif  // BNPTVP_DISTRIBUTIONS_HPP
