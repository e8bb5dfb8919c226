// Apache License, Version 2.0, refer to LICENSE.txt

#ifndef BNPTVP_VAR_CORE_HPP
#define BNPTVP_VAR_CORE_HPP

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "bnptvp/distributions.hpp"
#include "bnptvp/error.hpp"

namespace bnptvp {

/// Observations y_1..y_T stored as rows of a T x n matrix.
struct Panel {
  Matrix y;
  std::vector<std::string> names;
  // Per-series transformation applied at ingestion (identity when absent).
  std::vector<double> means;
  std::vector<double> scales;

  Eigen::Index n() const { return y.cols(); }
  Eigen::Index T() const { return y.rows(); }

  void validate() const {
    if (y.rows() < 2 || y.cols() < 1) throw InvalidParameters("panel: need T >= 2 and n >= 1");
    if (!y.allFinite()) throw InvalidParameters("panel: observations must be finite");
  }
};

/// vec() stacks columns: entry B(i, j) sits at j * n + i.
inline Vector vec(const Matrix& b) { return Eigen::Map<const Vector>(b.data(), b.size()); }

inline Matrix unvec(const Vector& beta, Eigen::Index n) {
  if (beta.size() != n * n) throw InvalidParameters("unvec: length must be n^2");
  return Eigen::Map<const Matrix>(beta.data(), n, n);
}

/// X_t = y_{t-1}' (x) I_n, so that X_t vec(B) = B y_{t-1}.
inline Matrix build_design(const Vector& y_prev) {
  const Eigen::Index n = y_prev.size();
  Matrix x = Matrix::Zero(n, n * n);
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = 0; i < n; ++i) x(i, j * n + i) = y_prev[j];
  return x;
}

/// X_t beta without forming X_t.
inline Vector apply_design(const Vector& y_prev, const Vector& beta) {
  return unvec(beta, y_prev.size()) * y_prev;
}

/// y_t = B_t y_{t-1} + e_t for t = 2..T, with coef_path[t-2] = B_t.
template <class URBG>
Panel simulate_tvp_var(const std::vector<Matrix>& coef_path, const Matrix& sigma, const Vector& y0,
                       URBG& rng) {
  const Eigen::Index n = y0.size();
  if (sigma.rows() != n || sigma.cols() != n) throw InvalidParameters("simulate: sigma must be n x n");
  for (const auto& b : coef_path)
    if (b.rows() != n || b.cols() != n) throw InvalidParameters("simulate: every B_t must be n x n");
  if (!sigma.isApprox(sigma.transpose(), 1e-12)) throw InvalidParameters("simulate: sigma must be symmetric");
  Eigen::LLT<Matrix> llt(sigma);
  if (llt.info() != Eigen::Success) throw InvalidParameters("simulate: sigma must be positive definite");
  const Matrix l = llt.matrixL();

  Panel panel;
  panel.y.resize(static_cast<Eigen::Index>(coef_path.size()) + 1, n);
  panel.y.row(0) = y0.transpose();
  Vector prev = y0;
  Vector e(n);
  for (std::size_t s = 0; s < coef_path.size(); ++s) {
    for (Eigen::Index i = 0; i < n; ++i) e[i] = sample_normal(0.0, 1.0, rng);
    prev = coef_path[s] * prev + l * e;
    panel.y.row(static_cast<Eigen::Index>(s) + 1) = prev.transpose();
  }
  for (Eigen::Index i = 0; i < n; ++i) panel.names.push_back("y" + std::to_string(i + 1));
  return panel;
}

enum class MatrixNorm { operator2, frobenius };

inline double matrix_norm(const Matrix& a, MatrixNorm norm) {
  if (norm == MatrixNorm::frobenius) return a.norm();
  if (a.size() == 0) return 0.0;
  Eigen::JacobiSVD<Matrix> svd(a);
  return svd.singularValues()[0];
}

/// Subadditive estimate (1/h) log ||B_h ... B_1|| averaged over replicates.
/// next_matrix() supplies successive factors; the running product is
/// renormalized every 50 steps. An exactly zero product yields -infinity.
inline double lyapunov_from_factors(const std::function<Matrix()>& next_matrix, int horizon, int replicates,
                                    MatrixNorm norm = MatrixNorm::operator2) {
  if (horizon < 1 || replicates < 1) throw InvalidParameters("lyapunov: need horizon >= 1 and replicates >= 1");
  double total = 0.0;
  for (int r = 0; r < replicates; ++r) {
    Matrix prod = next_matrix();
    double log_scale = 0.0;
    for (int h = 1; h <= horizon; ++h) {
      if (h > 1) prod = next_matrix() * prod;
      if (h % 50 == 0 || h == horizon) {
        const double s = matrix_norm(prod, norm);
        if (!(s > 0.0)) return -std::numeric_limits<double>::infinity();
        log_scale += std::log(s);
        prod /= s;
      }
    }
    total += log_scale / horizon;
  }
  return total / replicates;
}

/// Random factors drawn i.i.d. by sampler(rng).
template <class URBG, class Sampler>
double lyapunov_exponent(Sampler&& sampler, int horizon, int replicates, URBG& rng,
                         MatrixNorm norm = MatrixNorm::operator2) {
  return lyapunov_from_factors([&]() -> Matrix { return sampler(rng); }, horizon, replicates, norm);
}

/// Fixed path: the product B_T ... B_2, one replicate.
inline double lyapunov_exponent(const std::vector<Matrix>& path, MatrixNorm norm = MatrixNorm::operator2) {
  if (path.empty()) throw InvalidParameters("lyapunov: empty coefficient path");
  std::size_t next = 0;
  return lyapunov_from_factors([&]() -> Matrix { return path[next++]; }, static_cast<int>(path.size()), 1, norm);
}

/// Per-time ridge estimate of vec(B_t): (X'X + penalty I)^{-1} X' y_t.
inline Vector ridge_fit(const Vector& y_prev, const Vector& y, double penalty) {
  const Matrix x = build_design(y_prev);
  Matrix gram = x.transpose() * x;
  gram.diagonal().array() += penalty;
  return gram.ldlt().solve(x.transpose() * y);
}

}  // namespace bnptvp

#endif  // BNPTVP_VAR_CORE_HPP
