// Apache License, Version 2.0, refer to LICENSE.txt

#include <gtest/gtest.h>

#include <array>
#include <vector>

#include "bnptvp/distributions.hpp"
#include "bnptvp/special.hpp"
#include "support.hpp"

using namespace bnptvp;
using bnptvp::testing::ks_distance;
using bnptvp::testing::QuadratureCdf;

namespace {

template <class F>
std::vector<double> draws(int count, F&& f) {
  std::vector<double> out(static_cast<std::size_t>(count));
  for (auto& x : out) x = f();
  return out;
}

double mean(const std::vector<double>& x) {
  double s = 0.0;
  for (double v : x) s += v;
  return s / static_cast<double>(x.size());
}

double var(const std::vector<double>& x) {
  const double m = mean(x);
  double s = 0.0;
  for (double v : x) s += (v - m) * (v - m);
  return s / static_cast<double>(x.size() - 1);
}

// |sample mean - mu| within k standard errors
void expect_mean_within(const std::vector<double>& x, double mu, double sd, double k = 4.0) {
  EXPECT_NEAR(mean(x), mu, k * sd / std::sqrt(static_cast<double>(x.size())));
}

}  // namespace

TEST(Bessel, HalfOrderClosedForm) {
  for (double x : {0.01, 0.5, 2.0, 30.0, 700.0}) {
    const double expected = 0.5 * std::log(M_PI / (2.0 * x)) - x;
    EXPECT_NEAR(log_bessel_k(0.5, x), expected, 1e-9 * std::max(1.0, std::abs(expected)));
    EXPECT_NEAR(log_bessel_k(-0.5, x), expected, 1e-9 * std::max(1.0, std::abs(expected)));
  }
}

TEST(Bessel, RecurrenceAcrossOrders) {
  // K_{v+1}(x) = K_{v-1}(x) + 2v/x K_v(x)
  for (double x : {0.3, 1.7, 9.0}) {
    for (double v : {0.25, 1.3, 3.0}) {
      const double lhs = std::exp(log_bessel_k(v + 1.0, x));
      const double rhs = std::exp(log_bessel_k(v - 1.0, x)) + 2.0 * v / x * std::exp(log_bessel_k(v, x));
      EXPECT_NEAR(lhs / rhs, 1.0, 1e-8);
    }
  }
}

TEST(Gig, GammaLimitMean) {
  Rng rng(11);
  const GigParams g{2.0, 4.0, 0.0};
  const auto x = draws(1000000, [&] { return sample_gig(g, rng); });
  EXPECT_NEAR(mean(x), 1.0, 0.005);
}

TEST(Gig, BesselRatioMean) {
  Rng rng(12);
  const GigParams g{-0.5, 2.0, 2.0};
  EXPECT_NEAR(gig_mean(g), 1.0, 1e-12);
  const auto x = draws(200000, [&] { return sample_gig(g, rng); });
  EXPECT_NEAR(mean(x), 1.0, 0.01);
}

TEST(Gig, QuadratureMean) {
  Rng rng(13);
  const GigParams g{0.0, 3.0, 5.0};
  const QuadratureCdf cdf([&](double x) { return log_gig_pdf(x, g); }, 0.0, 200.0);
  const auto x = draws(200000, [&] { return sample_gig(g, rng); });
  EXPECT_NEAR(mean(x) / cdf.mean(), 1.0, 0.01);
  EXPECT_NEAR(gig_mean(g) / cdf.mean(), 1.0, 1e-6);
}

TEST(Gig, KolmogorovAgainstQuadratureGrid) {
  Rng rng(14);
  // one point per sampling regime: shifted ROU, plain ROU, split envelope
  const std::array<GigParams, 4> grid = {GigParams{2.5, 3.0, 1.5}, GigParams{0.3, 1.0, 1.0},
                                         GigParams{0.2, 0.05, 0.05}, GigParams{-1.5, 0.4, 6.0}};
  for (const auto& g : grid) {
    const double hi = 80.0 * std::max(1.0, gig_mean(g));
    const QuadratureCdf cdf([&](double x) { return log_gig_pdf(x, g); }, 0.0, hi, 400000);
    const auto x = draws(100000, [&] { return sample_gig(g, rng); });
    EXPECT_LT(ks_distance(x, cdf), 0.01) << "p=" << g.p << " a=" << g.a << " b=" << g.b;
  }
}

TEST(Gig, InverseGammaLimit) {
  Rng rng(15);
  // a = 0: Inverse-Gamma(-p, b/2); shape 3, scale 2 has mean 1
  const GigParams g{-3.0, 0.0, 4.0};
  const auto x = draws(200000, [&] { return sample_gig(g, rng); });
  EXPECT_NEAR(mean(x), 1.0, 0.01);
}

TEST(Gig, InvalidParameters) {
  Rng rng(1);
  EXPECT_THROW(sample_gig(GigParams{-1.0, 2.0, 0.0}, rng), InvalidParameters);
  EXPECT_THROW(sample_gig(GigParams{1.0, 0.0, 2.0}, rng), InvalidParameters);
  EXPECT_THROW(sample_gig(GigParams{1.0, -1.0, 2.0}, rng), InvalidParameters);
  EXPECT_THROW(sample_gig(GigParams{1.0, 0.0, 0.0}, rng), InvalidParameters);
}

TEST(Gig, ExtremeOmegaStaysFinite) {
  Rng rng(16);
  for (const auto& g : {GigParams{0.5, 1e-14, 1e-14}, GigParams{0.5, 1e6, 1e6}, GigParams{40.0, 1e-3, 1e-3}}) {
    for (int i = 0; i < 1000; ++i) {
      const double x = sample_gig(g, rng);
      ASSERT_TRUE(std::isfinite(x) && x > 0.0);
    }
  }
}

TEST(InverseWishart, OneDimensionalReduction) {
  Rng rng(21);
  const InverseWishartParams iw{4.0, Matrix::Constant(1, 1, 2.0)};
  const auto x = draws(200000, [&] { return sample_inverse_wishart(iw, rng)(0, 0); });
  EXPECT_NEAR(mean(x), 1.0, 0.01);
}

TEST(InverseWishart, TwoDimensionalMean) {
  Rng rng(22);
  const InverseWishartParams iw{6.0, Matrix::Identity(2, 2)};
  Matrix acc = Matrix::Zero(2, 2);
  const int N = 200000;
  for (int i = 0; i < N; ++i) {
    const Matrix s = sample_inverse_wishart(iw, rng);
    ASSERT_TRUE(s.isApprox(s.transpose()));
    ASSERT_GT(s.llt().matrixL().toDenseMatrix().diagonal().minCoeff(), 0.0);
    acc += s;
  }
  acc /= N;
  EXPECT_NEAR(acc(0, 0), 1.0 / 3.0, 0.01);
  EXPECT_NEAR(acc(1, 1), 1.0 / 3.0, 0.01);
  EXPECT_NEAR(acc(0, 1), 0.0, 0.01);
}

TEST(InverseWishart, RejectsLowDegrees) {
  Rng rng(1);
  EXPECT_THROW(sample_inverse_wishart(InverseWishartParams{1.0, Matrix::Identity(2, 2)}, rng), InvalidParameters);
  Matrix bad(2, 2);
  bad << 1.0, 2.0, 2.0, 1.0;
  EXPECT_THROW(sample_inverse_wishart(InverseWishartParams{5.0, bad}, rng), InvalidParameters);
}

TEST(Mvn, IdentityPrecision) {
  Rng rng(31);
  const int N = 200000;
  Matrix acc = Matrix::Zero(4, 4);
  for (int i = 0; i < N; ++i) {
    const Vector x = sample_mvn_from_precision(Vector::Zero(4), Matrix::Identity(4, 4), rng);
    acc += x * x.transpose();
  }
  acc /= N;
  EXPECT_LT((acc - Matrix::Identity(4, 4)).cwiseAbs().maxCoeff(), 0.01);
}

TEST(Mvn, ClosedFormMean) {
  Rng rng(32);
  Vector m(2);
  m << 2.0, 0.0;
  Matrix q = Matrix::Zero(2, 2);
  q.diagonal() << 2.0, 4.0;
  const int N = 200000;
  Vector acc = Vector::Zero(2);
  for (int i = 0; i < N; ++i) acc += sample_mvn_from_precision(m, q, rng);
  acc /= N;
  EXPECT_NEAR(acc[0], 1.0, 0.005);
  EXPECT_NEAR(acc[1], 0.0, 0.005);
}

TEST(Mvn, CovarianceMatchesInverse) {
  Rng rng(33);
  Matrix q(3, 3);
  q << 4.0, 1.0, 0.5, 1.0, 3.0, -0.7, 0.5, -0.7, 2.0;
  const Matrix cov = q.inverse();
  const int N = 200000;
  Matrix acc = Matrix::Zero(3, 3);
  for (int i = 0; i < N; ++i) {
    const Vector x = sample_mvn_from_precision(Vector::Zero(3), q, rng);
    acc += x * x.transpose();
  }
  acc /= N;
  EXPECT_LT((acc - cov).cwiseAbs().maxCoeff(), 0.01);
}

TEST(Mvn, SingularPrecision) {
  Rng rng(1);
  Matrix q(2, 2);
  q << 1.0, 1.0, 1.0, 1.0;
  EXPECT_THROW(sample_mvn_from_precision(Vector::Zero(2), q, rng), SingularPrecision);
  EXPECT_THROW(sample_mvn_from_precision(Vector::Zero(3), Matrix::Identity(2, 2), rng), InvalidParameters);
}

TEST(Standard, GammaShapeScale) {
  Rng rng(41);
  const std::array<double, 2> p{20.0, 0.1};
  const auto x = draws(200000, [&] { return sample_standard(Family::gamma, p, rng); });
  EXPECT_NEAR(mean(x), 2.0, 0.01);
  expect_mean_within(x, 2.0, std::sqrt(20.0) * 0.1);
  EXPECT_NEAR(var(x), 0.2, 0.2 * 0.03);
}

TEST(Standard, BetaUniform) {
  Rng rng(42);
  const std::array<double, 2> p{1.0, 1.0};
  const auto x = draws(200000, [&] { return sample_standard(Family::beta, p, rng); });
  EXPECT_NEAR(mean(x), 0.5, 0.005);
  EXPECT_NEAR(var(x), 1.0 / 12.0, 0.002);
}

TEST(Standard, CategoricalFrequencies) {
  Rng rng(43);
  const std::array<double, 3> w{2.0, 1.0, 1.0};
  std::array<int, 3> counts{};
  const int N = 200000;
  for (int i = 0; i < N; ++i) ++counts[static_cast<std::size_t>(sample_standard(Family::categorical, w, rng))];
  EXPECT_NEAR(counts[0] / double(N), 0.5, 0.01);
  EXPECT_NEAR(counts[1] / double(N), 0.25, 0.01);
  EXPECT_NEAR(counts[2] / double(N), 0.25, 0.01);
}

TEST(Standard, MomentsWithinFourStandardErrors) {
  Rng rng(44);
  const int N = 100000;
  struct Case {
    Family f;
    std::vector<double> p;
    double mean, var;
  };
  const std::vector<Case> cases = {
      {Family::beta, {2.0, 5.0}, 2.0 / 7.0, 10.0 / (49.0 * 8.0)},
      {Family::gamma, {3.0, 2.0}, 6.0, 12.0},
      {Family::inverse_gamma, {5.0, 4.0}, 1.0, 16.0 / (16.0 * 3.0)},
      {Family::exponential, {0.5}, 0.5, 0.25},
      {Family::binomial, {7.0, 0.3}, 2.1, 1.47},
      {Family::bernoulli, {0.2}, 0.2, 0.16},
  };
  for (const auto& c : cases) {
    const auto x = draws(N, [&] { return sample_standard(c.f, c.p, rng); });
    EXPECT_NEAR(mean(x), c.mean, 4.0 * std::sqrt(c.var / N)) << static_cast<int>(c.f);
    // variance of the sample variance is bounded via the fourth moment; 5% is well beyond 4 se here
    EXPECT_NEAR(var(x) / c.var, 1.0, 0.05) << static_cast<int>(c.f);
  }
}

TEST(Standard, InvalidParameters) {
  Rng rng(1);
  const std::array<double, 2> bad_beta{0.0, 1.0};
  EXPECT_THROW(sample_standard(Family::beta, bad_beta, rng), InvalidParameters);
  const std::array<double, 2> bad_gamma{1.0, -1.0};
  EXPECT_THROW(sample_standard(Family::gamma, bad_gamma, rng), InvalidParameters);
  const std::array<double, 2> bad_binom{2.5, 0.5};
  EXPECT_THROW(sample_standard(Family::binomial, bad_binom, rng), InvalidParameters);
  const std::array<double, 1> bad_bern{1.5};
  EXPECT_THROW(sample_standard(Family::bernoulli, bad_bern, rng), InvalidParameters);
  const std::array<double, 2> zero_w{0.0, 0.0};
  EXPECT_THROW(sample_standard(Family::categorical, zero_w, rng), InvalidParameters);
  const std::array<double, 1> one{1.0};
  EXPECT_THROW(sample_standard(Family::gamma, one, rng), InvalidParameters);
}

TEST(Standard, CategoricalLogAllNegativeInfinity) {
  Rng rng(1);
  const double ninf = -std::numeric_limits<double>::infinity();
  const std::array<double, 2> lw{ninf, ninf};
  EXPECT_THROW(sample_categorical_log(lw, rng), NumericalError);
}

TEST(Determinism, SameSeedSameSequence) {
  Rng a(99), b(99);
  for (int i = 0; i < 1000; ++i) {
    ASSERT_EQ(sample_gig(GigParams{0.3, 1.2, 0.7}, a), sample_gig(GigParams{0.3, 1.2, 0.7}, b));
    ASSERT_EQ(sample_beta(2.0, 3.0, a), sample_beta(2.0, 3.0, b));
    ASSERT_EQ(sample_inverse_wishart(InverseWishartParams{5.0, Matrix::Identity(2, 2)}, a),
              sample_inverse_wishart(InverseWishartParams{5.0, Matrix::Identity(2, 2)}, b));
  }
}

TEST(LogDensities, NormalizeNumerically) {
  const QuadratureCdf g([](double x) { return log_gamma_pdf(x, 3.0, 0.5); }, 0.0, 60.0);
  EXPECT_NEAR(g.mean(), 1.5, 1e-6);
  const QuadratureCdf ig([](double x) { return log_inverse_gamma_pdf(x, 4.0, 3.0); }, 0.0, 400.0);
  EXPECT_NEAR(ig.mean(), 1.0, 1e-3);
  const QuadratureCdf b([](double x) { return log_beta_pdf(x, 2.0, 3.0); }, 0.0, 1.0);
  EXPECT_NEAR(b.mean(), 0.4, 1e-6);
}
