// Apache License, Version 2.0, refer to LICENSE.txt

#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <sstream>

#include "bnptvp/bnptvp.hpp"

using namespace bnptvp;

namespace {

std::vector<double> ar1(double phi, std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> z;
  std::vector<double> x(n);
  double prev = z(rng) / std::sqrt(1.0 - phi * phi);
  for (auto& v : x) {
    prev = phi * prev + z(rng);
    v = prev;
  }
  return x;
}

PosteriorDraws chain_of(std::uint64_t seed) {
  SyntheticOptions so;
  so.n = 2;
  so.T = 10;
  so.seed = 4;
  const auto sys = simulate_synthetic(so);
  RunOptions ro;
  ro.iters = 200;
  ro.burn_in = 50;
  ro.seed = seed;
  return run_chain(default_spec(2, 10, SpikeVariant::normal_diffuse), sys.panel, ro);
}

}  // namespace

TEST(Ess, ConstantTrace) {
  const std::vector<double> x(500, 1.25);
  EXPECT_EQ(variance_of(x), 0.0);
  EXPECT_TRUE(std::isnan(effective_sample_size(x)));
}

TEST(Ess, IndependentDraws) {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto x = ar1(0.0, 10000, seed);
    EXPECT_NEAR(effective_sample_size(x) / 10000.0, 1.0, 0.1) << seed;
  }
}

TEST(Ess, Ar1MatchesTheory) {
  const double phi = 0.9;
  const std::size_t n = 100000;
  const auto x = ar1(phi, n, 17);
  const double expected = static_cast<double>(n) * (1.0 - phi) / (1.0 + phi);
  EXPECT_NEAR(effective_sample_size(x) / expected, 1.0, 0.2);
}

TEST(Rhat, AgreeingAndDisagreeingChains) {
  const std::vector<std::vector<double>> same = {ar1(0.5, 4000, 1), ar1(0.5, 4000, 2)};
  EXPECT_NEAR(split_rhat(same), 1.0, 0.02);
  auto shifted = same;
  for (auto& v : shifted[1]) v += 3.0;
  EXPECT_GT(split_rhat(shifted), 1.5);
}

TEST(Quantiles, Interpolate) {
  EXPECT_EQ(quantile_of({3.0, 1.0, 2.0, 4.0, 5.0}, 0.5), 3.0);
  EXPECT_EQ(quantile_of({0.0, 10.0}, 0.05), 0.5);
}

TEST(Summary, SingleChainHasNoRhatColumn) {
  const auto s = summarize({chain_of(1)});
  EXPECT_FALSE(s.has_rhat);
  std::ostringstream os;
  write_summary_csv(s, os);
  EXPECT_EQ(os.str().substr(0, os.str().find('\n')), "parameter,mean,sd,q05,q50,q95,ess");
  // 4 * 9 betas, 3 sigma entries, 9 pi, k_star, tau0
  EXPECT_EQ(s.rows.size(), 36u + 3u + 9u + 1u + 1u);
}

TEST(Summary, RhatAndPermutationInvariance) {
  const auto a = chain_of(1);
  const auto b = chain_of(2);
  const auto c = chain_of(3);
  const auto s1 = summarize({a, b, c});
  const auto s2 = summarize({c, a, b});
  ASSERT_TRUE(s1.has_rhat);
  ASSERT_EQ(s1.rows.size(), s2.rows.size());
  for (std::size_t i = 0; i < s1.rows.size(); ++i) {
    const auto& x = s1.rows[i];
    const auto& y = s2.rows[i];
    EXPECT_EQ(x.name, y.name);
    EXPECT_NEAR(x.mean, y.mean, 1e-12);
    EXPECT_NEAR(x.sd, y.sd, 1e-12);
    EXPECT_EQ(x.q50, y.q50);
    if (std::isnan(x.ess)) {
      EXPECT_TRUE(std::isnan(y.ess));
    } else {
      EXPECT_NEAR(x.ess, y.ess, 1e-9);
    }
    if (!std::isnan(x.rhat)) EXPECT_NEAR(x.rhat, y.rhat, 1e-12);
  }
  std::ostringstream os;
  write_summary_csv(s1, os);
  EXPECT_NE(os.str().find(",rhat\n"), std::string::npos);
}

TEST(Summary, RejectsEmptyInput) {
  EXPECT_THROW(summarize({}), InvalidParameters);
  PosteriorDraws empty;
  empty.spec = default_spec(2, 4, SpikeVariant::dirac);
  EXPECT_THROW(summarize({empty}), InvalidParameters);
}

TEST(Geweke, RejectsZeroSweeps) {
  GewekeOptions o;
  o.sweeps = 0;
  EXPECT_THROW(geweke_joint_test(geweke_spec(SpikeVariant::dirac), o), InvalidParameters);
}

TEST(Geweke, Reproducible) {
  GewekeOptions o;
  o.sweeps = 2000;
  o.seed = 9;
  const auto spec = geweke_spec(SpikeVariant::de_diffuse);
  const auto a = geweke_joint_test(spec, o);
  const auto b = geweke_joint_test(spec, o);
  ASSERT_EQ(a.stats.size(), b.stats.size());
  for (std::size_t i = 0; i < a.stats.size(); ++i) EXPECT_EQ(a.stats[i].z, b.stats[i].z);
}

TEST(Geweke, ShortRunPassesAndFaultIsCaught) {
  GewekeOptions o;
  o.sweeps = 20000;
  o.seed = 3;
  const auto spec = geweke_spec(SpikeVariant::normal_diffuse);
  EXPECT_LT(geweke_joint_test(spec, o).max_abs_z(), 4.0);
  o.hooks.swap_pi_parameters = true;
  EXPECT_GT(geweke_joint_test(spec, o).max_abs_z(), 6.0);
}
