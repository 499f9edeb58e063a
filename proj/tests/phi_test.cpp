#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "ysm/phi_limit.hpp"

using namespace ysm;

TEST(Regime, WorkedExamples) {
  const auto simon = derive_regime(0.5, 0.0);
  EXPECT_DOUBLE_EQ(simon.b, 0.0);
  EXPECT_EQ(simon.regime, TailRegime::power);
  EXPECT_DOUBLE_EQ(simon.tail_exponent, 2.0);
  EXPECT_DOUBLE_EQ(simon.rho, 2.0);

  const auto mid = derive_regime(0.25, 1.0);
  EXPECT_NEAR(mid.b, 2.0 / 3.0, 1e-15);
  EXPECT_EQ(mid.regime, TailRegime::power);
  EXPECT_NEAR(mid.tail_exponent, 2.0, 1e-12);

  const auto sub = derive_regime(0.75, 1.0);
  EXPECT_DOUBLE_EQ(sub.b, 2.0);
  EXPECT_EQ(sub.regime, TailRegime::exponential);
  EXPECT_NEAR(sub.rate, std::log(2.0) - 0.5, 1e-15);
  EXPECT_NEAR(sub.rate, 0.193147, 1e-6);
}

TEST(Regime, FlipsAtThreshold) {
  for (double alpha : {0.25, 0.5, 1.0, 2.0, 4.0}) {
    const double pbar_star = alpha / (1.0 + alpha);
    for (double d : {-0.2, -0.05, -1e-6, 1e-6, 0.05, 0.2}) {
      const double pbar = pbar_star + d;
      if (!(pbar > 0.0 && pbar < 1.0)) continue;
      const auto r = derive_regime(1.0 - pbar, alpha);
      EXPECT_EQ(r.regime, d > 0 ? TailRegime::power : TailRegime::exponential)
          << "alpha=" << alpha << " pbar=" << pbar;
      EXPECT_EQ(r.b < 1.0, d > 0);
    }
  }
  EXPECT_EQ(derive_regime(0.5, 1.0).regime, TailRegime::critical);
  EXPECT_THROW(derive_regime(0.0, 1.0), std::invalid_argument);
  EXPECT_THROW(derive_regime(0.5, -1.0), std::invalid_argument);
}

TEST(YuleSimon, Values) {
  EXPECT_NEAR(yule_simon_pmf(2.0, 1), 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(yule_simon_pmf(2.0, 2), 1.0 / 6.0, 1e-15);
  EXPECT_NEAR(yule_simon_pmf(2.0, 3), 1.0 / 15.0, 1e-15);
  for (std::uint64_t ell : {10u, 1000u, 100000u}) {
    const double l = static_cast<double>(ell);
    EXPECT_NEAR(yule_simon_pmf(2.0, ell) / (4.0 / (l * (l + 1) * (l + 2))), 1.0, 1e-12) << ell;
  }
}

TEST(YuleSimon, SumsToOne) {
  double s = 0.0;
  for (std::uint64_t ell = 1000000; ell >= 1; --ell) s += yule_simon_pmf(2.0, ell);
  EXPECT_NEAR(s, 1.0, 1e-6);
}

TEST(PhiCsbp, SimonCaseMatchesYuleSimon) {
  const auto regime = derive_regime(0.5, 0.0);
  const auto phi = estimate_phi_csbp(regime, 200000, {.seed = 3});
  EXPECT_EQ(phi.method, "csbp");
  EXPECT_EQ(phi.truncated, 0u);
  for (std::uint64_t ell = 1; ell <= 5; ++ell)
    EXPECT_NEAR(phi.at(ell).estimate, yule_simon_pmf(2.0, ell), 4.0 * phi.at(ell).stderr + 1e-4) << ell;
  EXPECT_LE(phi.total(), 1.0 + 1e-12);
}

TEST(PhiCsbp, UnseenValuesReadAsZero) {
  const std::vector<std::uint64_t> values{1, 1, 2};
  const auto phi = phi_from_samples(values);
  const auto far = phi.at(50);
  EXPECT_EQ(far.estimate, 0.0);
  EXPECT_EQ(far.ci.lo, 0.0);
  EXPECT_GT(far.ci.hi, 0.0);
  EXPECT_NEAR(phi.at(1).estimate, 2.0 / 3.0, 1e-15);
}

TEST(PhiCsbp, ThreadCountDoesNotChangeSamples) {
  const auto regime = derive_regime(0.25, 1.0);
  const auto a = sample_births_at_exponential_time(regime, 20000, {.seed = 4, .threads = 1});
  const auto b = sample_births_at_exponential_time(regime, 20000, {.seed = 4, .threads = 3});
  EXPECT_EQ(a.values, b.values);
}

TEST(PhiModel, SimonCaseFirstBin) {
  ModelParams mp;
  mp.p = 0.5;
  mp.alpha = 0.0;
  mp.n = 200000;
  mp.seed = 12;
  const auto est = estimate_phi_model(mp, 10, 1);
  EXPECT_EQ(est.phi.method, "model");
  EXPECT_NEAR(est.phi.at(1).estimate, 2.0 / 3.0, 0.01);
  EXPECT_GT(est.phi.at(1).stderr, 0.0);
  EXPECT_EQ(est.merged.n, 2000000u);
}

TEST(TailFit, YuleSimonSamplesGiveExponentTwo) {
  // Inverse-CDF draws from the rho = 2 law: P(X >= k) = 2 / (k (k + 1)).
  Rng rng(41);
  std::vector<std::uint64_t> xs(1000000);
  for (auto& x : xs) {
    const double u = rng.uniform();
    const double k = std::floor((-1.0 + std::sqrt(1.0 + 8.0 / u)) / 2.0);
    x = static_cast<std::uint64_t>(std::max(1.0, k));
  }
  const auto fit = fit_power_tail(xs);
  EXPECT_NEAR(fit.exponent, 2.0, 0.2);
  EXPECT_NEAR(fit.hill_exponent, 2.0, 0.3);
  EXPECT_GT(fit.tail_count, 100u);
}

TEST(TailFit, DegenerateSamplesLackTailMass) {
  const std::vector<std::uint64_t> same(10000, 3);
  EXPECT_THROW(fit_power_tail(same), InsufficientTailMass);
  const std::vector<std::uint64_t> few{1, 2, 3, 4, 5};
  EXPECT_THROW(fit_power_tail(few), InsufficientTailMass);
}

TEST(TailFit, CcdfConvention) {
  const std::vector<std::uint64_t> xs{1, 1, 2, 4};
  const auto ccdf = empirical_ccdf(xs);
  ASSERT_FALSE(ccdf.empty());
  EXPECT_EQ(ccdf.front().k, 1u);
  EXPECT_DOUBLE_EQ(ccdf.front().ccdf, 1.0);
  for (const auto& pt : ccdf) {
    if (pt.k == 2) {
      EXPECT_DOUBLE_EQ(pt.ccdf, 0.5);
    }
  }
}

TEST(ExponentialTail, Checks) {
  const auto sub = derive_regime(0.75, 1.0);
  const std::vector<std::uint64_t> ones(100, 1);
  const auto point = check_exponential_tail(phi_from_samples(ones), sub);
  EXPECT_NEAR(point.statistic, std::exp(sub.rate), 1e-12);
  EXPECT_NEAR(point.statistic, 1.213, 1e-3);
  EXPECT_TRUE(point.pass);
  EXPECT_THROW(check_exponential_tail(phi_from_samples(ones), derive_regime(0.25, 1.0)), std::invalid_argument);
}

TEST(ConstantC, SimonCase) {
  const auto est = constant_C(derive_regime(0.5, 0.0), 20000, {.horizon = 40.0}, {.seed = 2});
  EXPECT_NEAR(est.estimate, 2.0, 4.0 * est.stderr + 0.05);
  EXPECT_DOUBLE_EQ(est.horizon, 40.0);
}

TEST(ConstantC, SupercriticalDriftIsFinite) {
  const auto est = constant_C(derive_regime(0.25, 1.0), 20000, {}, {.seed = 2});
  EXPECT_TRUE(std::isfinite(est.estimate));
  EXPECT_GT(est.estimate, 0.0);
  EXPECT_GT(est.stderr, 0.0);
  EXPECT_THROW(constant_C(derive_regime(0.75, 1.0), 10), std::invalid_argument);
}
