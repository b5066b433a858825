#include <gtest/gtest.h>

#include "bfi/models.hpp"
#include "support.hpp"

using namespace bfi;

TEST(JeffreysBinomial, IsBetaWithHalfShapes) {
  const auto f = jeffreys_binomial_density(1, 10);
  for (double x : {0.05, 0.2, 0.47, 0.8}) {
    EXPECT_NEAR(f.pdf(x), numeric::beta_pdf(x, 1.5, 9.5), 1e-12 * numeric::beta_pdf(x, 1.5, 9.5));
    EXPECT_NEAR(f.cdf(x), numeric::beta_cdf(x, 1.5, 9.5), 1e-15);
  }
  EXPECT_NEAR(numeric::integrate([&](double x) { return f.pdf(x); }, 0.0, 1.0, 1e-10), 1.0, 1e-8);
  EXPECT_THROW(jeffreys_binomial_density(11, 10), DomainError);
}

TEST(JeffreysBinomial, FloorForTheBinomialExample) {
  // P_f(H_S) = P(pi >= 0.47) under Beta(1.5, 9.5).
  const BinomialModel m{1, 10, 0.03};
  EXPECT_NEAR(p_f_hs(m.fiducial(), m.oriented()), 0.006256100155887442, 1e-14);
}

TEST(LevelInvariance, LpdConstantLeavesDensityUnchanged) {
  const auto ref = jeffreys_binomial_density(6, 20);
  for (double c : {0.1, 1.0, 10.0}) {
    const auto f = jeffreys_binomial_density(6, 20, LpdUniform{c});
    for (double x : numeric::linspace(0.01, 0.99, 99)) EXPECT_NEAR(f.pdf(x), ref.pdf(x), 1e-12 * ref.pdf(x)) << c;
  }
}

TEST(LevelInvariance, NeutralGpdLevelLeavesDensityUnchanged) {
  const auto f_s = normal_density(2.7, 1.0);
  const SpecialInterval iv(-0.2, 0.2);
  const auto ref = condition_outside(f_s, GpdNeutral{iv, 1.0});
  for (double d : {0.1, 1.0, 10.0}) {
    const auto f = condition_outside(f_s, GpdNeutral{iv, d});
    for (double x : numeric::linspace(-3.0, 7.0, 101)) {
      EXPECT_NEAR(f.pdf(x), ref.pdf(x), 1e-12 * std::max(ref.pdf(x), 1e-300)) << d;
      EXPECT_NEAR(f.cdf(x), ref.cdf(x), 1e-12) << d;
    }
  }
  EXPECT_THROW(condition_outside(f_s, GpdNeutral{iv, 0.0}), DomainError);
}

TEST(ConditionOutside, ZeroOnIntervalAndNormalized) {
  const auto f_s = jeffreys_binomial_density(1, 10);
  const SpecialInterval iv(0.47, 0.53);
  const auto f = condition_outside(f_s, iv);
  EXPECT_EQ(f.pdf(0.5), 0.0);
  const double total = numeric::integrate([&](double x) { return f.pdf(x); }, 0.0, 0.47, 1e-11) +
                       numeric::integrate([&](double x) { return f.pdf(x); }, 0.53, 1.0, 1e-11);
  EXPECT_NEAR(total, 1.0, 1e-9);
  EXPECT_NEAR(f.cdf(0.5), f.cdf(0.47), 1e-15);
  RngStream rng(1);
  for (int i = 0; i < 2000; ++i) EXPECT_FALSE(iv.contains(f.sample(rng)) && !iv.sharp());
}

TEST(ConditionOutside, DegenerateWhenAllMassInside) {
  const auto f_s = normal_density(0.0, 1e-6);
  EXPECT_THROW(condition_outside(f_s, SpecialInterval(-1.0, 1.0)), DegenerateConditioning);
}

TEST(ConditionInside, NormalizedAndShapedByTau) {
  const auto f_s = normal_density(2.7, 1.0);
  const SpecialInterval iv(-0.2, 0.2);
  const auto h = IntervalShape::beta(iv, 4.0, 4.0);
  for (double tau : {0.0, 1.0, 50.0}) {
    const auto f = condition_inside(f_s, GpdInterval{h, tau});
    EXPECT_NEAR(numeric::integrate([&](double x) { return f.pdf(x); }, -0.2, 0.2, 1e-12), 1.0, 1e-10) << tau;
    EXPECT_NEAR(f.cdf(0.2), 1.0, 1e-15);
    if (tau == 0.0) {
      const auto t = truncate(f_s, -0.2, 0.2);
      EXPECT_NEAR(f.pdf(0.1), t.pdf(0.1), 1e-10 * t.pdf(0.1));
    }
  }
  EXPECT_THROW(condition_inside(f_s, GpdInterval{h, -1.0}), DomainError);
}

TEST(ConditionInside, SamplerMatchesCdf) {
  const auto f_s = jeffreys_binomial_density(1, 10);
  const SpecialInterval iv(0.47, 0.53);
  const auto f = condition_inside(f_s, GpdInterval{IntervalShape::beta(iv, 4.0, 4.0), 3.0});
  RngStream rng(9);
  const int n = 20000;
  int below = 0;
  const double mid = 0.49;
  for (int i = 0; i < n; ++i) {
    const double x = f.sample(rng);
    ASSERT_TRUE(iv.contains(x));
    below += x < mid;
  }
  const double p = f.cdf(mid);
  EXPECT_NEAR(static_cast<double>(below) / n, p, 4.0 * std::sqrt(p * (1 - p) / n));
}

TEST(LambdaRatio, ReciprocalAcrossDirectionsProperty) {
  prop::Gen g(31);
  for (int i = 0; i < 200; ++i) {
    const auto c = prop::assembly_case(g);
    const double lo = lambda_ratio(c.prob.f_s, c.prob.interval, Direction::lower);
    const double hi = lambda_ratio(c.prob.f_s, c.prob.interval, Direction::upper);
    EXPECT_NEAR(lo * hi, 1.0, 1e-12) << c.label;
  }
}

TEST(LambdaRatio, NormalExample) {
  const NormalKnownVarModel m{2.7, 1.0, 1, 0.2};
  EXPECT_NEAR(lambda_ratio(m.fiducial(), m.interval(), Direction::upper), 0.0018774717717451633, 1e-15);
}

TEST(FiducialEvent, HalfForRandomObservations) {
  prop::Gen g(8);
  for (int i = 0; i < 20; ++i) {
    const double x = g.uniform(-5.0, 5.0);
    const double sigma = g.log_uniform(0.2, 5.0);
    EXPECT_NEAR(p_f_event_normal(x, sigma), 0.5, 1e-6) << "x=" << x << " sigma=" << sigma;
  }
  EXPECT_THROW(p_f_event_normal(0.0, -1.0), DomainError);
}

TEST(Truncate, RenormalizesAndMapsQuantiles) {
  const auto f = normal_density(0.0, 1.0);
  const auto t = truncate(f, 1.0, 2.0);
  EXPECT_NEAR(t.cdf(2.0), 1.0, 1e-15);
  EXPECT_NEAR(t.cdf(t.quantile(0.3)), 0.3, 1e-12);
  EXPECT_NEAR(t.pdf(1.5), f.pdf(1.5) / f.mass(1.0, 2.0), 1e-15);
  // Far-tail truncation keeps precision through the survival function.
  const auto far = truncate(f, 8.0, numeric::kInf);
  EXPECT_GT(far.quantile(0.5), 8.0);
  EXPECT_THROW(truncate(f, 40.0, 41.0), DomainError);
}

TEST(IntervalShape, VanishesAtEndpointsAndIntegratesToOne) {
  const SpecialInterval iv(0.58, 0.62);
  for (const auto& h : {IntervalShape::beta(iv, 4, 4), IntervalShape::log_odds_beta(iv, 4, 4)}) {
    EXPECT_EQ(h(0.58), 0.0);
    EXPECT_EQ(h(0.62), 0.0);
    EXPECT_NEAR(numeric::integrate([&](double x) { return h(x); }, 0.58, 0.62, 1e-12), 1.0, 1e-10);
    for (double x : numeric::linspace(0.58, 0.62, 1001)) EXPECT_LE(h(x), h.max_value());
  }
  EXPECT_THROW(IntervalShape::beta(iv, 1.0, 1.0), DomainError);
  EXPECT_THROW(IntervalShape::beta(SpecialInterval(0.5, 0.5), 4, 4), DomainError);
  EXPECT_THROW(IntervalShape::log_odds_beta(SpecialInterval(-0.1, 0.1), 4, 4), DomainError);
}
