#include <gtest/gtest.h>

#include "bfi/models.hpp"
#include "support.hpp"

using namespace bfi;

namespace {

const RelativeRiskModel kRr{6, 20, 18, 30, 0.08};

}  // namespace

TEST(Odds, RoundTripAndDomain) {
  for (double p : {0.0, 0.1, 0.5, 0.93}) EXPECT_NEAR(odds_inverse(odds(p)), p, 1e-15);
  EXPECT_THROW(odds(1.0), DomainError);
  EXPECT_THROW(odds_inverse(-1.0), DomainError);
  EXPECT_EQ(odds_inverse(numeric::kInf), 1.0);
}

TEST(RrInterval, OddsBandAroundOtherArm) {
  const auto iv = special_interval_rr(0.6, 0.08);
  EXPECT_NEAR(iv.lo(), 0.5813953488372093, 1e-15);
  EXPECT_NEAR(iv.hi(), 0.6183206106870228, 1e-15);
  EXPECT_TRUE(special_interval_rr(0.6, 0.0).sharp());
  EXPECT_THROW(special_interval_rr(1.0, 0.08), DomainError);
}

TEST(RrOneSided, FrozenAtControlProportion) {
  const auto r = rr_one_sided_p(kRr, 0.6);
  EXPECT_EQ(r.direction, Direction::lower);
  EXPECT_NEAR(r.beta0, 0.010367299253722359, 1e-14);
  EXPECT_NEAR(r.beta1, 0.9990884669224345, 1e-14);
  EXPECT_DOUBLE_EQ(r.beta, r.beta0);
}

TEST(RrOneSided, MonotoneInOtherArm) {
  // P(E <= 6 | p) falls as the interval moves right with pi_c.
  double prev0 = 2.0, prev1 = -1.0;
  for (double pc : numeric::linspace(0.05, 0.95, 46)) {
    const auto r = rr_one_sided_p(kRr, pc);
    EXPECT_LT(r.beta0, prev0);
    EXPECT_GT(r.beta1, prev1);
    prev0 = r.beta0;
    prev1 = r.beta1;
  }
}

TEST(RrConditional, IntegratesToOneWithClosedFormIntervalMass) {
  const auto p = rr_conditional(kRr, Arm::treatment, 0.6, default_rr_pdo());
  EXPECT_NEAR(p.alpha(), 0.06132987467474964, 1e-13);
  EXPECT_NEAR(p.lambda(), 0.0019563390673548345, 1e-14);
  EXPECT_NEAR(p.mass_inside(), 0.05949351763721699, 1e-13);
  const auto& iv = p.interval();
  auto f = [&](double x) { return p.pdf(x); };
  const double below = numeric::integrate(f, 0.0, iv.lo(), 1e-11);
  const double inside = numeric::integrate(f, iv.lo(), iv.hi(), 1e-11);
  const double above = numeric::integrate(f, iv.hi(), 1.0, 1e-11);
  EXPECT_NEAR(below + inside + above, 1.0, 1e-6);
  EXPECT_NEAR(inside, p.alpha() - p.lambda() * (1.0 - p.alpha()), 1e-6);
  EXPECT_NEAR(p.left_limit(iv.lo()), p.right_limit(iv.lo()), 1e-6 * p.left_limit(iv.lo()));
  EXPECT_NEAR(p.left_limit(iv.hi()), p.right_limit(iv.hi()), 1e-6 * p.right_limit(iv.hi()));
}

TEST(RrConditional, FloorAtOtherArm) {
  const auto prob = kRr.problem(Arm::treatment, 0.6);
  EXPECT_NEAR(p_f_hs(prob.f_s, prob.oriented()), 0.005511769758614595, 1e-14);
}

TEST(RrConditional, DefinedAcrossOtherArmProperty) {
  prop::Gen g(3);
  const auto pdo = default_rr_pdo();
  for (int i = 0; i < 40; ++i) {
    const double other = g.uniform(0.02, 0.98);
    const Arm arm = g.coin() ? Arm::treatment : Arm::control;
    const auto p = rr_conditional(kRr, arm, other, pdo);
    EXPECT_NEAR(p.mass_below() + p.mass_inside() + p.mass_above(), 1.0, 1e-12) << other;
    EXPECT_GE(p.tau()->tau, 0.0);
  }
}

TEST(ConfidenceDensity, LogRelativeRisk) {
  const auto c = confidence_density_log_rr(kRr);
  EXPECT_NEAR(c.center, std::log(0.5), 1e-15);
  EXPECT_NEAR(c.sd, 0.37267799624996495, 1e-15);
  EXPECT_NEAR(c.density.cdf(0.5), 0.5, 1e-15);
  EXPECT_THROW(confidence_density_log_rr({0, 20, 18, 30, 0.08}), DomainError);
}

TEST(SpikeSlab, FrozenPosteriorProbabilities) {
  EXPECT_NEAR(bayes_spike_slab(2.7, 1.0, 1.0, 0.5), 0.18604349965378622, 1e-14);
  EXPECT_NEAR(bayes_spike_slab(0.5, 1.0, 3.0, 0.2), 0.41398835532992906, 1e-14);
  EXPECT_LT(bayes_spike_slab(40.0, 1.0, 1.0, 0.5), 1e-150);
  EXPECT_THROW(bayes_spike_slab(1.0, 1.0, 1.0, 1.0), DomainError);
}

TEST(NormalUnknownVar, SummariesAndSigmaConditional) {
  const auto m = NormalUnknownVarModel::from_samples({1.0, 2.0, 3.0, 4.0}, 0.1);
  EXPECT_EQ(m.n, 4u);
  EXPECT_DOUBLE_EQ(m.xbar, 2.5);
  EXPECT_NEAR(m.s2, 5.0 / 3.0, 1e-15);
  EXPECT_NEAR(m.sum_sq(0.0), 1 + 4 + 9 + 16, 1e-12);

  const NormalUnknownVarModel d{9, 2.7, 9.0, 0.2};
  // sigma^2 | mu = 0 ~ Scale-inv-chi2(9, 137.61 / 9); its median sigma.
  EXPECT_NEAR(d.sigma_conditional(0.0).quantile(0.5), 4.061329542844412, 1e-10);
  EXPECT_THROW(d.mu_problem(0.0), DomainError);
  EXPECT_THROW((NormalUnknownVarModel{1, 0.0, 1.0, 0.1}.validate()), DomainError);
}

TEST(NormalUnknownVar, MuConditionalAtLargeSigmaApproachesHalf) {
  const NormalUnknownVarModel d{9, 2.7, 9.0, 0.2};
  EXPECT_NEAR(d.mu_problem(1e9).oriented().p_value, 0.5, 1e-7);
  EXPECT_EQ(d.mu_problem(3.0).oriented().direction, Direction::upper);
}

TEST(Alpha, ResolutionForms) {
  const auto curve = PdoCurve::power(1.0, 0.6);
  EXPECT_EQ(resolve_alpha(0.05, 0.2, 0.01), 0.05);
  EXPECT_NEAR(resolve_alpha(curve, 0.2, 0.01), std::pow(0.2, 0.6), 1e-15);
  EXPECT_EQ(resolve_alpha(AlphaAtFloor{}, 0.2, 0.01), 0.01);
}

TEST(Models, ValidationErrors) {
  EXPECT_THROW((NormalKnownVarModel{0.0, -1.0, 1, 0.1}.problem()), DomainError);
  EXPECT_THROW((BinomialModel{11, 10, 0.03}.problem()), DomainError);
  EXPECT_THROW((BinomialModel{1, 10, 0.6}.problem()), DomainError);
  EXPECT_THROW((RelativeRiskModel{6, 20, 18, 30, 0.0}.validate()), DomainError);
}
