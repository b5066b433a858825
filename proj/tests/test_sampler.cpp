#include <gtest/gtest.h>

#include <sstream>

#include "bfi/diagnostics.hpp"
#include "bfi/models.hpp"
#include "support.hpp"

using namespace bfi;

namespace {

const NormalUnknownVarModel kNuv{9, 2.7, 9.0, 0.2};

// Five-state target: density proportional to i + 1 on [i, i + 1).
ConditionalSet staircase() {
  return {{"x", [](const std::vector<double>&) -> BoundConditional {
             return DensityTarget{[](double x) { return x >= 0.0 && x < 5.0 ? std::floor(x) + 1.0 : 0.0; }};
           }}};
}

GibbsConfig config(std::size_t n, std::vector<double> init, std::uint64_t seed = 1, std::uint64_t stream = 0) {
  GibbsConfig c;
  c.n_samples = n;
  c.burn_in = 1000;
  c.seed = seed;
  c.stream = stream;
  c.initial = std::move(init);
  return c;
}

}  // namespace

TEST(Metropolis, EnumerableTargetHitsExactProbabilities) {
  const auto chain = gibbs_run(staircase(), config(100000, {2.5}), ScanOrder::random());
  const auto xs = chain.column(0);
  for (int s = 0; s < 5; ++s) {
    std::vector<double> ind;
    for (double x : xs) ind.push_back(std::floor(x) == s ? 1.0 : 0.0);
    const double p_hat = detail::mean(ind);
    const double p = (s + 1) / 15.0;
    const double sd = std::sqrt(p * (1 - p) / effective_sample_size(ind));
    EXPECT_NEAR(p_hat, p, 3.0 * sd) << "state " << s;
  }
}

TEST(Metropolis, StepConsumesOneUniformAndRejectsUnevaluable) {
  auto throwing = [](double x) -> double {
    if (x > 0.0) throw DomainError("no");
    return 1.0;
  };
  RngStream a(1), b(1);
  int accepted = 0;
  for (int i = 0; i < 200; ++i) {
    const auto r = metropolis_step(throwing, -0.01, 1.0, a);
    accepted += r.accepted;
    if (!r.accepted) {
      EXPECT_EQ(r.value, -0.01);
    }
    b.normal();
    b.uniform();
  }
  EXPECT_GT(accepted, 0);
  EXPECT_EQ(a(), b());
}

TEST(Metropolis, ZeroCurrentDensityAcceptsEvaluableProposal) {
  RngStream rng(2);
  const auto r = metropolis_step([](double) { return 1.0; }, 0.0, 1.0, rng, 0.0);
  EXPECT_TRUE(r.accepted);
}

TEST(Gibbs, CompatibleConditionalsRecoverVarianceMarginal) {
  const auto chain = gibbs_run(compatible_conditionals(kNuv), config(100000, kNuv.default_initial(), 3), ScanOrder::random());
  auto v = chain.column(NormalUnknownVarModel::kSigma);
  for (double& s : v) s *= s;
  const double d = ks_distance(v, [](double x) { return numeric::scaled_inv_chi2_cdf(x, 8.0, 9.0); });
  EXPECT_LT(d, 0.01);
}

TEST(Gibbs, DispersedChainsConverge) {
  std::vector<ChainOutput> chains;
  const std::vector<std::vector<double>> starts = {{-20.0, 0.1}, {30.0, 50.0}, {2.7, 3.0}, {0.0, 10.0}};
  for (std::size_t i = 0; i < starts.size(); ++i)
    chains.push_back(gibbs_run(compatible_conditionals(kNuv), config(20000, starts[i], 4, i), ScanOrder::random()));
  EXPECT_LT(gelman_rubin(chains, 0), 1.05);
  EXPECT_LT(gelman_rubin(chains, 1), 1.05);
}

TEST(Gibbs, DeterministicPerSeedAndStream) {
  const auto cs = full_conditionals(kNuv, PdoCurve::power(1.0, 0.6));
  const auto a = gibbs_run(cs, config(2000, kNuv.default_initial(), 7), ScanOrder::random());
  const auto b = gibbs_run(cs, config(2000, kNuv.default_initial(), 7), ScanOrder::random());
  const auto c = gibbs_run(cs, config(2000, kNuv.default_initial(), 7, 1), ScanOrder::random());
  EXPECT_EQ(a.samples, b.samples);
  EXPECT_NE(a.samples, c.samples);
  std::ostringstream sa, sb;
  write_chain_csv(sa, a);
  write_chain_csv(sb, b);
  EXPECT_EQ(sa.str(), sb.str());
  EXPECT_EQ(sa.str().substr(0, 30), "# seed=7 stream=0 scan=random\n");
}

TEST(Gibbs, ScanBookkeeping) {
  const auto cs = compatible_conditionals(kNuv);
  const auto fixed = gibbs_run(cs, config(1000, kNuv.default_initial()), ScanOrder::fixed({1, 0}));
  EXPECT_EQ(fixed.n_rows(), 1000u);
  EXPECT_EQ(fixed.updates[0], 1000u);
  EXPECT_EQ(fixed.updates[1], 1000u);
  const auto random = gibbs_run(cs, config(10000, kNuv.default_initial()), ScanOrder::random());
  EXPECT_EQ(random.n_rows(), 10000u);
  EXPECT_EQ(random.updates[0] + random.updates[1], 10000u);
  EXPECT_NEAR(static_cast<double>(random.updates[0]), 5000.0, 250.0);
  auto thinned = config(500, kNuv.default_initial());
  thinned.thin = 3;
  EXPECT_EQ(gibbs_run(cs, thinned, ScanOrder::fixed({0, 1})).updates[0], 1500u);
}

TEST(Gibbs, ConfigValidation) {
  const auto cs = compatible_conditionals(kNuv);
  EXPECT_THROW(gibbs_run(cs, config(10, {1.0}), ScanOrder::random()), DomainError);
  EXPECT_THROW(gibbs_run(cs, config(10, {1.0, 1.0}), ScanOrder::fixed({0, 0})), DomainError);
  EXPECT_THROW(gibbs_run(cs, config(0, {1.0, 1.0}), ScanOrder::random()), DomainError);
  EXPECT_THROW(gibbs_run({}, config(10, {}), ScanOrder::random()), DomainError);
  auto bad = config(10, {1.0, 1.0});
  bad.proposal_scales = {1.0, -1.0};
  EXPECT_THROW(gibbs_run(cs, bad, ScanOrder::random()), DomainError);
}

TEST(Gibbs, BindFailureCountsAsRejection) {
  ConditionalSet cs = {{"x", [](const std::vector<double>& s) -> BoundConditional {
                          if (s[1] > 0.5) throw DomainError("cannot bind");
                          return DirectDraw{[](RngStream& r) { return r.uniform(); }};
                        }},
                       {"y", [](const std::vector<double>&) -> BoundConditional {
                          return DirectDraw{[](RngStream& r) { return r.uniform(); }};
                        }}};
  const auto ch = gibbs_run(cs, config(5000, {0.1, 0.1}), ScanOrder::fixed({1, 0}));
  EXPECT_NEAR(static_cast<double>(ch.bind_failures), 2500.0, 200.0);
  EXPECT_NEAR(ch.acceptance_rates[0], 0.5, 0.04);
  EXPECT_EQ(ch.acceptance_rates[1], 1.0);
}

TEST(Gibbs, ZeroAcceptanceWindowWarns) {
  ConditionalSet cs = {{"x", [](const std::vector<double>&) -> BoundConditional {
                          return DensityTarget{[](double x) { return x == 0.0 ? 1.0 : 0.0; }};
                        }}};
  auto c = config(3000, {0.0});
  c.tune = false;
  const auto ch = gibbs_run(cs, c, ScanOrder::random());
  ASSERT_EQ(ch.warnings.size(), 1u);
  EXPECT_NE(ch.warnings[0].find("zero acceptance for x"), std::string::npos);
}

TEST(Importance, WeightsNormalizedAndRenderMatchesTarget) {
  const auto base = normal_density(0.0, 2.0);
  const auto target = normal_density(1.0, 1.0);
  RngStream rng(11);
  const auto ws = importance_sample(base, [&](double x) { return target.pdf(x) / base.pdf(x); }, 200000, rng);
  double s = 0.0;
  for (double w : ws.weights) s += w;
  EXPECT_NEAR(s, 1.0, 1e-12);
  EXPECT_GT(ws.ess, 0.3 * 200000);
  const auto h = weighted_histogram(ws, -3.0, 5.0, 40);
  const double width = 0.2;
  for (std::size_t b = 0; b < h.points.size(); ++b) {
    const double lo = -3.0 + b * width;
    EXPECT_NEAR(h.values[b], target.mass(lo, lo + width) / width, 0.01) << b;
  }
  EXPECT_THROW(weighted_histogram(ws, 1.0, 0.0, 10), DomainError);
}

TEST(Importance, LowEssWarns) {
  const auto base = normal_density(0.0, 1.0);
  RngStream rng(1);
  const auto ws = importance_sample(base, [](double x) { return std::exp(8.0 * x); }, 5000, rng);
  ASSERT_FALSE(ws.warnings.empty());
  EXPECT_NE(ws.warnings[0].find("effective sample size"), std::string::npos);
}

TEST(Diagnostics, KolmogorovSurvivalFrozen) {
  const std::pair<double, double> vals[] = {{0.3, 0.9999906941986655}, {0.5, 0.9639452436648751},
                                            {1.0, 0.26999967167735456}, {1.18, 0.1234538094297657},
                                            {1.36, 0.049485876755377876}, {2.0, 0.0006709252557796953}};
  for (auto [z, q] : vals) EXPECT_NEAR(kolmogorov_sf(z), q, 1e-12) << z;
  EXPECT_EQ(kolmogorov_sf(0.0), 1.0);
}

TEST(Diagnostics, EssOfAutoregressiveSeries) {
  // AR(1) with coefficient phi has ESS / n -> (1 - phi) / (1 + phi).
  RngStream rng(6);
  const double phi = 0.8;
  std::vector<double> x(200000);
  double v = 0.0;
  for (double& xi : x) xi = v = phi * v + rng.normal();
  EXPECT_NEAR(effective_sample_size(x) / x.size(), (1 - phi) / (1 + phi), 0.02);
  std::vector<double> iid(50000);
  for (double& xi : iid) xi = rng.normal();
  EXPECT_NEAR(effective_sample_size(iid) / iid.size(), 1.0, 0.1);
}

TEST(Diagnostics, TwoSampleKs) {
  RngStream rng(2);
  std::vector<double> a(5000), b(5000), c(5000);
  for (std::size_t i = 0; i < a.size(); ++i) {
    a[i] = rng.normal();
    b[i] = rng.normal();
    c[i] = rng.normal() + 0.3;
  }
  EXPECT_EQ(ks_two_sample(a, a).distance, 0.0);
  EXPECT_GT(ks_two_sample(a, b).p_value, 0.01);
  EXPECT_LT(ks_two_sample(a, c).p_value, 1e-6);
  // Smaller effective sizes weaken the evidence.
  EXPECT_GT(ks_two_sample(a, c, 50, 50).p_value, ks_two_sample(a, c).p_value);
}

TEST(Diagnostics, CorrelationAndGelmanRubinErrors) {
  EXPECT_NEAR(correlation({1, 2, 3, 4}, {2, 4, 6, 8}), 1.0, 1e-15);
  EXPECT_THROW(correlation({1, 1, 1}, {1, 2, 3}), DomainError);
  std::vector<ChainOutput> one(1);
  EXPECT_THROW(gelman_rubin(one, 0), DomainError);
}

TEST(ScanCompare, CompatibleOrdersAreIndistinguishable) {
  auto c = config(20000, kNuv.default_initial(), 9);
  const auto rep = scan_order_compare(compatible_conditionals(kNuv), c, ScanOrder::fixed({0, 1}), ScanOrder::fixed({1, 0}));
  ASSERT_EQ(rep.marginals.size(), 2u);
  ASSERT_EQ(rep.correlations.size(), 1u);
  for (const auto& m : rep.marginals) EXPECT_GT(m.ks.p_value, 0.01) << m.name;
  EXPECT_FALSE(rep.significant);
  EXPECT_EQ(rep.classification, "undetectable");
}

TEST(ScanCompare, SameStreamsReplayIdenticalOrder) {
  ScanCompareOptions opt;
  opt.independent_streams = false;
  auto c = config(2000, kNuv.default_initial(), 9);
  const auto rep = scan_order_compare(compatible_conditionals(kNuv), c, ScanOrder::fixed({0, 1}), ScanOrder::fixed({0, 1}), opt);
  for (const auto& m : rep.marginals) EXPECT_EQ(m.ks.distance, 0.0);
  EXPECT_THROW(scan_order_compare(compatible_conditionals(kNuv), c, ScanOrder::random(), ScanOrder::fixed({0, 1})),
               DomainError);
}

TEST(ScanCompare, ClassifiesLargeDifference) {
  // Two different targets masquerading as two orders.
  auto make = [](double shift) {
    ConditionalSet cs = {{"a", [shift](const std::vector<double>&) -> BoundConditional {
                            return DirectDraw{[shift](RngStream& r) { return r.normal() + shift; }};
                          }},
                         {"b", [](const std::vector<double>&) -> BoundConditional {
                            return DirectDraw{[](RngStream& r) { return r.normal(); }};
                          }}};
    return cs;
  };
  auto c = config(5000, {0.0, 0.0});
  std::vector<ChainOutput> a{gibbs_run(make(0.0), c, ScanOrder::fixed({0, 1}))};
  c.stream = 5;
  std::vector<ChainOutput> b{gibbs_run(make(1.0), c, ScanOrder::fixed({0, 1}))};
  const auto rep = compare_chains(a, b);
  EXPECT_TRUE(rep.significant);
  EXPECT_EQ(rep.classification, "large");
}
