#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "bfi/numeric.hpp"
#include "bfi/rng.hpp"
#include "support.hpp"

namespace nm = bfi::numeric;

namespace {

// Maclaurin series of erf in long double; accurate well past 1e-13 for |z| < 3.
double erf_series(double z) {
  long double term = z, sum = z;
  const long double z2 = static_cast<long double>(z) * z;
  for (int n = 1; n < 200; ++n) {
    term *= -z2 / n;
    sum += term / (2 * n + 1);
  }
  return static_cast<double>(sum * 2.0L / std::sqrt(3.14159265358979323846264338327950288L));
}

// Binomial pmf from the multiplicative form of C(n, y), independent of lgamma.
long double pmf_product(unsigned y, unsigned n, double p) {
  long double c = 1.0L;
  for (unsigned i = 1; i <= y; ++i) c = c * (n - y + i) / i;
  return c * std::pow(static_cast<long double>(p), y) * std::pow(1.0L - p, n - y);
}

double simpson(const std::function<double(double)>& f, double a, double b, int n = 20000) {
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

}  // namespace

TEST(NormalCdf, MatchesSeriesOracle) {
  for (double z = -4.0; z <= 4.0; z += 0.25) {
    const double expect = 0.5 * (1.0 + erf_series(z / std::sqrt(2.0)));
    EXPECT_NEAR(nm::normal_cdf(z), expect, 1e-13) << "z=" << z;
  }
}

TEST(NormalCdf, FarTailKeepsRelativePrecision) {
  // Phi(-10) = 7.6198530241604696e-24
  EXPECT_NEAR(nm::normal_cdf(-10.0) / 7.6198530241604696e-24, 1.0, 1e-12);
}

TEST(NormalQuantile, InvertsCdf) {
  for (double p : {1e-12, 1e-6, 0.01, 0.3, 0.5, 0.77, 0.999}) EXPECT_NEAR(nm::normal_cdf(nm::normal_quantile(p)), p, 1e-14 + 1e-12 * p);
  EXPECT_EQ(nm::normal_quantile(0.0), -nm::kInf);
  EXPECT_THROW(nm::normal_quantile(1.5), bfi::DomainError);
}

TEST(BinomialTails, MatchBruteForceSums) {
  for (unsigned n : {1u, 10u, 20u, 57u}) {
    for (double p : {0.03, 0.47, 0.5, 0.6183, 0.97}) {
      for (unsigned k = 0; k <= n; ++k) {
        long double lower = 0.0L, upper = 0.0L;
        for (unsigned y = 0; y <= k; ++y) lower += pmf_product(y, n, p);
        for (unsigned y = k; y <= n; ++y) upper += pmf_product(y, n, p);
        EXPECT_NEAR(nm::binom_lower_tail(k, n, p), static_cast<double>(lower), 1e-13) << n << " " << p << " " << k;
        EXPECT_NEAR(nm::binom_upper_tail(k, n, p), static_cast<double>(upper), 1e-13) << n << " " << p << " " << k;
      }
    }
  }
}

TEST(BinomialTails, ComplementIdentityProperty) {
  bfi::prop::Gen g(11);
  for (int i = 0; i < 300; ++i) {
    const unsigned n = g.integer(1, 80);
    const unsigned k = g.integer(0, n - 1);
    const double p = g.uniform(0.0, 1.0);
    EXPECT_NEAR(nm::binom_lower_tail(k, n, p) + nm::binom_upper_tail(k + 1, n, p), 1.0, 1e-14);
    EXPECT_NEAR(nm::binom_lower_tail(k, n, p) + nm::binom_upper_tail(k, n, p) - nm::binom_pmf(k, n, p), 1.0, 1e-14);
  }
}

TEST(BinomialTails, GoldenFromObservedCount) {
  // P(Y <= 1 | n = 10, p = 0.47)
  EXPECT_NEAR(nm::binom_lower_tail(1, 10, 0.47), 0.01725776358512516, 1e-15);
  EXPECT_THROW(nm::binom_lower_tail(1, 10, 1.2), bfi::DomainError);
}

TEST(BetaDistribution, CdfMatchesSimpsonOfPdf) {
  for (auto [a, b] : std::vector<std::pair<double, double>>{{1.5, 9.5}, {4, 4}, {6.5, 14.5}, {18.5, 12.5}}) {
    for (double x : {0.1, 0.3, 0.47, 0.62, 0.9}) {
      const double q = simpson([=](double t) { return t <= 0.0 || t >= 1.0 ? 0.0 : nm::beta_pdf(t, a, b); }, 0.0, x, 200000);
      // Simpson loses accuracy at the sqrt singularity of shape 1.5 near 0.
      EXPECT_NEAR(nm::beta_cdf(x, a, b), q, 2e-7) << a << "," << b << " x=" << x;
      EXPECT_NEAR(nm::beta_cdf(x, a, b) + nm::beta_sf(x, a, b), 1.0, 1e-15);
    }
  }
}

TEST(BetaDistribution, QuantileRoundTrip) {
  for (double p : {1e-8, 0.01, 0.5, 0.99}) EXPECT_NEAR(nm::beta_cdf(nm::beta_quantile(p, 1.5, 9.5), 1.5, 9.5), p, 1e-13);
}

TEST(ScaledInvChi2, FrozenCdfValues) {
  // P(V <= v) for V ~ Scale-inv-chi2(8, 9), i.e. P(chi2_8 >= 72 / v).
  EXPECT_NEAR(nm::scaled_inv_chi2_cdf(5.0, 8.0, 9.0), 0.07191711774930876, 1e-14);
  EXPECT_NEAR(nm::scaled_inv_chi2_cdf(9.0, 8.0, 9.0), 0.43347012036670896, 1e-14);
  EXPECT_NEAR(nm::scaled_inv_chi2_cdf(20.0, 8.0, 9.0), 0.8912916052907945, 1e-14);
}

TEST(ScaledInvChi2, PdfIntegratesToCdf) {
  const double q = simpson([](double v) { return v <= 0.0 ? 0.0 : nm::scaled_inv_chi2_pdf(v, 8.0, 9.0); }, 1e-9, 9.0);
  EXPECT_NEAR(q, nm::scaled_inv_chi2_cdf(9.0, 8.0, 9.0), 1e-9);
  EXPECT_NEAR(nm::scaled_inv_chi2_quantile(nm::scaled_inv_chi2_cdf(7.0, 8.0, 9.0), 8.0, 9.0), 7.0, 1e-10);
}

TEST(Quadrature, ExactForPolynomials) {
  EXPECT_NEAR(nm::integrate([](double x) { return 3 * x * x - x + 2; }, -1.0, 2.0), 13.5, 1e-13);
}

TEST(Quadrature, InfiniteRange) {
  auto gauss = [](double x) { return std::exp(-x * x); };
  EXPECT_NEAR(nm::integrate(gauss, -nm::kInf, nm::kInf), std::sqrt(3.14159265358979323846), 1e-12);
  EXPECT_NEAR(nm::integrate(gauss, 0.0, nm::kInf), 0.5 * std::sqrt(3.14159265358979323846), 1e-12);
}

TEST(Quadrature, ErrorEstimateWithinTolerance) {
  const auto r = nm::integrate_with_error([](double x) { return std::cos(x) * std::exp(x); }, 0.0, 3.0, 1e-12);
  const double exact = 0.5 * (std::exp(3.0) * (std::cos(3.0) + std::sin(3.0)) - 1.0);
  EXPECT_NEAR(r.value, exact, 1e-11 * std::fabs(exact) + 1e-12);
  EXPECT_LE(r.error, 1e-12 * std::max(1.0, 22.0));
}

TEST(Quadrature, UnreachableToleranceThrowsWithBestEstimate) {
  // A square wave too fine for either rule to resolve.
  auto f = [](double x) { return std::fmod(x * 1e6, 1.0) < 0.5 ? 1.0 : -1.0; };
  try {
    nm::integrate_with_error(f, 0.0, 1.0, 1e-14, 2);
    FAIL() << "expected ConvergenceError";
  } catch (const bfi::ConvergenceError& e) {
    EXPECT_TRUE(std::isfinite(e.best_estimate()));
    EXPECT_GT(e.error_estimate(), 0.0);
    EXPECT_NE(std::string(e.what()).find("integrate"), std::string::npos);
  }
}

TEST(Quadrature, EmptyAndReversedRanges) {
  EXPECT_EQ(nm::integrate([](double) { return 1.0; }, 2.0, 2.0), 0.0);
  EXPECT_THROW(nm::integrate([](double) { return 1.0; }, 2.0, 1.0), bfi::DomainError);
}

TEST(RootFinding, FindsCubeRoot) {
  EXPECT_NEAR(nm::find_root([](double x) { return x * x * x - 2.0; }, 0.0, 2.0), std::cbrt(2.0), 1e-12);
  EXPECT_THROW(nm::find_root([](double x) { return x * x + 1.0; }, -1.0, 1.0), bfi::NoSignChange);
  EXPECT_EQ(nm::find_root([](double x) { return x; }, 0.0, 1.0), 0.0);
}

TEST(RootFinding, RandomMonotoneProperty) {
  bfi::prop::Gen g(5);
  for (int i = 0; i < 100; ++i) {
    const double target = g.uniform(0.001, 0.999);
    const double s = g.log_uniform(0.1, 10.0);
    const double x = nm::find_root([&](double t) { return nm::normal_cdf(t / s) - target; }, -50.0, 50.0, 1e-13);
    EXPECT_NEAR(nm::normal_cdf(x / s), target, 1e-12);
  }
}

TEST(GridDensity, TrapezoidAndValidation) {
  nm::GridDensity g;
  g.points = nm::linspace(0.0, 1.0, 101);
  for (double x : g.points) g.values.push_back(2.0 * x);
  EXPECT_NEAR(g.trapezoid_mass(), 1.0, 1e-12);
  g.validate();
  g.values[3] = -1.0;
  EXPECT_THROW(g.validate(), bfi::DomainError);
  const auto l = nm::linspace(-1.0, 1.0, 5);
  EXPECT_EQ(l.front(), -1.0);
  EXPECT_EQ(l.back(), 1.0);
  EXPECT_DOUBLE_EQ(l[2], 0.0);
}

TEST(RngStream, ReproducibleAndIndependentStreams) {
  bfi::RngStream a(42, 0), b(42, 0), c(42, 1), d(43, 0);
  std::set<std::uint64_t> seen;
  for (int i = 0; i < 1000; ++i) {
    const auto x = a();
    EXPECT_EQ(x, b());
    seen.insert(x);
    seen.insert(c());
    seen.insert(d());
  }
  EXPECT_EQ(seen.size(), 3000u);
}

TEST(RngStream, UniformMomentsAndRange) {
  bfi::RngStream r(7);
  const int n = 200000;
  double s = 0.0, s2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double u = r.uniform();
    ASSERT_GT(u, 0.0);
    ASSERT_LT(u, 1.0);
    s += u;
    s2 += u * u;
  }
  // Mean 1/2 (sd of the mean 0.00065), second moment 1/3.
  EXPECT_NEAR(s / n, 0.5, 0.003);
  EXPECT_NEAR(s2 / n, 1.0 / 3.0, 0.003);
}

TEST(Samplers, BetaAndScaledInvChi2Means) {
  bfi::RngStream r(3);
  const int n = 100000;
  double sb = 0.0, sv = 0.0;
  for (int i = 0; i < n; ++i) {
    sb += nm::beta_sample(1.5, 9.5, r);
    sv += nm::scaled_inv_chi2_sample(8.0, 9.0, r);
  }
  // E Beta(1.5, 9.5) = 1.5/11; E Scale-inv-chi2(8, 9) = 8*9/6 = 12.
  EXPECT_NEAR(sb / n, 1.5 / 11.0, 0.002);
  EXPECT_NEAR(sv / n, 12.0, 0.15);
}
