#pragma once

// Special functions, quadrature, root finding and grid densities shared by
// every other part of the engine.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/sinh_sinh.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/erf.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <boost/math/tools/roots.hpp>
#include <boost/math/tools/toms748_solve.hpp>

#include "bfi/error.hpp"
#include "bfi/rng.hpp"

namespace bfi::numeric {

inline constexpr double kInf = std::numeric_limits<double>::infinity();
inline constexpr double kDefaultTol = 1e-10;

// ---------------------------------------------------------------------------
// Normal distribution

inline double normal_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi); }

/// Standard normal CDF, Phi(z).
inline double normal_cdf(double z) {
  if (std::isnan(z)) throw DomainError("normal_cdf: NaN argument");
  return 0.5 * std::erfc(-z / std::numbers::sqrt2);
}

inline double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    if (p == 0.0) return -kInf;
    if (p == 1.0) return kInf;
    throw DomainError("normal_quantile: p outside [0,1]");
  }
  return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p);
}

// ---------------------------------------------------------------------------
// Binomial tails
//
// Terms are formed as exp(log C(n,y) + y log p + (n-y) log(1-p)) and summed
// with Neumaier compensation. The smaller tail is always summed directly and
// the other obtained as its complement, so lower(k) + upper(k+1) == 1.

namespace detail {

inline double log_binom_pmf(unsigned y, unsigned n, double p) {
  if (p == 0.0) return y == 0 ? 0.0 : -kInf;
  if (p == 1.0) return y == n ? 0.0 : -kInf;
  const double lc = std::lgamma(n + 1.0) - std::lgamma(y + 1.0) - std::lgamma(n - y + 1.0);
  return lc + y * std::log(p) + (n - y) * std::log1p(-p);
}

inline double compensated_pmf_sum(unsigned from, unsigned to, unsigned n, double p) {
  double sum = 0.0;
  double comp = 0.0;
  for (unsigned y = from; y <= to; ++y) {
    const double term = std::exp(log_binom_pmf(y, n, p));
    const double t = sum + term;
    comp += std::fabs(sum) >= std::fabs(term) ? (sum - t) + term : (term - t) + sum;
    sum = t;
  }
  return sum + comp;
}

inline void check_binom_args(unsigned n, double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw DomainError("binomial: p outside [0,1]");
  (void)n;
}

}  // namespace detail

inline double binom_pmf(unsigned y, unsigned n, double p) {
  detail::check_binom_args(n, p);
  if (y > n) return 0.0;
  return std::exp(detail::log_binom_pmf(y, n, p));
}

/// P(Y <= k) for Y ~ Binomial(n, p).
inline double binom_lower_tail(unsigned k, unsigned n, double p) {
  detail::check_binom_args(n, p);
  if (k >= n) return 1.0;
  const double mean = n * p;
  if (static_cast<double>(k) <= mean) return std::min(1.0, detail::compensated_pmf_sum(0, k, n, p));
  return std::max(0.0, 1.0 - detail::compensated_pmf_sum(k + 1, n, n, p));
}

/// P(Y >= k) for Y ~ Binomial(n, p).
inline double binom_upper_tail(unsigned k, unsigned n, double p) {
  detail::check_binom_args(n, p);
  if (k == 0) return 1.0;
  if (k > n) return 0.0;
  const double mean = n * p;
  if (static_cast<double>(k - 1) <= mean)
    return std::max(0.0, 1.0 - detail::compensated_pmf_sum(0, k - 1, n, p));
  return std::min(1.0, detail::compensated_pmf_sum(k, n, n, p));
}

// ---------------------------------------------------------------------------
// Beta distribution

inline double log_beta_fn(double a, double b) { return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b); }

inline void check_shapes(double a, double b) {
  if (!(a > 0.0 && b > 0.0)) throw DomainError("beta: shape parameters must be positive");
}

inline double beta_pdf(double x, double a, double b) {
  check_shapes(a, b);
  if (!(x > 0.0 && x < 1.0)) throw DomainError("beta_pdf: x outside (0,1)");
  return std::exp((a - 1.0) * std::log(x) + (b - 1.0) * std::log1p(-x) - log_beta_fn(a, b));
}

inline double beta_cdf(double x, double a, double b) {
  check_shapes(a, b);
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  return boost::math::ibeta(a, b, x);
}

inline double beta_sf(double x, double a, double b) {
  check_shapes(a, b);
  if (x <= 0.0) return 1.0;
  if (x >= 1.0) return 0.0;
  return boost::math::ibetac(a, b, x);
}

inline double beta_quantile(double p, double a, double b) {
  check_shapes(a, b);
  if (p <= 0.0) return 0.0;
  if (p >= 1.0) return 1.0;
  return boost::math::ibeta_inv(a, b, p);
}

inline double beta_sample(double a, double b, RngStream& rng) {
  std::gamma_distribution<double> ga(a, 1.0);
  std::gamma_distribution<double> gb(b, 1.0);
  const double x = ga(rng);
  const double y = gb(rng);
  return x / (x + y);
}

// ---------------------------------------------------------------------------
// Scaled inverse chi-square, density of a variance v with
// p(v) ∝ v^{-(df/2+1)} exp(-df*s/(2v)).

inline void check_sichi2(double df, double s) {
  if (!(df > 0.0 && s > 0.0)) throw DomainError("scaled_inv_chi2: df and scale must be positive");
}

inline double scaled_inv_chi2_pdf(double v, double df, double s) {
  check_sichi2(df, s);
  if (!(v > 0.0)) throw DomainError("scaled_inv_chi2_pdf: argument must be positive");
  const double h = 0.5 * df;
  const double log_pdf =
      h * std::log(h * s) - std::lgamma(h) - (h + 1.0) * std::log(v) - h * s / v;
  return std::exp(log_pdf);
}

inline double scaled_inv_chi2_cdf(double v, double df, double s) {
  check_sichi2(df, s);
  if (v <= 0.0) return 0.0;
  if (v == kInf) return 1.0;
  return boost::math::gamma_q(0.5 * df, 0.5 * df * s / v);
}

inline double scaled_inv_chi2_sf(double v, double df, double s) {
  check_sichi2(df, s);
  if (v <= 0.0) return 1.0;
  if (v == kInf) return 0.0;
  return boost::math::gamma_p(0.5 * df, 0.5 * df * s / v);
}

inline double scaled_inv_chi2_quantile(double p, double df, double s) {
  check_sichi2(df, s);
  if (p <= 0.0) return 0.0;
  if (p >= 1.0) return kInf;
  return 0.5 * df * s / boost::math::gamma_q_inv(0.5 * df, p);
}

/// Draws df*s / X with X ~ chi-square(df).
inline double scaled_inv_chi2_sample(double df, double s, RngStream& rng) {
  check_sichi2(df, s);
  std::gamma_distribution<double> g(0.5 * df, 2.0);
  return df * s / g(rng);
}

// ---------------------------------------------------------------------------
// Quadrature

struct QuadratureResult {
  double value;
  double error;
};

namespace detail {

// Double-exponential rule for the same range; handles endpoint singularities
// that the bisecting Kronrod rule can only approach one level at a time.
template <class G>
QuadratureResult double_exponential(G& g, double lo, double hi, double tol) {
  namespace q = boost::math::quadrature;
  // Abscissa tables are costly to build; keep one set per thread.
  thread_local q::tanh_sinh<double> finite;
  thread_local q::exp_sinh<double> half;
  thread_local q::sinh_sinh<double> whole;
  double err = 0.0, l1 = 0.0, value = 0.0;
  if (std::isinf(lo) && std::isinf(hi)) {
    value = whole.integrate(g, tol, &err, &l1);
  } else if (std::isinf(hi) || std::isinf(lo)) {
    value = half.integrate(g, lo, hi, tol, &err, &l1);
  } else {
    value = finite.integrate(g, lo, hi, tol, &err, &l1);
  }
  return {value, err / std::max(1.0, l1)};
}

}  // namespace detail

/// Adaptive Gauss-Kronrod (31 point) quadrature over [lo, hi], falling back to
/// a double-exponential rule when the Kronrod estimate misses the target.
///
/// Infinite endpoints are mapped to a finite interval. The target is an
/// estimated error of at most tol * max(1, L1), L1 being the integral of |f|.
/// Throws ConvergenceError (carrying the best estimate) when both rules miss.
template <class F>
QuadratureResult integrate_with_error(F&& f, double lo, double hi, double tol = kDefaultTol,
                                      unsigned max_depth = 18) {
  if (!(lo <= hi)) throw DomainError("integrate: lo must not exceed hi");
  if (lo == hi) return {0.0, 0.0};
  if (hi - lo < 1e-9 * std::max(std::fabs(lo), std::fabs(hi))) {
    // A few ulps wide: Kronrod nodes collapse onto the endpoints and Boost's
    // error estimate is meaningless there.
    const double mid = 0.5 * (lo + hi), half = 0.5 * (hi - lo), d = half * std::sqrt(0.6);
    const double fm = f(mid);
    const double gauss = half * (5.0 * f(mid - d) + 8.0 * fm + 5.0 * f(mid + d)) / 9.0;
    return {gauss, std::fabs(gauss - 2.0 * half * fm)};
  }
  using GK = boost::math::quadrature::gauss_kronrod<double, 31>;
  double err = 0.0;
  double l1 = 0.0;
  auto g = [&](double x) { return static_cast<double>(f(x)); };
  const double value = GK::integrate(g, lo, hi, max_depth, tol, &err, &l1);
  // Boost reports the raw Kronrod-Gauss difference, which overstates the error
  // of smooth integrands whose value sits at the rounding floor.
  const double scale = std::max(1.0, l1);
  const double floor = 256.0 * std::numeric_limits<double>::epsilon() * scale;
  const double target = std::max(tol * scale, floor);
  if (err <= target) return {value, err};
  QuadratureResult best{value, err};
  const double span = hi - lo;
  const bool resolvable = std::isinf(span) || span > 1e-6 * std::max(std::fabs(lo), std::fabs(hi));
  if (resolvable) try {
    const auto de = detail::double_exponential(g, lo, hi, tol);
    const double de_err = de.error * scale;
    if (de_err <= target) return {de.value, de_err};
    if (de_err < best.error) best = {de.value, de_err};
  } catch (const std::exception&) {
    // The Kronrod estimate stands.
  }
  char buf[96];
  std::snprintf(buf, sizeof buf, "integrate: tolerance %.3g not reached (error estimate %.3g)", tol, best.error);
  throw ConvergenceError(buf, best.value, best.error);
}

template <class F>
double integrate(F&& f, double lo, double hi, double tol = kDefaultTol) {
  return integrate_with_error(std::forward<F>(f), lo, hi, tol).value;
}

// ---------------------------------------------------------------------------
// Root finding

/// Bracketing root finder (TOMS 748) on [lo, hi]; stops when the bracket is
/// narrower than tol.
template <class G>
double find_root(G&& g, double lo, double hi, double tol = 1e-12, unsigned max_iter = 500) {
  if (!(lo < hi)) throw DomainError("find_root: lo must be below hi");
  const double glo = g(lo);
  const double ghi = g(hi);
  if (std::isnan(glo) || std::isnan(ghi)) throw DomainError("find_root: NaN at bracket endpoint");
  if (glo == 0.0) return lo;
  if (ghi == 0.0) return hi;
  if ((glo < 0.0) == (ghi < 0.0)) throw NoSignChange("find_root: no sign change on the bracket");
  std::uintmax_t iters = max_iter;
  auto tol_fn = [tol](double a, double b) { return std::fabs(b - a) <= tol; };
  const auto bracket =
      boost::math::tools::toms748_solve([&](double x) { return static_cast<double>(g(x)); }, lo, hi, glo, ghi,
                                        tol_fn, iters);
  const double ga = g(bracket.first);
  const double gb = g(bracket.second);
  return std::fabs(ga) <= std::fabs(gb) ? bracket.first : bracket.second;
}

// ---------------------------------------------------------------------------
// Grid carrier for rendered density curves

struct Atom {
  double location;
  double mass;
};

struct GridDensity {
  std::vector<double> points;
  std::vector<double> values;
  double lo = -kInf;
  double hi = kInf;
  std::vector<Atom> atoms;

  std::size_t size() const { return points.size(); }

  void validate() const {
    if (points.size() != values.size()) throw DomainError("GridDensity: points/values size mismatch");
    for (std::size_t i = 1; i < points.size(); ++i)
      if (!(points[i] > points[i - 1])) throw DomainError("GridDensity: points not strictly increasing");
    for (double v : values)
      if (!(v >= 0.0) || !std::isfinite(v)) throw DomainError("GridDensity: negative or non-finite value");
  }

  /// Trapezoid integral of the continuous part.
  double trapezoid_mass() const {
    double m = 0.0;
    for (std::size_t i = 1; i < points.size(); ++i)
      m += 0.5 * (values[i] + values[i - 1]) * (points[i] - points[i - 1]);
    return m;
  }

  double atom_mass() const {
    double m = 0.0;
    for (const auto& a : atoms) m += a.mass;
    return m;
  }
};

inline std::vector<double> linspace(double a, double b, std::size_t n) {
  std::vector<double> out(n);
  if (n == 1) {
    out[0] = a;
    return out;
  }
  for (std::size_t i = 0; i < n; ++i) out[i] = a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1);
  out.back() = b;
  return out;
}

}  // namespace bfi::numeric
