#pragma once

// Post-data opinion (PDO) curves alpha(beta) and the bound curves used to
// check them against a family of conditional problems indexed by a nuisance
// parameter.

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <boost/math/interpolators/pchip.hpp>

#include "bfi/density.hpp"
#include "bfi/error.hpp"
#include "bfi/fiducial.hpp"
#include "bfi/hypotheses.hpp"
#include "bfi/numeric.hpp"
#include "bfi/postdata.hpp"

namespace bfi {

class PdoCurve {
 public:
  enum class Form { power, knots };

  /// alpha = (c * beta)^gamma.
  static PdoCurve power(double c, double gamma, double beta_max = 0.5) {
    if (!(c > 0.0 && gamma > 0.0)) throw DomainError("PdoCurve::power: c and gamma must be positive");
    if (!(beta_max > 0.0 && beta_max <= 1.0)) throw DomainError("PdoCurve: beta_max must lie in (0,1]");
    PdoCurve p;
    p.form_ = Form::power;
    p.c_ = c;
    p.gamma_ = gamma;
    p.beta_max_ = beta_max;
    return p;
  }

  /// Monotone piecewise-cubic (PCHIP) interpolation through (beta, alpha)
  /// knots. A knot at (0, 0) is implied when the first knot has beta > 0.
  static PdoCurve knots(std::vector<std::pair<double, double>> points, std::optional<double> beta_max = {}) {
    if (points.size() < 2) throw DomainError("PdoCurve::knots: need at least two knots");
    std::sort(points.begin(), points.end());
    if (points.front().first > 0.0) points.insert(points.begin(), {0.0, 0.0});
    std::vector<double> xs;
    std::vector<double> ys;
    for (const auto& [b, a] : points) {
      if (!(b >= 0.0 && b <= 1.0 && a >= 0.0 && a <= 1.0)) throw DomainError("PdoCurve::knots: knot outside [0,1]^2");
      if (!xs.empty() && !(b > xs.back())) throw DomainError("PdoCurve::knots: duplicate beta knot");
      xs.push_back(b);
      ys.push_back(a);
    }
    PdoCurve p;
    p.form_ = Form::knots;
    p.knots_ = points;
    p.beta_max_ = beta_max.value_or(xs.back());
    if (p.beta_max_ > xs.back()) throw DomainError("PdoCurve::knots: beta_max beyond the last knot");
    if (points.size() == 2) {
      // PCHIP needs four points; a two-knot curve is linear, so add midpoints.
      const double xm1 = xs[0] + (xs[1] - xs[0]) / 3.0;
      const double xm2 = xs[0] + 2.0 * (xs[1] - xs[0]) / 3.0;
      xs = {xs[0], xm1, xm2, xs[1]};
      ys = {ys[0], ys[0] + (ys[1] - ys[0]) / 3.0, ys[0] + 2.0 * (ys[1] - ys[0]) / 3.0, ys[1]};
    } else if (points.size() == 3) {
      xs.insert(xs.begin() + 1, 0.5 * (xs[0] + xs[1]));
      ys.insert(ys.begin() + 1, 0.5 * (ys[0] + ys[1]));
    }
    p.interp_ = std::make_shared<const boost::math::interpolators::pchip<std::vector<double>>>(std::move(xs),
                                                                                              std::move(ys));
    return p;
  }

  Form form() const noexcept { return form_; }
  double c() const noexcept { return c_; }
  double gamma() const noexcept { return gamma_; }
  double beta_max() const noexcept { return beta_max_; }
  const std::vector<std::pair<double, double>>& knot_points() const noexcept { return knots_; }

  bool in_range(double beta) const noexcept { return beta > 0.0 && beta <= beta_max_; }

  double eval(double beta) const {
    if (!in_range(beta)) throw DomainError("PdoCurve::eval: beta outside (0, beta_max]");
    if (form_ == Form::power) return std::min(1.0, std::pow(c_ * beta, gamma_));
    return std::clamp((*interp_)(beta), 0.0, 1.0);
  }

  double operator()(double beta) const { return eval(beta); }

 private:
  PdoCurve() = default;

  Form form_ = Form::power;
  double c_ = 1.0;
  double gamma_ = 1.0;
  double beta_max_ = 0.5;
  std::vector<std::pair<double, double>> knots_;
  std::shared_ptr<const boost::math::interpolators::pchip<std::vector<double>>> interp_;
};

// ---------------------------------------------------------------------------
// Conditional families

/// Single-parameter problem for theta_j at a fixed value of the other
/// parameters (the nuisance value).
struct ConditionalProblem {
  double nuisance;
  FiducialDensity f_s;
  TestStatistic stat;
  SpecialInterval interval;

  OrientedHypotheses oriented() const { return orient(stat, interval); }
  OrientedHypotheses as(Direction d) const { return oriented_as(stat, interval, d); }
};

struct ConditionalFamily {
  std::string nuisance_name;
  double nuisance_lo;
  double nuisance_hi;
  /// Search the nuisance on a log scale (positive nuisances such as sigma).
  bool log_scale = false;
  std::function<ConditionalProblem(double)> at;
};

namespace detail {

inline double family_beta(const ConditionalFamily& fam, Direction d, double nu) { return fam.at(nu).as(d).p_value; }

inline std::vector<double> nuisance_grid(const ConditionalFamily& fam, std::size_t n) {
  if (!fam.log_scale) return numeric::linspace(fam.nuisance_lo, fam.nuisance_hi, n);
  auto g = numeric::linspace(std::log(fam.nuisance_lo), std::log(fam.nuisance_hi), n);
  for (double& v : g) v = std::exp(v);
  return g;
}

}  // namespace detail

/// Throws DomainError unless beta(nuisance) is one-to-one over the family
/// range (monotone on a 64-point scan, ignoring saturated values).
inline void check_invertible(const ConditionalFamily& fam, Direction d) {
  const auto grid = detail::nuisance_grid(fam, 64);
  int sign = 0;
  double prev = detail::family_beta(fam, d, grid[0]);
  for (std::size_t i = 1; i < grid.size(); ++i) {
    const double b = detail::family_beta(fam, d, grid[i]);
    const bool saturated = b == prev && (b == 0.0 || b == 1.0);
    if (!saturated) {
      const int s = b > prev ? 1 : (b < prev ? -1 : 0);
      if (s == 0 || (sign != 0 && s != sign))
        throw DomainError("beta is not one-to-one in " + fam.nuisance_name + " for direction " + to_string(d));
      sign = s;
    }
    prev = b;
  }
}

/// Nuisance value whose induced one-sided P value equals beta.
inline double nuisance_for_beta(const ConditionalFamily& fam, Direction d, double beta) {
  auto g = [&](double t) {
    const double nu = fam.log_scale ? std::exp(t) : t;
    return detail::family_beta(fam, d, nu) - beta;
  };
  const double a = fam.log_scale ? std::log(fam.nuisance_lo) : fam.nuisance_lo;
  const double b = fam.log_scale ? std::log(fam.nuisance_hi) : fam.nuisance_hi;
  double t;
  try {
    t = numeric::find_root(g, a, b, 1e-13 * std::max(1.0, std::fabs(b - a)));
  } catch (const NoSignChange&) {
    throw DomainError("beta = " + std::to_string(beta) + " is not attained by the family");
  }
  return fam.log_scale ? std::exp(t) : t;
}

struct CurvePoint {
  double beta;
  double value = std::nan("");
  double nuisance = std::nan("");
  bool ok = false;
  std::string error;
};

using Curve = std::vector<CurvePoint>;

namespace detail {

template <class Fn>
Curve sweep(const ConditionalFamily& fam, Direction d, const std::vector<double>& grid, Fn&& fn) {
  check_invertible(fam, d);
  Curve out;
  out.reserve(grid.size());
  for (double beta : grid) {
    CurvePoint pt;
    pt.beta = beta;
    try {
      pt.nuisance = nuisance_for_beta(fam, d, beta);
      const ConditionalProblem prob = fam.at(pt.nuisance);
      pt.value = fn(beta, prob);
      pt.ok = true;
    } catch (const Error& e) {
      pt.error = e.what();
    }
    out.push_back(std::move(pt));
  }
  return out;
}

}  // namespace detail

/// PDO curve that would make alpha equal P_f(H_S) under the induced f_S.
inline Curve lower_bound_curve(const ConditionalFamily& fam, Direction d, const std::vector<double>& grid) {
  return detail::sweep(fam, d, grid, [d](double, const ConditionalProblem& p) { return p_f_hs(p.f_s, p.as(d)); });
}

/// Interval mass alpha - lambda (1 - alpha) with alpha from the curve.
inline Curve interval_mass_curve(const PdoCurve& curve, const ConditionalFamily& fam, Direction d,
                                 const std::vector<double>& grid) {
  return detail::sweep(fam, d, grid, [&](double beta, const ConditionalProblem& p) {
    const double alpha = curve.eval(beta);
    const double floor = p_f_hs(p.f_s, p.as(d));
    if (alpha < floor - 1e-12) throw AlphaBelowFloor(floor_message(alpha, floor), alpha, floor);
    return interval_mass(alpha, lambda_ratio(p.f_s, p.interval, d));
  });
}

/// PDO curve holding the interval mass at target: alpha = (target + lambda) / (1 + lambda).
inline Curve upper_bound_curve(double target, const ConditionalFamily& fam, Direction d,
                               const std::vector<double>& grid) {
  if (!(target > 0.0 && target < 1.0)) throw DomainError("upper_bound_curve: target must lie in (0,1)");
  return detail::sweep(fam, d, grid, [&](double, const ConditionalProblem& p) {
    const double lambda = lambda_ratio(p.f_s, p.interval, d);
    return (target + lambda) / (1.0 + lambda);
  });
}

/// Bound curves against which a PDO curve is validated.
struct PdoBounds {
  std::function<double(double)> lower;
  std::function<double(double)> upper;                 // optional
  std::function<double(double, double)> interval_mass;  // (beta, alpha) -> mass; optional
};

inline PdoBounds make_bounds(const ConditionalFamily& fam, Direction d, std::optional<double> upper_target = {}) {
  check_invertible(fam, d);
  PdoBounds b;
  b.lower = [fam, d](double beta) {
    const auto p = fam.at(nuisance_for_beta(fam, d, beta));
    return p_f_hs(p.f_s, p.as(d));
  };
  if (upper_target) {
    const double t = *upper_target;
    b.upper = [fam, d, t](double beta) {
      const auto p = fam.at(nuisance_for_beta(fam, d, beta));
      const double lambda = lambda_ratio(p.f_s, p.interval, d);
      return (t + lambda) / (1.0 + lambda);
    };
  }
  b.interval_mass = [fam, d](double beta, double alpha) {
    const auto p = fam.at(nuisance_for_beta(fam, d, beta));
    return interval_mass(alpha, lambda_ratio(p.f_s, p.interval, d));
  };
  return b;
}

struct PdoValidation {
  bool monotone = true;
  bool lower_dominance = true;
  std::optional<bool> upper_compliance;
  std::optional<bool> interval_mass_monotone;
  std::vector<std::string> failures;

  bool ok() const {
    return monotone && lower_dominance && upper_compliance.value_or(true) && interval_mass_monotone.value_or(true);
  }
};

/// Checks a PDO curve on a beta grid: strictly increasing, strictly above the
/// lower bound, not above the upper bound (when configured) and producing a
/// monotone increasing interval-mass curve (when configured).
inline PdoValidation validate(const PdoCurve& curve, const PdoBounds& bounds, const std::vector<double>& grid) {
  PdoValidation v;
  auto fail = [&](std::string msg) { v.failures.push_back(std::move(msg)); };
  std::vector<double> g = grid;
  std::sort(g.begin(), g.end());
  double prev_alpha = -1.0;
  double prev_mass = -1.0;
  if (bounds.upper) v.upper_compliance = true;
  if (bounds.interval_mass) v.interval_mass_monotone = true;
  for (double beta : g) {
    const std::string at = " at beta=" + std::to_string(beta);
    double alpha;
    try {
      alpha = curve.eval(beta);
    } catch (const Error& e) {
      v.monotone = false;
      fail(std::string("curve not evaluable") + at);
      continue;
    }
    if (!(alpha > prev_alpha)) {
      v.monotone = false;
      fail("curve not strictly increasing" + at);
    }
    prev_alpha = alpha;
    try {
      const double lo = bounds.lower(beta);
      if (!(alpha > lo * (1.0 + 1e-9) + 1e-15)) {
        v.lower_dominance = false;
        fail("curve not above the lower bound" + at);
      }
      if (bounds.upper) {
        const double hi = bounds.upper(beta);
        if (alpha > hi * (1.0 + 1e-12)) {
          v.upper_compliance = false;
          fail("curve above the upper bound" + at);
        }
      }
      if (bounds.interval_mass) {
        const double m = bounds.interval_mass(beta, alpha);
        if (!(m >= prev_mass)) {
          v.interval_mass_monotone = false;
          fail("interval mass not increasing" + at);
        }
        prev_mass = m;
      }
    } catch (const Error& e) {
      v.lower_dominance = false;
      fail(std::string(e.what()) + at);
    }
  }
  return v;
}

}  // namespace bfi
