#pragma once

// Parameter-space / sampling-space hypothesis pairs built from a one-sided
// test statistic, plus the P and Q values of the normal-case constructions.

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "bfi/error.hpp"
#include "bfi/numeric.hpp"

namespace bfi {

/// Narrow interval [lo, hi] carrying the special hypothesis; lo == hi is sharp.
class SpecialInterval {
 public:
  SpecialInterval(double lo, double hi) : lo_(lo), hi_(hi) {
    if (!(lo <= hi)) throw DomainError("SpecialInterval: lo must not exceed hi");
  }

  double lo() const noexcept { return lo_; }
  double hi() const noexcept { return hi_; }
  double width() const noexcept { return hi_ - lo_; }
  double midpoint() const noexcept { return 0.5 * (lo_ + hi_); }
  bool sharp() const noexcept { return lo_ == hi_; }
  bool contains(double theta) const noexcept { return theta >= lo_ && theta <= hi_; }

  friend bool operator==(const SpecialInterval&, const SpecialInterval&) = default;

 private:
  double lo_;
  double hi_;
};

enum class Direction { lower, upper };
enum class Tail { left, right };

inline const char* to_string(Direction d) { return d == Direction::lower ? "lower" : "upper"; }

inline Direction opposite(Direction d) { return d == Direction::lower ? Direction::upper : Direction::lower; }

/// One-sided test statistic T(x) with observed value t.
///
/// cdf(t, theta) = P(T <= t | theta) and ccdf(t, theta) = P(T >= t | theta).
/// The ancillary set is empty for every shipped model.
struct TestStatistic {
  double value = 0.0;
  std::function<double(double, double)> cdf;
  std::function<double(double, double)> ccdf;
  /// P(T = t | theta); identically zero for continuous statistics.
  std::function<double(double, double)> point_mass = [](double, double) { return 0.0; };
  bool discrete = false;

  double F(double theta) const { return cdf(value, theta); }
  double Fprime(double theta) const { return ccdf(value, theta); }
};

struct MonotonicityReport {
  bool cdf_decreasing = true;
  bool comp_increasing = true;
  bool complement_identity = true;
  std::vector<std::string> failures;

  bool ok() const { return cdf_decreasing && comp_increasing && complement_identity; }
};

/// Checks on a theta grid that F(t|theta) and 1 - F'(t|theta) strictly
/// decrease, and that F + F' - P(T = t) = 1.
inline MonotonicityReport check_monotonicity(const TestStatistic& stat, double theta_lo, double theta_hi,
                                             std::size_t n_grid = 64, double identity_tol = 1e-12) {
  MonotonicityReport rep;
  const auto grid = numeric::linspace(theta_lo, theta_hi, n_grid);
  double prev_f = 0.0;
  double prev_c = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double f = stat.F(grid[i]);
    const double c = stat.Fprime(grid[i]);
    const double pm = stat.point_mass(stat.value, grid[i]);
    if (std::fabs(f + c - pm - 1.0) > identity_tol) {
      rep.complement_identity = false;
      rep.failures.push_back("F + F' - P(T=t) != 1 at theta=" + std::to_string(grid[i]));
    }
    if (i > 0) {
      // Saturated tails (exactly 0 or 1 in double precision) are not informative.
      const bool f_saturated = (f == prev_f) && (f == 0.0 || f == 1.0);
      const bool c_saturated = (c == prev_c) && (c == 0.0 || c == 1.0);
      if (!(f < prev_f) && !f_saturated) {
        rep.cdf_decreasing = false;
        rep.failures.push_back("F(t|theta) not decreasing at theta=" + std::to_string(grid[i]));
      }
      if (!(c > prev_c) && !c_saturated) {
        rep.comp_increasing = false;
        rep.failures.push_back("1 - F'(t|theta) not decreasing at theta=" + std::to_string(grid[i]));
      }
    }
    prev_f = f;
    prev_c = c;
  }
  return rep;
}

/// Direction-resolved hypothesis pair (H_P, H_S).
struct OrientedHypotheses {
  Direction direction;
  SpecialInterval interval;
  /// One-sided P value beta that bounds the long-run proportion in H_S.
  double p_value;

  Tail tail() const noexcept { return direction == Direction::lower ? Tail::left : Tail::right; }

  /// Boundary value of theta appearing in H_P.
  double boundary() const noexcept { return direction == Direction::lower ? interval.lo() : interval.hi(); }

  /// H_P: theta >= lo (lower) or theta <= hi (upper).
  bool h_p(double theta) const noexcept {
    return direction == Direction::lower ? theta >= interval.lo() : theta <= interval.hi();
  }
};

/// H_P/H_S pair for a fixed direction, without the orientation rule.
inline OrientedHypotheses oriented_as(const TestStatistic& stat, const SpecialInterval& interval, Direction d) {
  const double beta = d == Direction::lower ? stat.F(interval.lo()) : stat.Fprime(interval.hi());
  return {d, interval, beta};
}

/// Picks H_P: theta >= lo with beta = F(t|lo) when F(t|lo) <= F'(t|hi),
/// otherwise H_P: theta <= hi with beta = F'(t|hi). Ties go to lower.
inline OrientedHypotheses orient(const TestStatistic& stat, const SpecialInterval& interval) {
  const double f_lo = stat.F(interval.lo());
  const double c_hi = stat.Fprime(interval.hi());
  if (f_lo <= c_hi) return {Direction::lower, interval, f_lo};
  return {Direction::upper, interval, c_hi};
}

// ---------------------------------------------------------------------------
// Normal mean with known sd: observed difference x, sd sigma, half-width eps.

struct HypothesisPairNormal {
  double x;
  double sigma;
  double epsilon = 0.0;

  void validate() const {
    if (!(sigma > 0.0)) throw DomainError("HypothesisPairNormal: sigma must be positive");
    if (!(epsilon >= 0.0)) throw DomainError("HypothesisPairNormal: epsilon must be nonnegative");
  }
};

/// 2 Phi(-|x| / sigma).
inline double two_sided_p(const HypothesisPairNormal& h) {
  h.validate();
  return 2.0 * numeric::normal_cdf(-std::fabs(h.x) / h.sigma);
}

/// Phi((-|x| - eps)/sigma) + Phi((-|x| + eps)/sigma).
inline double q_value(const HypothesisPairNormal& h) {
  h.validate();
  const double ax = std::fabs(h.x);
  return numeric::normal_cdf((-ax - h.epsilon) / h.sigma) + numeric::normal_cdf((-ax + h.epsilon) / h.sigma);
}

/// Phi((x + eps)/sigma) for x <= 0, Phi((-x + eps)/sigma) for x > 0.
inline double one_sided_p_normal(const HypothesisPairNormal& h) {
  h.validate();
  if (h.x <= 0.0) return numeric::normal_cdf((h.x + h.epsilon) / h.sigma);
  return numeric::normal_cdf((-h.x + h.epsilon) / h.sigma);
}

}  // namespace bfi
