#pragma once

// Assembly of the post-data density p(theta | x) from alpha = P(H_S), the
// fiducial density f_S and the oriented special interval.

#include <algorithm>
#include <cmath>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "bfi/density.hpp"
#include "bfi/error.hpp"
#include "bfi/fiducial.hpp"
#include "bfi/hypotheses.hpp"
#include "bfi/numeric.hpp"

namespace bfi {

enum class FillKind { uniform, calibrated, partial };

inline const char* to_string(FillKind k) {
  switch (k) {
    case FillKind::uniform: return "uniform";
    case FillKind::calibrated: return "calibrated";
    case FillKind::partial: return "partial";
  }
  return "?";
}

/// How the density is completed inside the special interval.
struct Fill {
  FillKind kind = FillKind::calibrated;
  std::optional<IntervalShape> h;

  static Fill uniform() { return {FillKind::uniform, std::nullopt}; }
  static Fill partial() { return {FillKind::partial, std::nullopt}; }
  static Fill calibrated(IntervalShape h) { return {FillKind::calibrated, std::move(h)}; }
};

inline std::string floor_message(double alpha, double floor) {
  std::ostringstream os;
  os.precision(4);
  os << "alpha " << alpha << " below P_f(H_S) = " << floor;
  return os.str();
}

/// P(theta in interval | x) = alpha - lambda (1 - alpha), with lambda already
/// oriented. The floor reported on failure is lambda / (1 + lambda).
inline double interval_mass(double alpha, double lambda) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw DomainError("interval_mass: alpha outside [0,1]");
  if (!(lambda >= 0.0)) throw DomainError("interval_mass: lambda must be nonnegative");
  const double m = alpha - lambda * (1.0 - alpha);
  if (m < 0.0) {
    throw AlphaBelowFloor("interval mass negative: " + floor_message(alpha, lambda / (1.0 + lambda)), alpha,
                          lambda / (1.0 + lambda));
  }
  return m;
}

struct TauCalibration {
  double tau;
  double K;   // integral of (1 + tau h) f_S over the interval
  double M0;  // f_S mass on the interval
  double M1;  // integral of h f_S over the interval
  double S;   // f_S mass on the side carrying 1 - alpha
};

namespace detail {

inline void check_floor(double alpha, const FiducialDensity& f_s, const OrientedHypotheses& oriented) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw DomainError("alpha outside [0,1]");
  const double floor = p_f_hs(f_s, oriented);
  if (alpha < floor - 1e-12) throw AlphaBelowFloor(floor_message(alpha, floor), alpha, floor);
}

/// f_S mass on the side of the interval excluded by H_P, whose post-data
/// mass is 1 - alpha.
inline double complement_side_mass(const FiducialDensity& f_s, const OrientedHypotheses& o) {
  return o.direction == Direction::lower ? f_s.cdf(o.interval.lo()) : f_s.sf(o.interval.hi());
}

}  // namespace detail

/// tau making the assembled density continuous at both endpoints:
/// K = mass_inside * S / (1 - alpha), tau = (K - M0) / M1.
inline TauCalibration calibrate_tau(double alpha, const FiducialDensity& f_s, const OrientedHypotheses& oriented,
                                    const IntervalShape& h) {
  const auto& iv = oriented.interval;
  if (!(h.interval() == iv)) throw DomainError("calibrate_tau: h is defined on a different interval");
  detail::check_floor(alpha, f_s, oriented);
  if (!(alpha < 1.0)) throw DomainError("calibrate_tau: alpha must be below 1");
  const double lambda = lambda_ratio(f_s, iv, oriented.direction);
  const double inside = interval_mass(alpha, lambda);
  const double s = detail::complement_side_mass(f_s, oriented);
  const double m0 = f_s.mass(iv.lo(), iv.hi());
  if (!(m0 > 1e-300)) throw DegenerateConditioning("calibrate_tau: f_S has no mass on the interval");
  // Moments relative to M0 keep the quadrature tolerance meaningful when the
  // interval sits far in a tail.
  const double m1_rel = numeric::integrate([&](double x) { return h(x) * f_s.pdf(x) / m0; }, iv.lo(), iv.hi(), 1e-12);
  if (!(m1_rel > 0.0)) throw DomainError("calibrate_tau: invalid h (integral of h f_S is not positive)");
  const double k = inside * s / (1.0 - alpha);
  double tau = (k / m0 - 1.0) / m1_rel;
  if (tau < -1e-12 * std::max(1.0, 1.0 / m1_rel)) {
    throw AlphaBelowFloor("tau negative: " + floor_message(alpha, p_f_hs(f_s, oriented)), alpha,
                          p_f_hs(f_s, oriented));
  }
  tau = std::max(tau, 0.0);
  return {tau, k, m0, m1_rel * m0, s};
}

/// Three-piece post-data density (below / inside / above the interval).
class PostDataDensity {
 public:
  const SpecialInterval& interval() const noexcept { return oriented_.interval; }
  const OrientedHypotheses& oriented() const noexcept { return oriented_; }
  double alpha() const noexcept { return alpha_; }
  double lambda() const noexcept { return lambda_; }
  double mass_below() const noexcept { return mass_below_; }
  double mass_inside() const noexcept { return mass_inside_; }
  double mass_above() const noexcept { return mass_above_; }
  FillKind fill() const noexcept { return fill_; }
  const std::optional<TauCalibration>& tau() const noexcept { return tau_; }
  const FiducialDensity& fiducial() const noexcept { return f_s_; }

  /// Sharp interval with positive interval mass: mass_inside is a point mass.
  bool has_atom() const noexcept { return interval().sharp() && mass_inside_ > 0.0; }

  const std::optional<FiducialDensity>& piece_below() const noexcept { return piece_below_; }
  const std::optional<FiducialDensity>& piece_inside() const noexcept { return piece_inside_; }
  const std::optional<FiducialDensity>& piece_above() const noexcept { return piece_above_; }

  /// Density of the continuous part. Inside the interval this is undefined
  /// for a partial fill and reported as NaN.
  double pdf(double x) const {
    const auto& iv = interval();
    if (x < iv.lo() || x > iv.hi() || iv.sharp()) return outside_scale_ * f_s_.pdf(x);
    return inside_pdf(x);
  }

  /// One-sided limits at a point (differ only at the interval endpoints).
  double left_limit(double x) const {
    const auto& iv = interval();
    if (iv.sharp() || x <= iv.lo() || x > iv.hi()) return outside_scale_ * f_s_.pdf(x);
    return inside_pdf(x);
  }
  double right_limit(double x) const {
    const auto& iv = interval();
    if (iv.sharp() || x < iv.lo() || x >= iv.hi()) return outside_scale_ * f_s_.pdf(x);
    return inside_pdf(x);
  }

  double cdf(double x) const {
    const auto& iv = interval();
    if (x < iv.lo()) return outside_scale_ * f_s_.cdf(x);
    if (x >= iv.hi()) return 1.0 - outside_scale_ * f_s_.sf(x);
    if (iv.sharp()) return 1.0 - outside_scale_ * f_s_.sf(x);
    if (!piece_inside_) throw DomainError("PostDataDensity::cdf: inside fill undefined for a partial fill");
    return mass_below_ + mass_inside_ * piece_inside_->cdf(x);
  }

  double sample(RngStream& rng) const {
    if (fill_ == FillKind::partial && mass_inside_ > 0.0)
      throw DomainError("PostDataDensity::sample: inside fill undefined for a partial fill");
    const double u = rng.uniform();
    if (u < mass_below_) return piece_below_->sample(rng);
    if (u < mass_below_ + mass_inside_) {
      if (interval().sharp()) return interval().lo();
      return piece_inside_->sample(rng);
    }
    return piece_above_->sample(rng);
  }

 private:
  friend PostDataDensity assemble(double, const FiducialDensity&, const OrientedHypotheses&, const Fill&);

  PostDataDensity(const FiducialDensity& f_s, const OrientedHypotheses& o) : f_s_(f_s), oriented_(o) {}

  double inside_pdf(double x) const {
    switch (fill_) {
      case FillKind::partial:
        if (x == interval().lo() || x == interval().hi()) return outside_scale_ * f_s_.pdf(x);
        return std::nan("");
      case FillKind::uniform: return mass_inside_ / interval().width();
      case FillKind::calibrated:
        // Evaluated from the calibration directly so the endpoint limits are
        // available (the inside piece itself is zero off its open domain).
        return mass_inside_ * (1.0 + tau_->tau * (*h_)(x)) * f_s_.pdf(x) / (tau_->M0 + tau_->tau * tau_->M1);
    }
    return 0.0;
  }

  FiducialDensity f_s_;
  OrientedHypotheses oriented_;
  double alpha_ = 0.0;
  double lambda_ = 0.0;
  double mass_below_ = 0.0;
  double mass_inside_ = 0.0;
  double mass_above_ = 0.0;
  // Outside the interval p = (1 - alpha) f_S / S on both sides.
  double outside_scale_ = 0.0;
  FillKind fill_ = FillKind::partial;
  std::optional<TauCalibration> tau_;
  std::optional<IntervalShape> h_;
  std::optional<FiducialDensity> piece_below_;
  std::optional<FiducialDensity> piece_inside_;
  std::optional<FiducialDensity> piece_above_;
};

/// Builds p(theta | x). Under direction=lower the mass below the interval is
/// 1 - alpha and the mass above is lambda (1 - alpha); direction=upper mirrors
/// this. Throws AlphaBelowFloor when alpha < P_f(H_S).
inline PostDataDensity assemble(double alpha, const FiducialDensity& f_s, const OrientedHypotheses& oriented,
                                const Fill& fill) {
  detail::check_floor(alpha, f_s, oriented);
  const auto& iv = oriented.interval;
  PostDataDensity p(f_s, oriented);
  p.alpha_ = alpha;
  p.fill_ = fill.kind;
  p.lambda_ = lambda_ratio(f_s, iv, oriented.direction);
  p.mass_inside_ = interval_mass(alpha, p.lambda_);
  const double rest = 1.0 - alpha;
  const double hp_complement = rest;
  const double hp_side = p.lambda_ * rest;
  if (oriented.direction == Direction::lower) {
    p.mass_below_ = hp_complement;
    p.mass_above_ = hp_side;
  } else {
    p.mass_above_ = hp_complement;
    p.mass_below_ = hp_side;
  }
  const double s = detail::complement_side_mass(f_s, oriented);
  p.outside_scale_ = rest / s;

  if (p.mass_below_ > 0.0 && f_s.cdf(iv.lo()) > 1e-300) p.piece_below_ = truncate(f_s, f_s.lo(), iv.lo());
  if (p.mass_above_ > 0.0 && f_s.sf(iv.hi()) > 1e-300) p.piece_above_ = truncate(f_s, iv.hi(), f_s.hi());

  if (iv.sharp()) return p;

  switch (fill.kind) {
    case FillKind::partial: break;
    case FillKind::uniform: {
      FiducialDensity::Model m;
      m.name = "uniform";
      m.lo = iv.lo();
      m.hi = iv.hi();
      const double w = iv.width();
      const double lo = iv.lo();
      m.pdf = [w](double) { return 1.0 / w; };
      m.cdf = [w, lo](double x) { return (x - lo) / w; };
      m.quantile = [w, lo](double u) { return lo + u * w; };
      p.piece_inside_ = FiducialDensity(std::move(m));
      break;
    }
    case FillKind::calibrated: {
      if (!fill.h) throw DomainError("assemble: calibrated fill requires an interval shape h");
      if (alpha >= 1.0) throw DomainError("assemble: calibrated fill requires alpha < 1");
      const TauCalibration cal = calibrate_tau(alpha, f_s, oriented, *fill.h);
      p.tau_ = cal;
      p.h_ = *fill.h;
      p.piece_inside_ = condition_inside(f_s, GpdInterval{*fill.h, cal.tau}, cal.M1 / cal.M0);
      break;
    }
  }
  return p;
}

/// Density of p on a grid spanning the central 1 - 2e-6 of f_S plus margins
/// around the interval. Sharp intervals report the interval mass as an atom.
inline numeric::GridDensity density_grid(const PostDataDensity& p, std::size_t n_points) {
  if (n_points < 8) throw DomainError("density_grid: need at least 8 points");
  const auto& f = p.fiducial();
  const auto& iv = p.interval();
  double lo = f.quantile(1e-6);
  double hi = f.quantile(1.0 - 1e-6);
  const double margin = std::max(iv.width(), 1e-3 * (hi - lo));
  lo = std::min(lo, iv.lo() - margin);
  hi = std::max(hi, iv.hi() + margin);
  lo = std::max(lo, f.lo());
  hi = std::min(hi, f.hi());

  numeric::GridDensity g;
  g.lo = lo;
  g.hi = hi;
  std::vector<double> pts = numeric::linspace(lo, hi, n_points);
  // Geometric refinement into the first and last cells, where bounded
  // supports put square-root type edges.
  const double step = (hi - lo) / static_cast<double>(n_points - 1);
  for (double d = 0.5 * step; d > 1e-9 * step; d *= 0.5) {
    pts.push_back(lo + d);
    pts.push_back(hi - d);
  }
  if (!iv.sharp()) {
    // The interval is often narrow against the fiducial spread; resolve it.
    const double a = std::max(lo, iv.lo()), b = std::min(hi, iv.hi());
    if (a < b)
      for (double x : numeric::linspace(a, b, std::max<std::size_t>(65, n_points / 4))) pts.push_back(x);
  }
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  if (p.fill() == FillKind::partial && !iv.sharp()) {
    std::erase_if(pts, [&](double x) { return x > iv.lo() && x < iv.hi(); });
  }
  g.points = pts;
  g.values.reserve(pts.size());
  for (double x : pts) {
    double v = p.pdf(x);
    if (std::isnan(v)) v = 0.0;
    g.values.push_back(v);
  }
  if (p.has_atom()) g.atoms.push_back({iv.lo(), p.mass_inside()});
  return g;
}

}  // namespace bfi
