#pragma once

// Evaluable one-dimensional densities with CDF, survival function, quantile
// and sampler. These carry every fiducial density f_S and its conditioned
// variants.

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <string>
#include <utility>

#include "bfi/error.hpp"
#include "bfi/hypotheses.hpp"
#include "bfi/numeric.hpp"
#include "bfi/rng.hpp"

namespace bfi {

class FiducialDensity {
 public:
  struct Model {
    std::string name;
    double lo = -numeric::kInf;
    double hi = numeric::kInf;
    std::function<double(double)> pdf;
    std::function<double(double)> cdf;
    std::function<double(double)> sf;        // defaults to 1 - cdf
    std::function<double(double)> quantile;  // defaults to root finding on cdf
    std::function<double(RngStream&)> sampler;  // defaults to inverse CDF
  };

  explicit FiducialDensity(Model m) {
    if (!m.pdf || !m.cdf) throw DomainError("FiducialDensity: pdf and cdf are required");
    if (!(m.lo < m.hi)) throw DomainError("FiducialDensity: empty domain");
    if (!m.sf) m.sf = [cdf = m.cdf](double x) { return 1.0 - cdf(x); };
    model_ = std::make_shared<const Model>(std::move(m));
  }

  const std::string& name() const noexcept { return model_->name; }
  double lo() const noexcept { return model_->lo; }
  double hi() const noexcept { return model_->hi; }

  double pdf(double x) const {
    if (!(x > lo() && x < hi())) return 0.0;
    return model_->pdf(x);
  }

  double cdf(double x) const {
    if (x <= lo()) return 0.0;
    if (x >= hi()) return 1.0;
    return model_->cdf(x);
  }

  double sf(double x) const {
    if (x <= lo()) return 1.0;
    if (x >= hi()) return 0.0;
    return model_->sf(x);
  }

  /// Mass on [a, b], using whichever tail keeps precision.
  double mass(double a, double b) const {
    if (!(a < b)) return 0.0;
    const double ca = cdf(a);
    if (ca > 0.5) return std::max(0.0, sf(a) - sf(b));
    return std::max(0.0, cdf(b) - ca);
  }

  double quantile(double p) const {
    if (!(p >= 0.0 && p <= 1.0)) throw DomainError("quantile: p outside [0,1]");
    if (p == 0.0) return lo();
    if (p == 1.0) return hi();
    if (model_->quantile) return model_->quantile(p);
    double a = std::isfinite(lo()) ? lo() : -1.0;
    double b = std::isfinite(hi()) ? hi() : 1.0;
    while (!std::isfinite(lo()) && cdf(a) > p) a = a * 2.0 - 1.0;
    while (!std::isfinite(hi()) && cdf(b) < p) b = b * 2.0 + 1.0;
    return numeric::find_root([&](double x) { return cdf(x) - p; }, a, b, 1e-13 * std::max(1.0, b - a));
  }

  double sample(RngStream& rng) const {
    if (model_->sampler) return model_->sampler(rng);
    return quantile(rng.uniform());
  }

 private:
  std::shared_ptr<const Model> model_;
};

// ---------------------------------------------------------------------------
// Families

inline FiducialDensity normal_density(double mean, double sd) {
  if (!(sd > 0.0)) throw DomainError("normal_density: sd must be positive");
  FiducialDensity::Model m;
  m.name = "normal";
  m.pdf = [=](double x) { return numeric::normal_pdf((x - mean) / sd) / sd; };
  m.cdf = [=](double x) { return numeric::normal_cdf((x - mean) / sd); };
  m.sf = [=](double x) { return numeric::normal_cdf((mean - x) / sd); };
  m.quantile = [=](double p) { return mean + sd * numeric::normal_quantile(p); };
  m.sampler = [=](RngStream& rng) {
    std::normal_distribution<double> d(mean, sd);
    return d(rng);
  };
  return FiducialDensity(std::move(m));
}

inline FiducialDensity beta_density(double a, double b) {
  numeric::check_shapes(a, b);
  FiducialDensity::Model m;
  m.name = "beta";
  m.lo = 0.0;
  m.hi = 1.0;
  m.pdf = [=](double x) { return numeric::beta_pdf(x, a, b); };
  m.cdf = [=](double x) { return numeric::beta_cdf(x, a, b); };
  m.sf = [=](double x) { return numeric::beta_sf(x, a, b); };
  m.quantile = [=](double p) { return numeric::beta_quantile(p, a, b); };
  m.sampler = [=](RngStream& rng) { return numeric::beta_sample(a, b, rng); };
  return FiducialDensity(std::move(m));
}

/// Density of a variance: Scale-inv-chi2(df, s).
inline FiducialDensity scaled_inv_chi2_density(double df, double s) {
  numeric::check_sichi2(df, s);
  FiducialDensity::Model m;
  m.name = "scaled_inv_chi2";
  m.lo = 0.0;
  m.pdf = [=](double v) { return numeric::scaled_inv_chi2_pdf(v, df, s); };
  m.cdf = [=](double v) { return numeric::scaled_inv_chi2_cdf(v, df, s); };
  m.sf = [=](double v) { return numeric::scaled_inv_chi2_sf(v, df, s); };
  m.quantile = [=](double p) { return numeric::scaled_inv_chi2_quantile(p, df, s); };
  m.sampler = [=](RngStream& rng) { return numeric::scaled_inv_chi2_sample(df, s, rng); };
  return FiducialDensity(std::move(m));
}

/// Density of a standard deviation sigma whose square is Scale-inv-chi2(df, s).
inline FiducialDensity sd_from_scaled_inv_chi2_density(double df, double s) {
  numeric::check_sichi2(df, s);
  FiducialDensity::Model m;
  m.name = "sd_scaled_inv_chi2";
  m.lo = 0.0;
  m.pdf = [=](double sd) { return 2.0 * sd * numeric::scaled_inv_chi2_pdf(sd * sd, df, s); };
  m.cdf = [=](double sd) { return numeric::scaled_inv_chi2_cdf(sd * sd, df, s); };
  m.sf = [=](double sd) { return numeric::scaled_inv_chi2_sf(sd * sd, df, s); };
  m.quantile = [=](double p) { return std::sqrt(numeric::scaled_inv_chi2_quantile(p, df, s)); };
  m.sampler = [=](RngStream& rng) { return std::sqrt(numeric::scaled_inv_chi2_sample(df, s, rng)); };
  return FiducialDensity(std::move(m));
}

/// exp(Z) with Z ~ N(mu, sd^2).
inline FiducialDensity lognormal_density(double mu, double sd) {
  if (!(sd > 0.0)) throw DomainError("lognormal_density: sd must be positive");
  FiducialDensity::Model m;
  m.name = "lognormal";
  m.lo = 0.0;
  m.pdf = [=](double x) { return numeric::normal_pdf((std::log(x) - mu) / sd) / (sd * x); };
  m.cdf = [=](double x) { return numeric::normal_cdf((std::log(x) - mu) / sd); };
  m.sf = [=](double x) { return numeric::normal_cdf((mu - std::log(x)) / sd); };
  m.quantile = [=](double p) { return std::exp(mu + sd * numeric::normal_quantile(p)); };
  m.sampler = [=](RngStream& rng) {
    std::normal_distribution<double> d(mu, sd);
    return std::exp(d(rng));
  };
  return FiducialDensity(std::move(m));
}

/// f restricted to [a, b] and renormalized.
inline FiducialDensity truncate(const FiducialDensity& f, double a, double b, double min_mass = 1e-300) {
  a = std::max(a, f.lo());
  b = std::min(b, f.hi());
  const double mass = f.mass(a, b);
  if (!(mass > min_mass)) throw DomainError("truncate: region carries no mass");
  const double ca = f.cdf(a);
  const double sa = f.sf(a);
  const bool use_sf = ca > 0.5;
  FiducialDensity::Model m;
  m.name = f.name() + "|trunc";
  m.lo = a;
  m.hi = b;
  m.pdf = [=](double x) { return f.pdf(x) / mass; };
  m.cdf = [=](double x) { return std::clamp(f.mass(a, x) / mass, 0.0, 1.0); };
  m.sf = [=](double x) { return std::clamp(f.mass(x, b) / mass, 0.0, 1.0); };
  m.quantile = [=](double p) {
    const double x = use_sf ? f.quantile(1.0 - (sa - p * mass)) : f.quantile(ca + p * mass);
    return std::clamp(x, a, b);
  };
  return FiducialDensity(std::move(m));
}

// ---------------------------------------------------------------------------
// Interval shape h: a continuous unimodal density on the special interval
// that vanishes at both endpoints.

class IntervalShape {
 public:
  enum class Scale { linear, log_odds };

  /// Beta(a, b) mapped affinely onto the interval.
  static IntervalShape beta(const SpecialInterval& interval, double a, double b) {
    return IntervalShape(interval, a, b, Scale::linear);
  }

  /// h such that log(odds(theta)) is Beta(a, b) on the log-odds image of the
  /// interval; the interval must lie inside (0, 1).
  static IntervalShape log_odds_beta(const SpecialInterval& interval, double a, double b) {
    if (!(interval.lo() > 0.0 && interval.hi() < 1.0))
      throw DomainError("log-odds shape requires an interval inside (0,1)");
    return IntervalShape(interval, a, b, Scale::log_odds);
  }

  const SpecialInterval& interval() const noexcept { return interval_; }
  double shape_a() const noexcept { return a_; }
  double shape_b() const noexcept { return b_; }
  Scale scale() const noexcept { return scale_; }

  double operator()(double theta) const {
    if (!(theta > interval_.lo() && theta < interval_.hi())) return 0.0;
    if (scale_ == Scale::linear) {
      const double w = interval_.width();
      return kernel((theta - interval_.lo()) / w) / w;
    }
    const double l = std::log(theta / (1.0 - theta));
    const double u = (l - t_lo_) / (t_hi_ - t_lo_);
    if (!(u > 0.0 && u < 1.0)) return 0.0;
    return kernel(u) / (t_hi_ - t_lo_) / (theta * (1.0 - theta));
  }

  /// Upper bound on h over the interval (used by rejection samplers).
  double max_value() const { return max_; }

 private:
  IntervalShape(const SpecialInterval& interval, double a, double b, Scale scale)
      : interval_(interval), a_(a), b_(b), scale_(scale) {
    numeric::check_shapes(a, b);
    log_norm_ = numeric::log_beta_fn(a, b);
    if (!(a > 1.0 && b > 1.0)) throw DomainError("interval shape h must vanish at both endpoints (shapes > 1)");
    if (interval.sharp()) throw DomainError("interval shape h needs an interval of positive width");
    if (scale == Scale::log_odds) {
      t_lo_ = std::log(interval.lo() / (1.0 - interval.lo()));
      t_hi_ = std::log(interval.hi() / (1.0 - interval.hi()));
    }
    double mx = 0.0;
    for (double t : numeric::linspace(interval.lo(), interval.hi(), 257)) mx = std::max(mx, (*this)(t));
    max_ = mx * 1.01;
  }

  /// Beta(a, b) density on (0, 1).
  double kernel(double u) const {
    if (!(u > 0.0 && u < 1.0)) return 0.0;
    return std::exp((a_ - 1.0) * std::log(u) + (b_ - 1.0) * std::log1p(-u) - log_norm_);
  }

  SpecialInterval interval_;
  double log_norm_ = 0.0;
  double a_;
  double b_;
  Scale scale_;
  double t_lo_ = 0.0;
  double t_hi_ = 0.0;
  double max_ = 0.0;
};

}  // namespace bfi
