#pragma once

// Pre-data functions and the fiducial densities derived from them: the
// neutral GPD conditioning outside the special interval, the 1 + tau*h GPD
// inside it, P_f(H_S), the outside-mass ratio lambda and the P_f(A) benchmark.

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>

#include "bfi/density.hpp"
#include "bfi/error.hpp"
#include "bfi/hypotheses.hpp"
#include "bfi/numeric.hpp"

namespace bfi {

/// Neutral GPD: zero on the interval, d elsewhere.
struct GpdNeutral {
  SpecialInterval interval;
  double level = 1.0;

  double operator()(double theta) const { return interval.contains(theta) ? 0.0 : level; }
};

/// Interval GPD: 1 + tau*h on the interval, zero elsewhere.
struct GpdInterval {
  IntervalShape h;
  double tau = 0.0;

  const SpecialInterval& interval() const { return h.interval(); }
  double operator()(double theta) const { return interval().contains(theta) ? 1.0 + tau * h(theta) : 0.0; }
};

/// Uniform LPD on the parameter domain.
struct LpdUniform {
  double level = 1.0;
};

/// Fiducial density of a binomial proportion (e successes in n trials) under
/// a uniform LPD, approximated by the Jeffreys posterior Beta(e+1/2, n-e+1/2).
inline FiducialDensity jeffreys_binomial_density(unsigned e, unsigned n, const LpdUniform& lpd = {}) {
  if (e > n) throw DomainError("jeffreys_binomial_density: successes exceed trials");
  if (!(lpd.level > 0.0)) throw DomainError("LPD level must be positive");
  const double a = e + 0.5;
  const double b = n - e + 0.5;
  const double c = lpd.level;
  const double log_norm = numeric::log_beta_fn(a, b);
  FiducialDensity::Model m;
  m.name = "jeffreys_binomial";
  m.lo = 0.0;
  m.hi = 1.0;
  // The constant LPD level multiplies the kernel and its normalizer alike.
  m.pdf = [=](double x) {
    return (c * std::exp((a - 1.0) * std::log(x) + (b - 1.0) * std::log1p(-x))) / (c * std::exp(log_norm));
  };
  m.cdf = [=](double x) { return numeric::beta_cdf(x, a, b); };
  m.sf = [=](double x) { return numeric::beta_sf(x, a, b); };
  m.quantile = [=](double p) { return numeric::beta_quantile(p, a, b); };
  m.sampler = [=](RngStream& rng) { return numeric::beta_sample(a, b, rng); };
  return FiducialDensity(std::move(m));
}

/// Fiducial masses of f_S below, inside and above the interval.
struct SideMasses {
  double below;
  double inside;
  double above;
};

inline SideMasses side_masses(const FiducialDensity& f_s, const SpecialInterval& interval) {
  return {f_s.cdf(interval.lo()), f_s.mass(interval.lo(), interval.hi()), f_s.sf(interval.hi())};
}

/// f_S conditioned not to lie in the interval, weighted by the neutral GPD.
inline FiducialDensity condition_outside(const FiducialDensity& f_s, const GpdNeutral& gpd) {
  const auto& iv = gpd.interval;
  const double d = gpd.level;
  if (!(d > 0.0)) throw DomainError("GPD level must be positive");
  const SideMasses sm = side_masses(f_s, iv);
  const double outside = sm.below + sm.above;
  if (!(outside >= 1e-12)) throw DegenerateConditioning("condition_outside: f_S has no mass outside the interval");
  const double norm = d * outside;
  const double w_below = sm.below / outside;

  FiducialDensity::Model m;
  m.name = f_s.name() + "|outside";
  m.lo = f_s.lo();
  m.hi = f_s.hi();
  m.pdf = [=](double x) { return iv.contains(x) && !iv.sharp() ? 0.0 : d * f_s.pdf(x) / norm; };
  m.cdf = [=](double x) {
    if (x < iv.lo()) return d * f_s.cdf(x) / norm;
    if (x <= iv.hi()) return d * sm.below / norm;
    return 1.0 - d * f_s.sf(x) / norm;
  };
  m.sf = [=](double x) {
    if (x < iv.lo()) return 1.0 - d * f_s.cdf(x) / norm;
    if (x <= iv.hi()) return d * sm.above / norm;
    return d * f_s.sf(x) / norm;
  };
  m.sampler = [=](RngStream& rng) {
    const double u = rng.uniform();
    if (u < w_below) return truncate(f_s, f_s.lo(), iv.lo()).quantile(u / w_below);
    return truncate(f_s, iv.hi(), f_s.hi()).quantile((u - w_below) / (1.0 - w_below));
  };
  return FiducialDensity(std::move(m));
}

inline FiducialDensity condition_outside(const FiducialDensity& f_s, const SpecialInterval& interval) {
  return condition_outside(f_s, GpdNeutral{interval, 1.0});
}

/// C1 (1 + tau h) f_S on the interval. When the moment M1/M0 of h under the
/// truncated f_S is already known, the normalizer is 1 + tau M1/M0 and no
/// quadrature is needed.
inline FiducialDensity condition_inside(const FiducialDensity& f_s, const GpdInterval& gpd,
                                        std::optional<double> m1_over_m0 = {}) {
  const auto& iv = gpd.interval();
  const double tau = gpd.tau;
  if (!(tau >= 0.0)) throw DomainError("condition_inside: tau must be nonnegative");
  const double m0 = f_s.mass(iv.lo(), iv.hi());
  if (!(m0 > 1e-300)) throw DegenerateConditioning("condition_inside: f_S has no mass on the interval");
  const IntervalShape h = gpd.h;
  // The integrand is scaled by 1/M0 so the quadrature tolerance is relative.
  auto weighted = [=](double x) { return (1.0 + tau * h(x)) * f_s.pdf(x) / m0; };
  const double k_rel = m1_over_m0 ? 1.0 + tau * *m1_over_m0 : numeric::integrate(weighted, iv.lo(), iv.hi(), 1e-12);
  const FiducialDensity base = truncate(f_s, iv.lo(), iv.hi());
  const double bound = 1.0 + tau * h.max_value();

  FiducialDensity::Model m;
  m.name = f_s.name() + "|inside";
  m.lo = iv.lo();
  m.hi = iv.hi();
  m.pdf = [=](double x) { return weighted(x) / k_rel; };
  m.cdf = [=](double x) {
    if (x <= iv.lo()) return 0.0;
    if (x >= iv.hi()) return 1.0;
    return std::clamp(numeric::integrate(weighted, iv.lo(), x, 1e-12) / k_rel, 0.0, 1.0);
  };
  m.sampler = [=](RngStream& rng) {
    for (;;) {
      const double x = base.sample(rng);
      if (rng.uniform() * bound <= 1.0 + tau * h(x)) return x;
    }
  };
  return FiducialDensity(std::move(m));
}

/// Fiducial probability of H_S with no pre-data knowledge; the floor for alpha.
inline double p_f_hs(const FiducialDensity& f_s, const OrientedHypotheses& oriented) {
  if (oriented.direction == Direction::lower) return f_s.sf(oriented.interval.lo());
  return f_s.cdf(oriented.interval.hi());
}

/// Ratio of the fiducial mass on the non-H_P side to the mass on the H_P side
/// outside the interval: B/A for lower, A/B for upper (A below, B above).
inline double lambda_ratio(const FiducialDensity& f_s, const SpecialInterval& interval, Direction direction) {
  const double a = f_s.cdf(interval.lo());
  const double b = f_s.sf(interval.hi());
  const double num = direction == Direction::lower ? b : a;
  const double den = direction == Direction::lower ? a : b;
  if (!(den > 0.0)) throw DegenerateConditioning("lambda_ratio: zero fiducial mass on the denominator side");
  return num / den;
}

/// P_f(A) for A = {X* < x} with fiducial N(x, sigma^2) for mu and predictive
/// N(mu, sigma^2), by nested quadrature over mu and X*.
inline double p_f_event_normal(double x, double sigma) {
  if (!(sigma > 0.0)) throw DomainError("p_f_event_normal: sigma must be positive");
  auto inner = [&](double mu) {
    auto g = [&](double xs) { return numeric::normal_pdf((xs - mu) / sigma) / sigma; };
    // Anchor the mapped tail at the peak so far-off means stay resolvable.
    const double mid = std::min(x, mu);
    const double p = numeric::integrate(g, -numeric::kInf, mid, 1e-11) + numeric::integrate(g, mid, x, 1e-11);
    return numeric::normal_pdf((mu - x) / sigma) / sigma * p;
  };
  // Split at the observation where the inner integral changes fastest.
  return numeric::integrate(inner, -numeric::kInf, x, 1e-10) + numeric::integrate(inner, x, numeric::kInf, 1e-10);
}

}  // namespace bfi
