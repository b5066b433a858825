#pragma once

// Hand-rolled generators for the property tests. Every case is drawn from a
// seeded RngStream so failures replay exactly.

#include <cmath>
#include <cstdint>
#include <string>

#include "bfi/bfi.hpp"

namespace bfi::prop {

class Gen {
 public:
  explicit Gen(std::uint64_t seed, std::uint64_t stream = 0) : rng_(seed, stream) {}

  double uniform(double a, double b) { return a + (b - a) * rng_.uniform(); }
  double log_uniform(double a, double b) { return std::exp(uniform(std::log(a), std::log(b))); }
  unsigned integer(unsigned lo, unsigned hi) {
    return lo + static_cast<unsigned>(std::floor(rng_.uniform() * (hi - lo + 1)));
  }
  bool coin() { return rng_.uniform() < 0.5; }
  RngStream& rng() { return rng_; }

 private:
  RngStream rng_;
};

/// An admissible single-parameter assembly problem: f_S, statistic, interval
/// and an alpha at or above the floor.
struct AssemblyCase {
  std::string label;
  ConditionalProblem prob;
  double alpha;
};

inline AssemblyCase normal_case(Gen& g) {
  const double xbar = g.uniform(-3.0, 3.0);
  const double sigma = g.log_uniform(0.3, 3.0);
  const double eps = g.log_uniform(0.01, 0.4);
  const double centre = g.uniform(-1.0, 1.0);
  const ConditionalProblem p{sigma, normal_density(xbar, sigma), detail::normal_mean_statistic(xbar, sigma, 1),
                             SpecialInterval(centre - eps, centre + eps)};
  const double floor = p_f_hs(p.f_s, p.oriented());
  const double alpha = floor + g.uniform(0.0, 1.0) * (std::min(0.95, floor + 0.5) - floor);
  return {"normal xbar=" + std::to_string(xbar) + " sigma=" + std::to_string(sigma) + " [" +
              std::to_string(centre - eps) + "," + std::to_string(centre + eps) + "] alpha=" + std::to_string(alpha),
          p, alpha};
}

inline AssemblyCase binomial_case(Gen& g) {
  const unsigned n = g.integer(5, 60);
  const unsigned e = g.integer(1, n - 1);
  const double centre = g.uniform(0.15, 0.85);
  const double eps = g.uniform(0.005, 0.08);
  const ConditionalProblem p{0.0, jeffreys_binomial_density(e, n), detail::binomial_statistic(e, n),
                             SpecialInterval(centre - eps, centre + eps)};
  const double floor = p_f_hs(p.f_s, p.oriented());
  const double alpha = floor + g.uniform(0.0, 1.0) * (std::min(0.95, floor + 0.5) - floor);
  return {"binomial " + std::to_string(e) + "/" + std::to_string(n) + " [" + std::to_string(centre - eps) + "," +
              std::to_string(centre + eps) + "] alpha=" + std::to_string(alpha),
          p, alpha};
}

/// Redraws until the floor leaves room for alpha below 0.95.
inline AssemblyCase assembly_case(Gen& g) {
  for (;;) {
    AssemblyCase c = g.coin() ? normal_case(g) : binomial_case(g);
    if (p_f_hs(c.prob.f_s, c.prob.oriented()) < 0.9) return c;
  }
}

}  // namespace bfi::prop
