#pragma once

// Sampling models: normal mean with known variance, binomial proportion,
// normal with unknown mean and variance, and the two-arm relative risk.
// Each binds data to a test statistic, a fiducial density and a special
// interval, and the multi-parameter models also build full conditionals.

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "bfi/density.hpp"
#include "bfi/error.hpp"
#include "bfi/fiducial.hpp"
#include "bfi/hypotheses.hpp"
#include "bfi/numeric.hpp"
#include "bfi/pdo.hpp"
#include "bfi/postdata.hpp"
#include "bfi/sampler.hpp"

namespace bfi {

inline double odds(double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw DomainError("odds: p outside [0,1]");
  if (p == 1.0) throw DomainError("odds: infinite at p = 1");
  return p / (1.0 - p);
}

inline double odds_inverse(double o) {
  if (!(o >= 0.0)) throw DomainError("odds_inverse: odds must be nonnegative");
  if (std::isinf(o)) return 1.0;
  return o / (1.0 + o);
}

/// Interval of the unknown proportion whose odds lie within a factor
/// (1 + eps) of odds(pi_other).
inline SpecialInterval special_interval_rr(double pi_other, double eps) {
  if (!(pi_other > 0.0 && pi_other < 1.0)) throw DomainError("special_interval_rr: proportion outside (0,1)");
  if (!(eps >= 0.0)) throw DomainError("special_interval_rr: eps must be nonnegative");
  const double o = odds(pi_other);
  if (eps == 0.0) return {pi_other, pi_other};
  return {odds_inverse(o / (1.0 + eps)), odds_inverse(o * (1.0 + eps))};
}

/// alpha given directly, by a PDO curve of beta, or pinned to P_f(H_S).
struct AlphaAtFloor {};
using AlphaSpec = std::variant<double, PdoCurve, AlphaAtFloor>;

inline double resolve_alpha(const AlphaSpec& spec, double beta, double p_f) {
  if (const auto* a = std::get_if<double>(&spec)) return *a;
  if (const auto* c = std::get_if<PdoCurve>(&spec)) return c->eval(beta);
  return p_f;
}

namespace detail {

/// T = mean of n normal observations with sd sigma; T ~ N(mu, sigma^2/n).
inline TestStatistic normal_mean_statistic(double xbar, double sigma, unsigned n) {
  const double se = sigma / std::sqrt(static_cast<double>(n));
  TestStatistic s;
  s.value = xbar;
  s.cdf = [se](double t, double mu) { return numeric::normal_cdf((t - mu) / se); };
  s.ccdf = [se](double t, double mu) { return numeric::normal_cdf((mu - t) / se); };
  return s;
}

/// Event count out of n with inclusive tails: F(t|pi) = P(Y <= t), F'(t|pi) = P(Y >= t).
inline TestStatistic binomial_statistic(unsigned e, unsigned n) {
  TestStatistic s;
  s.value = e;
  s.discrete = true;
  s.cdf = [n](double t, double p) { return numeric::binom_lower_tail(static_cast<unsigned>(t), n, p); };
  s.ccdf = [n](double t, double p) { return numeric::binom_upper_tail(static_cast<unsigned>(t), n, p); };
  s.point_mass = [n](double t, double p) { return numeric::binom_pmf(static_cast<unsigned>(t), n, p); };
  return s;
}

inline PostDataDensity assemble_with(const AlphaSpec& spec, const ConditionalProblem& prob, const Fill& fill) {
  const OrientedHypotheses o = prob.oriented();
  const double alpha = resolve_alpha(spec, o.p_value, p_f_hs(prob.f_s, o));
  return assemble(alpha, prob.f_s, o, fill);
}

}  // namespace detail

// ---------------------------------------------------------------------------

/// Normal mean mu with known sd; the special interval is [-eps, eps].
struct NormalKnownVarModel {
  double xbar;
  double sigma;
  unsigned n = 1;
  double epsilon = 0.0;

  void validate() const {
    if (!(sigma > 0.0)) throw DomainError("NormalKnownVarModel: sigma must be positive");
    if (n < 1) throw DomainError("NormalKnownVarModel: n must be at least 1");
    if (!(epsilon >= 0.0)) throw DomainError("NormalKnownVarModel: epsilon must be nonnegative");
  }

  double standard_error() const { return sigma / std::sqrt(static_cast<double>(n)); }
  SpecialInterval interval() const { return {-epsilon, epsilon}; }
  TestStatistic statistic() const { return detail::normal_mean_statistic(xbar, sigma, n); }
  FiducialDensity fiducial() const { return normal_density(xbar, standard_error()); }

  ConditionalProblem problem() const {
    validate();
    return {sigma, fiducial(), statistic(), interval()};
  }

  OrientedHypotheses oriented() const { return problem().oriented(); }

  IntervalShape default_h() const { return IntervalShape::beta(interval(), 4.0, 4.0); }

  PostDataDensity posterior(const AlphaSpec& alpha, const Fill& fill) const {
    return detail::assemble_with(alpha, problem(), fill);
  }
};

/// Binomial proportion with e successes in n trials; interval [0.5 - eps, 0.5 + eps].
struct BinomialModel {
  unsigned e;
  unsigned n;
  double epsilon;

  void validate() const {
    if (e > n) throw DomainError("BinomialModel: e must not exceed n");
    if (n == 0) throw DomainError("BinomialModel: n must be positive");
    if (!(epsilon >= 0.0 && epsilon < 0.5)) throw DomainError("BinomialModel: interval must lie inside (0,1)");
  }

  SpecialInterval interval() const { return {0.5 - epsilon, 0.5 + epsilon}; }
  TestStatistic statistic() const { return detail::binomial_statistic(e, n); }
  FiducialDensity fiducial(const LpdUniform& lpd = {}) const { return jeffreys_binomial_density(e, n, lpd); }

  ConditionalProblem problem() const {
    validate();
    return {0.0, fiducial(), statistic(), interval()};
  }

  OrientedHypotheses oriented() const { return problem().oriented(); }

  IntervalShape default_h() const { return IntervalShape::beta(interval(), 4.0, 4.0); }

  PostDataDensity posterior(const AlphaSpec& alpha, const Fill& fill) const {
    return detail::assemble_with(alpha, problem(), fill);
  }
};

/// Normal sample with unknown mean mu and sd sigma, stored as (n, xbar, s^2).
/// State order for the conditionals is {mu, sigma}.
struct NormalUnknownVarModel {
  unsigned n;
  double xbar;
  double s2;
  double epsilon;

  static constexpr std::size_t kMu = 0;
  static constexpr std::size_t kSigma = 1;

  static NormalUnknownVarModel from_samples(const std::vector<double>& xs, double epsilon) {
    if (xs.size() < 2) throw DomainError("NormalUnknownVarModel: need at least two observations");
    double m = 0.0;
    for (double x : xs) m += x;
    m /= static_cast<double>(xs.size());
    double ss = 0.0;
    for (double x : xs) ss += (x - m) * (x - m);
    return {static_cast<unsigned>(xs.size()), m, ss / static_cast<double>(xs.size() - 1), epsilon};
  }

  void validate() const {
    if (n < 2) throw DomainError("NormalUnknownVarModel: n must be at least 2");
    if (!(s2 > 0.0)) throw DomainError("NormalUnknownVarModel: s2 must be positive");
    if (!(epsilon >= 0.0)) throw DomainError("NormalUnknownVarModel: epsilon must be nonnegative");
  }

  SpecialInterval interval() const { return {-epsilon, epsilon}; }

  /// sum (x_i - mu)^2 from the summaries.
  double sum_sq(double mu) const { return (n - 1.0) * s2 + n * (xbar - mu) * (xbar - mu); }

  /// f_S(mu | sigma, x) together with T = xbar.
  ConditionalProblem mu_problem(double sigma) const {
    if (!(sigma > 0.0)) throw DomainError("NormalUnknownVarModel: sigma must be positive");
    return {sigma, normal_density(xbar, sigma / std::sqrt(static_cast<double>(n))),
            detail::normal_mean_statistic(xbar, sigma, n), interval()};
  }

  /// f_S(sigma | mu, x): sigma^2 ~ Scale-inv-chi2(n, sum (x_i - mu)^2 / n).
  FiducialDensity sigma_conditional(double mu) const { return sd_from_scaled_inv_chi2_density(n, sum_sq(mu) / n); }

  ConditionalFamily mu_family() const {
    validate();
    NormalUnknownVarModel self = *this;
    return {"sigma", 1e-3, 1e12, true, [self](double sigma) { return self.mu_problem(sigma); }};
  }

  IntervalShape default_h() const { return IntervalShape::beta(interval(), 4.0, 4.0); }

  std::vector<double> default_initial() const { return {xbar, std::sqrt(s2)}; }
};

enum class Arm { treatment, control };

inline const char* to_string(Arm a) { return a == Arm::treatment ? "treatment" : "control"; }

/// Two binomial arms; the special interval for one arm's proportion is the
/// odds band of the other arm's proportion. State order is {pi_t, pi_c}.
struct RelativeRiskModel {
  unsigned e_t;
  unsigned n_t;
  unsigned e_c;
  unsigned n_c;
  double epsilon;

  static constexpr std::size_t kPiT = 0;
  static constexpr std::size_t kPiC = 1;

  void validate() const {
    if (e_t > n_t || e_c > n_c) throw DomainError("RelativeRiskModel: events exceed totals");
    if (n_t == 0 || n_c == 0) throw DomainError("RelativeRiskModel: arm totals must be positive");
    if (!(epsilon > 0.0)) throw DomainError("RelativeRiskModel: epsilon must be positive");
  }

  unsigned events(Arm a) const { return a == Arm::treatment ? e_t : e_c; }
  unsigned total(Arm a) const { return a == Arm::treatment ? n_t : n_c; }

  FiducialDensity fiducial(Arm a) const { return jeffreys_binomial_density(events(a), total(a)); }

  /// Problem for the proportion of `arm` with the other arm's proportion fixed.
  ConditionalProblem problem(Arm arm, double pi_other) const {
    return {pi_other, fiducial(arm), detail::binomial_statistic(events(arm), total(arm)),
            special_interval_rr(pi_other, epsilon)};
  }

  ConditionalFamily family(Arm arm) const {
    validate();
    RelativeRiskModel self = *this;
    return {arm == Arm::treatment ? "pi_c" : "pi_t", 1e-4, 1.0 - 1e-4, false,
            [self, arm](double pi_other) { return self.problem(arm, pi_other); }};
  }

  std::vector<double> default_initial() const {
    return {static_cast<double>(e_t) / n_t, static_cast<double>(e_c) / n_c};
  }
};

struct RrOneSided {
  Direction direction;
  double beta;
  double beta0;
  double beta1;
  SpecialInterval interval;
};

/// beta0 = P(E <= e | pi_0) and beta1 = P(E >= e | pi_1) at the interval
/// endpoints; lower with beta0 when beta0 <= beta1, else upper with beta1.
inline RrOneSided rr_one_sided_p(const RelativeRiskModel& m, double pi_other, Arm arm = Arm::treatment) {
  m.validate();
  const ConditionalProblem p = m.problem(arm, pi_other);
  const double b0 = p.stat.F(p.interval.lo());
  const double b1 = p.stat.Fprime(p.interval.hi());
  const OrientedHypotheses o = p.oriented();
  return {o.direction, o.p_value, b0, b1, p.interval};
}

/// Power PDO curve (0.92 beta)^0.6 used by both arms by default.
inline PdoCurve default_rr_pdo() { return PdoCurve::power(0.92, 0.6, 1.0); }

// ---------------------------------------------------------------------------
// Full conditionals

/// {p(mu | sigma, x), f_S(sigma | mu, x)}: the first is the post-data
/// assembly, re-derived at every sigma, the second is drawn exactly.
inline ConditionalSet full_conditionals(const NormalUnknownVarModel& m, const AlphaSpec& alpha,
                                        std::optional<IntervalShape> h = {}) {
  m.validate();
  const Fill fill = m.epsilon > 0.0 ? Fill::calibrated(h ? *h : m.default_h()) : Fill::uniform();
  ConditionalSet cs;
  cs.push_back({"mu", [m, alpha, fill](const std::vector<double>& s) -> BoundConditional {
                  const PostDataDensity p = detail::assemble_with(alpha, m.mu_problem(s[NormalUnknownVarModel::kSigma]), fill);
                  return DensityTarget{[p](double mu) { return p.pdf(mu); }};
                }});
  cs.push_back({"sigma", [m](const std::vector<double>& s) -> BoundConditional {
                  const FiducialDensity f = m.sigma_conditional(s[NormalUnknownVarModel::kMu]);
                  return DirectDraw{[f](RngStream& rng) { return f.sample(rng); }};
                }});
  return cs;
}

/// {f_S(mu | sigma, x), f_S(sigma | mu, x)}, both drawn exactly. These are
/// compatible: the joint has sigma^2 ~ Scale-inv-chi2(n - 1, s^2).
inline ConditionalSet compatible_conditionals(const NormalUnknownVarModel& m) {
  m.validate();
  ConditionalSet cs;
  cs.push_back({"mu", [m](const std::vector<double>& s) -> BoundConditional {
                  const FiducialDensity f = m.mu_problem(s[NormalUnknownVarModel::kSigma]).f_s;
                  return DirectDraw{[f](RngStream& rng) { return f.sample(rng); }};
                }});
  cs.push_back({"sigma", [m](const std::vector<double>& s) -> BoundConditional {
                  const FiducialDensity f = m.sigma_conditional(s[NormalUnknownVarModel::kMu]);
                  return DirectDraw{[f](RngStream& rng) { return f.sample(rng); }};
                }});
  return cs;
}

/// p(pi_arm | pi_other, x) with Jeffreys f_S, log-odds Beta(a, b) shape and
/// the given alpha specification.
inline PostDataDensity rr_conditional(const RelativeRiskModel& m, Arm arm, double pi_other, const AlphaSpec& alpha,
                                      double h_a = 4.0, double h_b = 4.0) {
  const ConditionalProblem prob = m.problem(arm, pi_other);
  return detail::assemble_with(alpha, prob, Fill::calibrated(IntervalShape::log_odds_beta(prob.interval, h_a, h_b)));
}

/// {p(pi_t | pi_c, x), p(pi_c | pi_t, x)}, both sampled by Metropolis.
inline ConditionalSet full_conditionals(const RelativeRiskModel& m, const AlphaSpec& alpha = default_rr_pdo(),
                                        double h_a = 4.0, double h_b = 4.0) {
  m.validate();
  ConditionalSet cs;
  cs.push_back({"pi_t", [m, alpha, h_a, h_b](const std::vector<double>& s) -> BoundConditional {
                  const PostDataDensity p = rr_conditional(m, Arm::treatment, s[RelativeRiskModel::kPiC], alpha, h_a, h_b);
                  return DensityTarget{[p](double x) { return p.pdf(x); }};
                }});
  cs.push_back({"pi_c", [m, alpha, h_a, h_b](const std::vector<double>& s) -> BoundConditional {
                  const PostDataDensity p = rr_conditional(m, Arm::control, s[RelativeRiskModel::kPiT], alpha, h_a, h_b);
                  return DensityTarget{[p](double x) { return p.pdf(x); }};
                }});
  return cs;
}

// ---------------------------------------------------------------------------
// Comparators

struct LogRrConfidence {
  double center;
  double variance;
  double sd;
  /// Density of RR itself (log-normal).
  FiducialDensity density;
};

/// log RR ~ N(log((e_t/n_t)/(e_c/n_c)), 1/e_t - 1/n_t + 1/e_c - 1/n_c).
inline LogRrConfidence confidence_density_log_rr(const RelativeRiskModel& m) {
  if (m.e_t == 0 || m.e_c == 0 || m.n_t == 0 || m.n_c == 0)
    throw DomainError("confidence_density_log_rr: undefined with a zero count");
  const double center = std::log((static_cast<double>(m.e_t) / m.n_t) / (static_cast<double>(m.e_c) / m.n_c));
  const double var = 1.0 / m.e_t - 1.0 / m.n_t + 1.0 / m.e_c - 1.0 / m.n_c;
  if (!(var > 0.0)) throw DomainError("confidence_density_log_rr: nonpositive variance (all events)");
  const double sd = std::sqrt(var);
  return {center, var, sd, lognormal_density(center, sd)};
}

/// Posterior probability of mu = 0 under prior mass p0 at 0 and N(0, sigma0^2)
/// otherwise, for one observation x ~ N(mu, sigma^2).
inline double bayes_spike_slab(double x, double sigma, double sigma0, double p0) {
  if (!(sigma > 0.0 && sigma0 > 0.0)) throw DomainError("bayes_spike_slab: sds must be positive");
  if (!(p0 > 0.0 && p0 < 1.0)) throw DomainError("bayes_spike_slab: p0 must lie in (0,1)");
  const double slab_sd = std::sqrt(sigma * sigma + sigma0 * sigma0);
  // Ratio form avoids underflow of both densities for large |x|.
  const double log_ratio = std::log(slab_sd / sigma) - 0.5 * x * x / (sigma * sigma) + 0.5 * x * x / (slab_sd * slab_sd);
  const double odds0 = p0 / (1.0 - p0) * std::exp(log_ratio);
  return std::isinf(odds0) ? 1.0 : odds0 / (1.0 + odds0);
}

}  // namespace bfi
