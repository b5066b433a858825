#pragma once

// Convergence and scan-order diagnostics for chain output.

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include "bfi/error.hpp"
#include "bfi/numeric.hpp"
#include "bfi/sampler.hpp"

namespace bfi {

namespace detail {

inline double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

inline double variance(const std::vector<double>& v) {
  const double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size() - 1);
}

}  // namespace detail

/// Potential scale reduction sqrt(1 + B / (n W)) for one parameter, with W
/// the mean within-chain variance and B / n the variance of chain means.
inline double gelman_rubin(const std::vector<ChainOutput>& chains, std::size_t param) {
  if (chains.size() < 2) throw DomainError("gelman_rubin: need at least two chains");
  const std::size_t n = chains[0].n_rows();
  if (n < 10) throw DomainError("gelman_rubin: chains must have at least 10 recorded samples");
  std::vector<double> means;
  double w = 0.0;
  for (const auto& c : chains) {
    if (c.n_rows() != n) throw DomainError("gelman_rubin: chains must have equal length");
    if (param >= c.n_params) throw DomainError("gelman_rubin: parameter index out of range");
    const auto col = c.column(param);
    means.push_back(detail::mean(col));
    w += detail::variance(col);
  }
  w /= static_cast<double>(chains.size());
  if (!(w > 0.0)) throw DomainError("gelman_rubin: zero within-chain variance");
  const double b_over_n = detail::variance(means);
  return std::sqrt(1.0 + b_over_n / w);
}

/// Effective sample size n / (1 + 2 sum rho_k), truncating the sum at the
/// first non-positive pair of autocorrelations (initial positive sequence).
inline double effective_sample_size(const std::vector<double>& x) {
  const std::size_t n = x.size();
  if (n < 4) return static_cast<double>(n);
  const double m = detail::mean(x);
  double c0 = 0.0;
  for (double v : x) c0 += (v - m) * (v - m);
  c0 /= static_cast<double>(n);
  if (!(c0 > 0.0)) return static_cast<double>(n);
  auto rho = [&](std::size_t lag) {
    double s = 0.0;
    for (std::size_t i = 0; i + lag < n; ++i) s += (x[i] - m) * (x[i + lag] - m);
    return s / static_cast<double>(n) / c0;
  };
  double tau = -1.0;  // 1 + 2 sum_{k>=1} rho_k = -1 + 2 sum_{pairs} (rho_2m + rho_2m+1)
  for (std::size_t lag = 0; lag + 1 < n / 2; lag += 2) {
    const double pair = rho(lag) + rho(lag + 1);
    if (!(pair > 0.0)) break;
    tau += 2.0 * pair;
  }
  tau = std::max(tau, 1.0 / static_cast<double>(n));
  return std::min(static_cast<double>(n), static_cast<double>(n) / tau);
}

/// Survival function of the Kolmogorov distribution, Q(z) = P(K > z).
inline double kolmogorov_sf(double z) {
  if (z <= 0.0) return 1.0;
  if (z < 1.18) {
    // Theta-function form; converges fast for small z.
    const double pi2 = std::numbers::pi * std::numbers::pi;
    double s = 0.0;
    for (int j = 1; j <= 20; ++j) {
      const double k = 2.0 * j - 1.0;
      s += std::exp(-k * k * pi2 / (8.0 * z * z));
    }
    return 1.0 - std::sqrt(2.0 * std::numbers::pi) / z * s;
  }
  double s = 0.0;
  for (int j = 1; j <= 100; ++j) {
    const double term = std::exp(-2.0 * j * j * z * z);
    s += (j % 2 ? 1.0 : -1.0) * term;
    if (term < 1e-18) break;
  }
  return std::clamp(2.0 * s, 0.0, 1.0);
}

struct KsResult {
  double distance;
  double p_value;
};

/// sup |F_n(x) - F(x)| for a sample against a continuous CDF.
inline double ks_distance(std::vector<double> xs, const std::function<double(double)>& cdf) {
  if (xs.empty()) throw DomainError("ks_distance: empty sample");
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double d = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double f = cdf(xs[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  return d;
}

/// Two-sample Kolmogorov-Smirnov test. The p value uses effective sizes
/// (defaulting to the sample sizes) so autocorrelated chains can be compared.
inline KsResult ks_two_sample(std::vector<double> a, std::vector<double> b, double n_eff_a = 0.0,
                              double n_eff_b = 0.0) {
  if (a.empty() || b.empty()) throw DomainError("ks_two_sample: empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::fabs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  const double ea = n_eff_a > 0.0 ? n_eff_a : na;
  const double eb = n_eff_b > 0.0 ? n_eff_b : nb;
  const double ne = ea * eb / (ea + eb);
  const double sn = std::sqrt(ne);
  return {d, kolmogorov_sf((sn + 0.12 + 0.11 / sn) * d)};
}

inline double correlation(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 3) throw DomainError("correlation: need equal sizes of at least 3");
  const double mx = detail::mean(x);
  const double my = detail::mean(y);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (!(sxx > 0.0 && syy > 0.0)) throw DomainError("correlation: zero variance");
  return sxy / std::sqrt(sxx * syy);
}

struct CorrelationComparison {
  std::size_t i;
  std::size_t j;
  double r_a;
  double r_b;
  double z;
  double p_value;
};

struct MarginalComparison {
  std::string name;
  KsResult ks;
  double ess_a;
  double ess_b;
};

struct ScanCompareOptions {
  /// Two-sided significance level.
  double significance = 0.01;
  /// KS distances at or below these classify as negligible / small.
  double negligible_distance = 0.01;
  double small_distance = 0.05;
  /// Independent runs per order (streams 0..runs-1), aggregated.
  std::size_t runs = 1;
  /// Give the second order its own RNG streams. With false both orders replay
  /// the same streams, so identical orders give identical output.
  bool independent_streams = true;
};

struct ScanComparison {
  std::vector<MarginalComparison> marginals;
  std::vector<CorrelationComparison> correlations;
  /// "undetectable": no test rejects; otherwise "negligible", "small" or
  /// "large" by the largest KS distance.
  std::string classification;
  bool significant = false;
};

namespace detail {

inline std::vector<ChainOutput> run_order(const ConditionalSet& cs, const GibbsConfig& cfg, const ScanOrder& order,
                                          std::size_t runs) {
  std::vector<ChainOutput> out;
  for (std::size_t r = 0; r < runs; ++r) {
    GibbsConfig c = cfg;
    c.stream = cfg.stream + r;
    out.push_back(gibbs_run(cs, c, order));
  }
  return out;
}

inline std::vector<double> pooled_column(const std::vector<ChainOutput>& chains, std::size_t j) {
  std::vector<double> all;
  for (const auto& c : chains) {
    const auto col = c.column(j);
    all.insert(all.end(), col.begin(), col.end());
  }
  return all;
}

inline double pooled_ess(const std::vector<ChainOutput>& chains, std::size_t j) {
  double e = 0.0;
  for (const auto& c : chains) e += effective_sample_size(c.column(j));
  return e;
}

}  // namespace detail

/// Compares the stationary output of two scanning orders: per-parameter
/// two-sample KS tests and Fisher-z tests on pairwise correlations, both with
/// effective sample sizes in place of raw counts.
inline ScanComparison compare_chains(const std::vector<ChainOutput>& a, const std::vector<ChainOutput>& b,
                                     const ScanCompareOptions& opt = {}) {
  if (a.empty() || b.empty()) throw DomainError("compare_chains: no chains");
  const std::size_t k = a[0].n_params;
  ScanComparison rep;
  double max_d = 0.0;
  std::vector<std::vector<double>> cols_a, cols_b;
  std::vector<double> ess_a, ess_b;
  for (std::size_t j = 0; j < k; ++j) {
    cols_a.push_back(detail::pooled_column(a, j));
    cols_b.push_back(detail::pooled_column(b, j));
    ess_a.push_back(detail::pooled_ess(a, j));
    ess_b.push_back(detail::pooled_ess(b, j));
    MarginalComparison m{a[0].names[j], ks_two_sample(cols_a[j], cols_b[j], ess_a[j], ess_b[j]), ess_a[j], ess_b[j]};
    max_d = std::max(max_d, m.ks.distance);
    if (m.ks.p_value < opt.significance) rep.significant = true;
    rep.marginals.push_back(m);
  }
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = i + 1; j < k; ++j) {
      CorrelationComparison c{i, j, correlation(cols_a[i], cols_a[j]), correlation(cols_b[i], cols_b[j]), 0.0, 1.0};
      const double na = std::min(ess_a[i], ess_a[j]);
      const double nb = std::min(ess_b[i], ess_b[j]);
      const double se = std::sqrt(1.0 / std::max(na - 3.0, 1.0) + 1.0 / std::max(nb - 3.0, 1.0));
      c.z = (std::atanh(std::clamp(c.r_a, -0.999999, 0.999999)) - std::atanh(std::clamp(c.r_b, -0.999999, 0.999999))) / se;
      c.p_value = 2.0 * numeric::normal_cdf(-std::fabs(c.z));
      if (c.p_value < opt.significance) rep.significant = true;
      rep.correlations.push_back(c);
    }
  }
  if (!rep.significant) {
    rep.classification = "undetectable";
  } else if (max_d <= opt.negligible_distance) {
    rep.classification = "negligible";
  } else if (max_d <= opt.small_distance) {
    rep.classification = "small";
  } else {
    rep.classification = "large";
  }
  return rep;
}

inline ScanComparison scan_order_compare(const ConditionalSet& cs, const GibbsConfig& cfg, const ScanOrder& order_a,
                                         const ScanOrder& order_b, const ScanCompareOptions& opt = {}) {
  if (order_a.kind() != ScanOrder::Kind::fixed || order_b.kind() != ScanOrder::Kind::fixed)
    throw DomainError("scan_order_compare: both orders must be fixed");
  const auto a = detail::run_order(cs, cfg, order_a, opt.runs);
  GibbsConfig cfg_b = cfg;
  if (opt.independent_streams) cfg_b.stream = cfg.stream + opt.runs;
  return compare_chains(a, detail::run_order(cs, cfg_b, order_b, opt.runs), opt);
}

}  // namespace bfi
