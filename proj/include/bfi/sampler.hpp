#pragma once

// Metropolis-within-Gibbs over a set of full conditional densities, with
// fixed and uniform-random scanning orders, plus importance sampling for
// single-parameter densities.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <ostream>
#include <string>
#include <variant>
#include <vector>

#include "bfi/density.hpp"
#include "bfi/error.hpp"
#include "bfi/numeric.hpp"
#include "bfi/rng.hpp"

namespace bfi {

/// Conditional that can be sampled exactly.
struct DirectDraw {
  std::function<double(RngStream&)> draw;
};

/// Conditional known up to a constant; zero outside its support. Sampled by
/// a random-walk Metropolis step.
struct DensityTarget {
  std::function<double(double)> density;
};

using BoundConditional = std::variant<DirectDraw, DensityTarget>;

/// theta_j | theta_{-j}, x. bind receives the full current state and returns
/// the conditional for parameter j at the other coordinates.
struct FullConditional {
  std::string name;
  std::function<BoundConditional(const std::vector<double>&)> bind;
};

using ConditionalSet = std::vector<FullConditional>;

class ScanOrder {
 public:
  enum class Kind { random, fixed };

  static ScanOrder random() { return ScanOrder(Kind::random, {}); }
  static ScanOrder fixed(std::vector<std::size_t> permutation) { return ScanOrder(Kind::fixed, std::move(permutation)); }

  Kind kind() const noexcept { return kind_; }
  const std::vector<std::size_t>& permutation() const noexcept { return perm_; }

  void validate(std::size_t k) const {
    if (kind_ == Kind::random) return;
    std::vector<bool> seen(k, false);
    if (perm_.size() != k) throw DomainError("ScanOrder: permutation must list every parameter once");
    for (std::size_t j : perm_) {
      if (j >= k || seen[j]) throw DomainError("ScanOrder: permutation must list every parameter once");
      seen[j] = true;
    }
  }

  std::string to_string() const {
    if (kind_ == Kind::random) return "random";
    std::string s = "fixed(";
    for (std::size_t i = 0; i < perm_.size(); ++i) s += (i ? "," : "") + std::to_string(perm_[i]);
    return s + ")";
  }

 private:
  ScanOrder(Kind k, std::vector<std::size_t> p) : kind_(k), perm_(std::move(p)) {}

  Kind kind_;
  std::vector<std::size_t> perm_;
};

struct GibbsConfig {
  std::size_t n_samples = 10000;
  std::size_t burn_in = 1000;
  std::size_t thin = 1;
  std::uint64_t seed = 1;
  std::uint64_t stream = 0;
  std::vector<double> initial;
  /// Random-walk scales; empty means 1 for every parameter.
  std::vector<double> proposal_scales;
  /// Tune scales during burn-in toward 20-50% acceptance, then freeze them.
  bool tune = true;
  /// Updates of one parameter after which an all-rejected window is reported.
  std::size_t diagnostic_window = 1000;

  void validate(std::size_t k) const {
    if (n_samples == 0) throw DomainError("GibbsConfig: n_samples must be positive");
    if (thin == 0) throw DomainError("GibbsConfig: thin must be at least 1");
    if (initial.size() != k) throw DomainError("GibbsConfig: one initial value per parameter required");
    for (double v : initial)
      if (!std::isfinite(v)) throw DomainError("GibbsConfig: initial values must be finite");
    if (!proposal_scales.empty() && proposal_scales.size() != k)
      throw DomainError("GibbsConfig: one proposal scale per parameter required");
    for (double s : proposal_scales)
      if (!(s > 0.0)) throw DomainError("GibbsConfig: proposal scales must be positive");
  }
};

struct ChainOutput {
  std::vector<std::string> names;
  /// Row-major: one row per recorded transition.
  std::vector<double> samples;
  std::size_t n_params = 0;
  std::vector<double> acceptance_rates;
  std::vector<double> final_scales;
  /// Post-burn-in count of updates per parameter.
  std::vector<std::size_t> updates;
  std::size_t bind_failures = 0;
  ScanOrder scan = ScanOrder::random();
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
  std::vector<std::string> warnings;

  std::size_t n_rows() const { return n_params ? samples.size() / n_params : 0; }
  double at(std::size_t row, std::size_t j) const { return samples[row * n_params + j]; }

  std::vector<double> column(std::size_t j) const {
    std::vector<double> c(n_rows());
    for (std::size_t r = 0; r < c.size(); ++r) c[r] = at(r, j);
    return c;
  }
};

struct MetropolisResult {
  double value;
  bool accepted;
};

/// Random-walk Metropolis step with a normal proposal. A proposal whose
/// density cannot be evaluated counts as density 0.
template <class Target>
MetropolisResult metropolis_step(const Target& target, double current, double scale, RngStream& rng,
                                 double current_density = std::nan("")) {
  if (std::isnan(current_density)) current_density = target(current);
  const double proposal = current + scale * rng.normal();
  double d;
  try {
    d = target(proposal);
  } catch (const Error&) {
    d = 0.0;
  }
  if (!(d > 0.0) || !std::isfinite(d)) {
    rng.uniform();  // keep the stream aligned whether or not the proposal is evaluable
    return {current, false};
  }
  const double u = rng.uniform();
  // A current state of density 0 (possible right after another coordinate
  // moved) accepts any evaluable proposal.
  if (!(current_density > 0.0) || u * current_density < d) return {proposal, true};
  return {current, false};
}

namespace detail {

struct ParamStats {
  std::size_t proposed = 0;
  std::size_t accepted = 0;
  std::size_t window_proposed = 0;
  std::size_t window_accepted = 0;
  std::size_t tune_proposed = 0;
  std::size_t tune_accepted = 0;
  bool warned = false;
};

}  // namespace detail

/// Runs one chain. Fixed scans record once per full sweep; random scans pick
/// one parameter with probability 1/k per transition and record after it.
inline ChainOutput gibbs_run(const ConditionalSet& conditionals, const GibbsConfig& config, const ScanOrder& scan) {
  const std::size_t k = conditionals.size();
  if (k == 0) throw DomainError("gibbs_run: empty conditional set");
  config.validate(k);
  scan.validate(k);

  RngStream rng(config.seed, config.stream);
  std::vector<double> state = config.initial;
  std::vector<double> scales = config.proposal_scales.empty() ? std::vector<double>(k, 1.0) : config.proposal_scales;
  std::vector<detail::ParamStats> stats(k);

  ChainOutput out;
  out.n_params = k;
  out.scan = scan;
  out.seed = config.seed;
  out.stream = config.stream;
  out.updates.assign(k, 0);
  for (const auto& c : conditionals) out.names.push_back(c.name);
  out.samples.reserve(config.n_samples * k);

  constexpr std::size_t kTuneBatch = 50;
  bool burning = true;

  auto update = [&](std::size_t j) {
    auto& st = stats[j];
    if (!burning) ++out.updates[j];
    BoundConditional bound;
    try {
      bound = conditionals[j].bind(state);
    } catch (const Error&) {
      // Cannot construct theta_j | theta_{-j} here (e.g. a floor violation):
      // the coordinate stays put and the update counts as a rejection.
      if (!burning) {
        ++out.bind_failures;
        ++st.proposed;
        ++st.window_proposed;
      }
      return;
    }
    if (auto* dd = std::get_if<DirectDraw>(&bound)) {
      state[j] = dd->draw(rng);
      if (!burning) {
        ++st.proposed;
        ++st.accepted;
      }
      return;
    }
    const auto& target = std::get<DensityTarget>(bound).density;
    double dc;
    try {
      dc = target(state[j]);
    } catch (const Error&) {
      dc = 0.0;
    }
    const MetropolisResult r = metropolis_step(target, state[j], scales[j], rng, dc);
    state[j] = r.value;
    if (burning) {
      ++st.tune_proposed;
      st.tune_accepted += r.accepted;
      if (config.tune && st.tune_proposed == kTuneBatch) {
        const double rate = static_cast<double>(st.tune_accepted) / kTuneBatch;
        if (rate < 0.2) scales[j] *= rate < 0.05 ? 0.5 : 0.8;
        if (rate > 0.5) scales[j] *= rate > 0.8 ? 2.0 : 1.25;
        st.tune_proposed = st.tune_accepted = 0;
      }
      return;
    }
    ++st.proposed;
    ++st.window_proposed;
    st.accepted += r.accepted;
    st.window_accepted += r.accepted;
    if (st.window_proposed == config.diagnostic_window) {
      if (st.window_accepted == 0 && !st.warned) {
        out.warnings.push_back("zero acceptance for " + conditionals[j].name + " over a window of " +
                               std::to_string(config.diagnostic_window) + " updates");
        st.warned = true;
      }
      st.window_proposed = st.window_accepted = 0;
    }
  };

  auto transition = [&]() {
    if (scan.kind() == ScanOrder::Kind::fixed) {
      for (std::size_t j : scan.permutation()) update(j);
    } else {
      const std::size_t j = static_cast<std::size_t>(rng.uniform() * static_cast<double>(k));
      update(std::min(j, k - 1));
    }
  };

  for (std::size_t t = 0; t < config.burn_in; ++t) transition();
  burning = false;
  while (out.samples.size() < config.n_samples * k) {
    for (std::size_t s = 0; s < config.thin; ++s) transition();
    out.samples.insert(out.samples.end(), state.begin(), state.end());
  }

  out.final_scales = scales;
  for (const auto& st : stats)
    out.acceptance_rates.push_back(st.proposed ? static_cast<double>(st.accepted) / st.proposed : std::nan(""));
  return out;
}

/// Streams a chain as CSV: comment header with seed and scan, then one row per
/// recorded transition.
inline void write_chain_csv(std::ostream& os, const ChainOutput& chain) {
  os << "# seed=" << chain.seed << " stream=" << chain.stream << " scan=" << chain.scan.to_string() << "\n";
  for (std::size_t j = 0; j < chain.n_params; ++j) os << (j ? "," : "") << chain.names[j];
  os << "\n";
  os.precision(17);
  for (std::size_t r = 0; r < chain.n_rows(); ++r) {
    for (std::size_t j = 0; j < chain.n_params; ++j) os << (j ? "," : "") << chain.at(r, j);
    os << "\n";
  }
}

// ---------------------------------------------------------------------------
// Importance sampling

struct WeightedSample {
  std::vector<double> values;
  /// Self-normalized: sums to 1.
  std::vector<double> weights;
  double ess = 0.0;
  std::vector<std::string> warnings;
};

/// Draws n values from f_base and weights them by weight(theta), typically
/// target density / f_base density.
template <class Weight>
WeightedSample importance_sample(const FiducialDensity& f_base, const Weight& weight, std::size_t n, RngStream& rng) {
  if (n == 0) throw DomainError("importance_sample: n must be positive");
  WeightedSample ws;
  ws.values.resize(n);
  ws.weights.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    ws.values[i] = f_base.sample(rng);
    const double w = weight(ws.values[i]);
    if (!(w >= 0.0) || !std::isfinite(w)) throw DomainError("importance_sample: weight must be finite and nonnegative");
    ws.weights[i] = w;
  }
  // Neumaier-compensated totals; the weights can span many magnitudes.
  double sum = 0.0, comp = 0.0, sum2 = 0.0;
  for (double w : ws.weights) {
    const double t = sum + w;
    comp += std::fabs(sum) >= std::fabs(w) ? (sum - t) + w : (w - t) + sum;
    sum = t;
  }
  sum += comp;
  if (!(sum > 0.0)) throw DomainError("importance_sample: all weights are zero");
  for (double& w : ws.weights) {
    w /= sum;
    sum2 += w * w;
  }
  ws.ess = 1.0 / sum2;
  if (ws.ess < 0.01 * static_cast<double>(n))
    ws.warnings.push_back("effective sample size " + std::to_string(ws.ess) + " is below 1% of n");
  return ws;
}

/// Weighted histogram on [lo, hi] with `bins` equal bins, as bin-center
/// density values (total weight outside [lo, hi] is dropped).
inline numeric::GridDensity weighted_histogram(const WeightedSample& ws, double lo, double hi, std::size_t bins) {
  if (!(hi > lo) || bins == 0) throw DomainError("weighted_histogram: bad range");
  const double w = (hi - lo) / static_cast<double>(bins);
  numeric::GridDensity g;
  g.lo = lo;
  g.hi = hi;
  g.values.assign(bins, 0.0);
  for (std::size_t b = 0; b < bins; ++b) g.points.push_back(lo + (static_cast<double>(b) + 0.5) * w);
  for (std::size_t i = 0; i < ws.values.size(); ++i) {
    const double x = ws.values[i];
    if (x < lo || x > hi) continue;
    const auto b = std::min(bins - 1, static_cast<std::size_t>((x - lo) / w));
    g.values[b] += ws.weights[i];
  }
  for (double& v : g.values) v /= w;
  return g;
}

template <class Weight>
numeric::GridDensity importance_render(const FiducialDensity& f_base, const Weight& weight, std::size_t n,
                                       RngStream& rng, double lo, double hi, std::size_t bins) {
  return weighted_histogram(importance_sample(f_base, weight, n, rng), lo, hi, bins);
}

}  // namespace bfi
