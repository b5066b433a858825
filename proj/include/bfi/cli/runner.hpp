#pragma once

// Executes the tasks of an AnalysisConfig and writes CSV/JSON outputs plus a
// run manifest. Output formatting is fixed so repeated runs are byte-identical.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <thread>
#include <vector>

#include "bfi/bfi.hpp"
#include "bfi/cli/config.hpp"

namespace bfi::cli {

inline constexpr const char* kEngineVersion = "0.1.0";

/// A PDO curve failed validation; the run stops after writing the report.
class ValidationFailed : public Error {
 public:
  using Error::Error;
};

struct RunOptions {
  bool record_timings = false;
};

struct RunResult {
  std::vector<std::string> outputs;  // relative to the output directory
  std::vector<std::string> warnings;
};

namespace detail {

inline std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

inline std::string alpha_tag(double a) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", a);
  return buf;
}

class Outputs {
 public:
  explicit Outputs(std::filesystem::path dir) : dir_(std::move(dir)) { std::filesystem::create_directories(dir_); }

  std::ofstream open(const std::string& name) {
    std::ofstream f(dir_ / name, std::ios::binary | std::ios::trunc);
    if (!f) throw Error("cannot write " + (dir_ / name).string());
    names_.push_back(name);
    return f;
  }

  void write_json(const std::string& name, const json& j) { open(name) << j.dump(2) << "\n"; }

  const std::vector<std::string>& names() const { return names_; }
  const std::filesystem::path& dir() const { return dir_; }

 private:
  std::filesystem::path dir_;
  std::vector<std::string> names_;
};

inline void write_grid(std::ostream& os, const numeric::GridDensity& g, const char* x_name) {
  os << x_name << ",density\n";
  for (std::size_t i = 0; i < g.points.size(); ++i) os << fmt(g.points[i]) << "," << fmt(g.values[i]) << "\n";
  for (const auto& a : g.atoms) os << "# atom " << fmt(a.location) << " mass " << fmt(a.mass) << "\n";
}

inline numeric::GridDensity grid_of(const FiducialDensity& f, double lo, double hi, std::size_t n) {
  numeric::GridDensity g;
  g.lo = lo;
  g.hi = hi;
  g.points = numeric::linspace(lo, hi, n);
  for (double x : g.points) g.values.push_back(f.pdf(x));
  return g;
}

inline Fill make_fill(const InferenceBlock& inf, const SpecialInterval& iv, bool log_odds = false) {
  switch (inf.fill) {
    case FillKind::uniform: return Fill::uniform();
    case FillKind::partial: return Fill::partial();
    case FillKind::calibrated:
      if (iv.sharp()) return Fill::uniform();
      return Fill::calibrated(log_odds ? IntervalShape::log_odds_beta(iv, inf.h.a, inf.h.b)
                                       : IntervalShape::beta(iv, inf.h.a, inf.h.b));
  }
  return Fill::uniform();
}

inline ConditionalProblem single_problem(const AnalysisConfig& c) {
  if (c.model.kind == ModelKind::normal_known_var)
    return NormalKnownVarModel{c.model.xbar, c.model.sigma, c.model.n, c.inference.epsilon}.problem();
  return BinomialModel{c.model.e, c.model.n, c.inference.epsilon}.problem();
}

inline std::vector<double> single_alphas(const AnalysisConfig& c, const ConditionalProblem& prob) {
  if (c.inference.alpha_at_floor) return {p_f_hs(prob.f_s, prob.oriented())};
  return c.inference.alphas;
}

inline json posterior_summary(const PostDataDensity& p) {
  json j;
  j["alpha"] = p.alpha();
  j["direction"] = to_string(p.oriented().direction);
  j["beta"] = p.oriented().p_value;
  j["p_f_hs"] = p_f_hs(p.fiducial(), p.oriented());
  j["lambda"] = p.lambda();
  j["mass_below"] = p.mass_below();
  j["mass_inside"] = p.mass_inside();
  j["mass_above"] = p.mass_above();
  j["fill"] = to_string(p.fill());
  if (p.tau()) j["tau"] = p.tau()->tau;
  return j;
}

// --- tasks -----------------------------------------------------------------

inline void task_density(const AnalysisConfig& c, Outputs& out) {
  const ConditionalProblem prob = single_problem(c);
  const OrientedHypotheses o = prob.oriented();
  json summary = json::array();
  std::optional<numeric::GridDensity> first;
  for (double alpha : single_alphas(c, prob)) {
    const PostDataDensity p = assemble(alpha, prob.f_s, o, make_fill(c.inference, prob.interval));
    const auto g = density_grid(p, c.output.grid_points);
    if (!first) first = g;
    auto f = out.open("density_alpha_" + alpha_tag(alpha) + ".csv");
    write_grid(f, g, "theta");
    summary.push_back(posterior_summary(p));
  }
  auto f = out.open("fiducial.csv");
  write_grid(f, grid_of(prob.f_s, first->lo, first->hi, c.output.grid_points), "theta");
  out.write_json("density_summary.json", summary);
}

inline void task_importance(const AnalysisConfig& c, Outputs& out, RunResult& res) {
  const ConditionalProblem prob = single_problem(c);
  const OrientedHypotheses o = prob.oriented();
  const double alpha = single_alphas(c, prob).front();
  const PostDataDensity p = assemble(alpha, prob.f_s, o, make_fill(c.inference, prob.interval));
  RngStream rng(c.sampler->seed, 0);
  const auto& f_s = prob.f_s;
  const auto ws = importance_sample(f_s, [&](double x) { return p.pdf(x) / f_s.pdf(x); }, c.sampler->n_samples, rng);
  for (const auto& w : ws.warnings) res.warnings.push_back("importance: " + w);
  double lo = std::min(f_s.quantile(1e-6), prob.interval.lo());
  double hi = std::max(f_s.quantile(1.0 - 1e-6), prob.interval.hi());
  const auto h = weighted_histogram(ws, lo, hi, c.output.bins);
  const double w = (hi - lo) / static_cast<double>(c.output.bins);
  auto f = out.open("importance_alpha_" + alpha_tag(alpha) + ".csv");
  f << "theta,weighted_density,direct_density\n";
  for (std::size_t b = 0; b < h.points.size(); ++b) {
    const double a = lo + static_cast<double>(b) * w;
    const double direct = (p.cdf(a + w) - p.cdf(a)) / w;
    f << fmt(h.points[b]) << "," << fmt(h.values[b]) << "," << fmt(direct) << "\n";
  }
  json s = posterior_summary(p);
  s["n"] = c.sampler->n_samples;
  s["ess"] = ws.ess;
  s["seed"] = c.sampler->seed;
  out.write_json("importance_summary.json", s);
}

inline std::vector<double> beta_grid(const PdoCurve& curve, std::size_t n) {
  // Nuisance-indexed one-sided P values stay below 1/2 (the limit is not
  // attained for the normal family), so the table stops just short of it.
  const double top = std::min(curve.beta_max(), 0.5) * (1.0 - 1e-9);
  std::vector<double> g;
  for (std::size_t i = 1; i <= n; ++i) g.push_back(top * static_cast<double>(i) / static_cast<double>(n));
  return g;
}

inline json validation_json(const PdoValidation& v) {
  json j;
  j["ok"] = v.ok();
  j["monotone"] = v.monotone;
  j["lower_dominance"] = v.lower_dominance;
  if (v.upper_compliance) j["upper_compliance"] = *v.upper_compliance;
  if (v.interval_mass_monotone) j["interval_mass_monotone"] = *v.interval_mass_monotone;
  j["failures"] = v.failures;
  return j;
}

inline void task_pdo_table(const AnalysisConfig& c, Outputs& out) {
  const PdoCurve& curve = *c.inference.pdo;
  const auto grid = beta_grid(curve, c.output.beta_grid);
  json report;
  bool ok = true;
  auto cell = [](const CurvePoint& p) { return p.ok ? fmt(p.value) : std::string(); };
  if (c.model.kind == ModelKind::normal_unknown_var) {
    const NormalUnknownVarModel m{c.model.n, c.model.xbar, c.model.s2, c.inference.epsilon};
    const ConditionalFamily fam = m.mu_family();
    const Direction d = m.mu_problem(std::sqrt(m.s2)).oriented().direction;
    const Curve lower = lower_bound_curve(fam, d, grid);
    const Curve mass = interval_mass_curve(curve, fam, d, grid);
    // Without a configured target the upper bound holds the interval mass
    // reached at the top of the grid.
    std::optional<double> target = c.inference.upper_target;
    if (!target && mass.back().ok) target = mass.back().value;
    const Curve upper = target ? upper_bound_curve(*target, fam, d, grid) : Curve(grid.size());
    auto f = out.open("pdo_table.csv");
    f << "beta,pdo,lower_bound,interval_mass,upper_bound\n";
    for (std::size_t i = 0; i < grid.size(); ++i)
      f << fmt(grid[i]) << "," << fmt(curve.eval(grid[i])) << "," << cell(lower[i]) << "," << cell(mass[i]) << ","
        << cell(upper[i]) << "\n";
    const PdoValidation v = validate(curve, make_bounds(fam, d, target), grid);
    report["direction"] = to_string(d);
    if (target) report["upper_target"] = *target;
    report["validation"] = validation_json(v);
    ok = v.ok();
  } else {
    const RelativeRiskModel m{c.model.e_t, c.model.n_t, c.model.e_c, c.model.n_c, c.inference.epsilon};
    std::vector<Curve> curves;
    std::vector<std::string> names;
    report["validation"] = json::object();
    for (Arm arm : {Arm::treatment, Arm::control}) {
      const ConditionalFamily fam = m.family(arm);
      for (Direction d : {Direction::lower, Direction::upper}) {
        const std::string name = std::string("lower_") + (arm == Arm::treatment ? "pi_t_" : "pi_c_") + to_string(d);
        curves.push_back(lower_bound_curve(fam, d, grid));
        names.push_back(name);
        PdoBounds b = make_bounds(fam, d);
        // Only dominance over P_f(H_S) is asserted for the two-arm model.
        b.interval_mass = nullptr;
        const PdoValidation v = validate(curve, b, grid);
        report["validation"][name] = validation_json(v);
        ok = ok && v.ok();
      }
    }
    auto f = out.open("pdo_table.csv");
    f << "beta,pdo";
    for (const auto& n : names) f << "," << n;
    f << "\n";
    for (std::size_t i = 0; i < grid.size(); ++i) {
      f << fmt(grid[i]) << "," << fmt(curve.eval(grid[i]));
      for (const auto& cv : curves) f << "," << cell(cv[i]);
      f << "\n";
    }
  }
  out.write_json("pdo_validation.json", report);
  if (!ok) throw ValidationFailed("PDO curve failed validation (see pdo_validation.json)");
}

inline ConditionalSet conditionals_for(const AnalysisConfig& c) {
  const auto& inf = c.inference;
  if (c.model.kind == ModelKind::normal_unknown_var) {
    const NormalUnknownVarModel m{c.model.n, c.model.xbar, c.model.s2, inf.epsilon};
    if (c.sampler->compatible) return compatible_conditionals(m);
    AlphaSpec a = AlphaAtFloor{};
    if (inf.pdo) a = *inf.pdo;
    else if (!inf.alphas.empty()) a = inf.alphas.front();
    std::optional<IntervalShape> h;
    if (inf.epsilon > 0.0) h = IntervalShape::beta(m.interval(), inf.h.a, inf.h.b);
    return full_conditionals(m, a, h);
  }
  const RelativeRiskModel m{c.model.e_t, c.model.n_t, c.model.e_c, c.model.n_c, inf.epsilon};
  if (c.sampler->compatible) {
    // Independent Jeffreys densities for the two arms.
    ConditionalSet cs;
    for (Arm arm : {Arm::treatment, Arm::control}) {
      const FiducialDensity f = m.fiducial(arm);
      cs.push_back({arm == Arm::treatment ? "pi_t" : "pi_c", [f](const std::vector<double>&) -> BoundConditional {
                      return DirectDraw{[f](RngStream& rng) { return f.sample(rng); }};
                    }});
    }
    return cs;
  }
  AlphaSpec a = default_rr_pdo();
  if (inf.pdo) a = *inf.pdo;
  else if (!inf.alphas.empty()) a = inf.alphas.front();
  else if (inf.alpha_at_floor) a = AlphaAtFloor{};
  return full_conditionals(m, a, inf.h.a, inf.h.b);
}

inline std::vector<double> default_initial(const AnalysisConfig& c) {
  if (c.model.kind == ModelKind::normal_unknown_var)
    return NormalUnknownVarModel{c.model.n, c.model.xbar, c.model.s2, c.inference.epsilon}.default_initial();
  auto v = RelativeRiskModel{c.model.e_t, c.model.n_t, c.model.e_c, c.model.n_c, c.inference.epsilon}.default_initial();
  // Keep proportions strictly inside (0, 1).
  for (double& x : v) x = std::clamp(x, 0.01, 0.99);
  return v;
}

inline void write_histogram(Outputs& out, const std::string& name, const std::vector<double>& xs, std::size_t bins) {
  auto [mn, mx] = std::minmax_element(xs.begin(), xs.end());
  double lo = *mn, hi = *mx;
  if (!(hi > lo)) hi = lo + 1.0;
  WeightedSample ws;
  ws.values = xs;
  ws.weights.assign(xs.size(), 1.0 / static_cast<double>(xs.size()));
  const auto h = weighted_histogram(ws, lo, hi, bins);
  auto f = out.open(name);
  f << "bin_center,density\n";
  for (std::size_t b = 0; b < h.points.size(); ++b) f << fmt(h.points[b]) << "," << fmt(h.values[b]) << "\n";
}

inline void task_gibbs(const AnalysisConfig& c, Outputs& out, RunResult& res) {
  const SamplerBlock& s = *c.sampler;
  const ConditionalSet cs = conditionals_for(c);
  const ScanOrder scan = s.fixed_scan ? ScanOrder::fixed(*s.fixed_scan) : ScanOrder::random();
  std::vector<GibbsConfig> cfgs(s.chains);
  for (std::size_t i = 0; i < s.chains; ++i) {
    GibbsConfig& g = cfgs[i];
    g.n_samples = s.n_samples;
    g.burn_in = s.burn_in;
    g.thin = s.thin;
    g.seed = s.seed;
    g.stream = i;
    g.tune = s.tune;
    g.initial = s.initial.empty() ? default_initial(c) : s.initial[i];
  }
  // Each chain owns its stream and state; outputs are written after joining.
  std::vector<ChainOutput> chains(s.chains);
  std::vector<std::exception_ptr> errors(s.chains);
  std::vector<std::thread> threads;
  for (std::size_t i = 0; i < s.chains; ++i) {
    threads.emplace_back([&, i] {
      try {
        chains[i] = gibbs_run(cs, cfgs[i], scan);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    });
  }
  for (auto& t : threads) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);

  json diag;
  diag["scan"] = scan.to_string();
  diag["seed"] = s.seed;
  diag["chains"] = json::array();
  for (std::size_t i = 0; i < chains.size(); ++i) {
    auto f = out.open("chain_" + std::to_string(i) + ".csv");
    write_chain_csv(f, chains[i]);
    json cj;
    cj["stream"] = chains[i].stream;
    cj["acceptance_rates"] = chains[i].acceptance_rates;
    cj["final_scales"] = chains[i].final_scales;
    cj["bind_failures"] = chains[i].bind_failures;
    cj["warnings"] = chains[i].warnings;
    for (const auto& w : chains[i].warnings) res.warnings.push_back("chain " + std::to_string(i) + ": " + w);
    diag["chains"].push_back(cj);
  }
  const auto pooled = [&](std::size_t j) {
    std::vector<double> v;
    for (const auto& ch : chains) {
      const auto col = ch.column(j);
      v.insert(v.end(), col.begin(), col.end());
    }
    return v;
  };
  for (std::size_t j = 0; j < cs.size(); ++j) write_histogram(out, "hist_" + cs[j].name + ".csv", pooled(j), c.output.bins);
  if (c.model.kind == ModelKind::relative_risk) {
    auto pt = pooled(RelativeRiskModel::kPiT);
    const auto pc = pooled(RelativeRiskModel::kPiC);
    for (std::size_t i = 0; i < pt.size(); ++i) pt[i] /= pc[i];
    write_histogram(out, "hist_rr.csv", pt, c.output.bins);
  } else {
    const auto mu = pooled(NormalUnknownVarModel::kMu);
    const double eps = c.inference.epsilon;
    const auto inside = std::count_if(mu.begin(), mu.end(), [eps](double x) { return x >= -eps && x <= eps; });
    diag["mu_interval_mass"] = static_cast<double>(inside) / static_cast<double>(mu.size());
  }
  if (chains.size() >= 2) {
    diag["r_hat"] = json::object();
    for (std::size_t j = 0; j < cs.size(); ++j) diag["r_hat"][cs[j].name] = gelman_rubin(chains, j);
  }
  if (s.compare_orders) {
    GibbsConfig g = cfgs[0];
    g.stream = s.chains;  // streams not used by the main chains
    const ScanComparison cmp = scan_order_compare(cs, g, ScanOrder::fixed({0, 1}), ScanOrder::fixed({1, 0}));
    json cj;
    cj["classification"] = cmp.classification;
    cj["significant"] = cmp.significant;
    for (const auto& m : cmp.marginals)
      cj["marginals"][m.name] = {{"ks_distance", m.ks.distance}, {"p_value", m.ks.p_value}, {"ess_a", m.ess_a}, {"ess_b", m.ess_b}};
    for (const auto& r : cmp.correlations)
      cj["correlations"].push_back({{"i", r.i}, {"j", r.j}, {"r_a", r.r_a}, {"r_b", r.r_b}, {"z", r.z}, {"p_value", r.p_value}});
    diag["scan_order_compare"] = cj;
  }
  out.write_json("gibbs_diagnostics.json", diag);
}

inline void task_rr_fiducial(const AnalysisConfig& c, Outputs& out) {
  const RelativeRiskModel m{c.model.e_t, c.model.n_t, c.model.e_c, c.model.n_c, c.inference.epsilon};
  const LogRrConfidence cd = confidence_density_log_rr(m);
  {
    auto f = out.open("confidence_density_rr.csv");
    write_grid(f, grid_of(cd.density, cd.density.quantile(1e-6), cd.density.quantile(1.0 - 1e-6), c.output.grid_points), "rr");
  }
  for (Arm arm : {Arm::treatment, Arm::control}) {
    auto f = out.open(std::string("fiducial_") + (arm == Arm::treatment ? "pi_t" : "pi_c") + ".csv");
    numeric::GridDensity g = grid_of(m.fiducial(arm), 0.0, 1.0, c.output.grid_points);
    g.values.front() = g.values.back() = 0.0;
    write_grid(f, g, "pi");
  }
  out.write_json("rr_fiducial.json", {{"log_rr_center", cd.center}, {"log_rr_variance", cd.variance}, {"log_rr_sd", cd.sd}});
}

}  // namespace detail

/// Runs every task in order and writes manifest.json last.
inline RunResult run(const AnalysisConfig& c, const RunOptions& opt = {}) {
  using clock = std::chrono::steady_clock;
  detail::Outputs out(c.output.dir);
  RunResult res;
  json timings = json::object();
  for (const auto& t : c.tasks) {
    const auto t0 = clock::now();
    if (t == "density") detail::task_density(c, out);
    else if (t == "importance") detail::task_importance(c, out, res);
    else if (t == "pdo_table") detail::task_pdo_table(c, out);
    else if (t == "gibbs") detail::task_gibbs(c, out, res);
    else if (t == "rr_fiducial") detail::task_rr_fiducial(c, out);
    timings[t] = std::chrono::duration<double, std::milli>(clock::now() - t0).count();
  }
  json manifest;
  char digest[24];
  std::snprintf(digest, sizeof digest, "%016llx", static_cast<unsigned long long>(config_digest(c.document)));
  manifest["name"] = c.name;
  manifest["config_digest"] = digest;
  manifest["engine_version"] = kEngineVersion;
  manifest["seeds"] = json::array();
  if (c.sampler) manifest["seeds"].push_back(c.sampler->seed);
  std::vector<std::string> names = out.names();
  std::sort(names.begin(), names.end());
  manifest["outputs"] = names;
  manifest["warnings"] = res.warnings;
  if (opt.record_timings) manifest["timings_ms"] = timings;
  out.write_json("manifest.json", manifest);
  res.outputs = names;
  res.outputs.push_back("manifest.json");
  return res;
}

struct ValidationReport {
  std::vector<std::string> checks;
  std::vector<std::string> failures;
  bool ok() const { return failures.empty(); }
};

/// Coherence checks that need no sampling: alpha against the floor for
/// single-parameter models, PDO monotonicity and h endpoint behaviour.
inline ValidationReport validate_config(const AnalysisConfig& c) {
  ValidationReport r;
  r.checks.push_back("schema");
  const bool single = c.model.kind == ModelKind::normal_known_var || c.model.kind == ModelKind::binomial;
  if (single) {
    const ConditionalProblem prob = detail::single_problem(c);
    const OrientedHypotheses o = prob.oriented();
    const double floor = p_f_hs(prob.f_s, o);
    for (double a : c.inference.alphas) {
      r.checks.push_back("alpha " + detail::fmt(a) + " against P_f(H_S)");
      if (a < floor - 1e-12) r.failures.push_back(floor_message(a, floor));
    }
    if (c.inference.fill == FillKind::calibrated && !prob.interval.sharp()) {
      r.checks.push_back("interval shape h");
      try {
        (void)IntervalShape::beta(prob.interval, c.inference.h.a, c.inference.h.b);
      } catch (const DomainError& e) {
        r.failures.push_back(e.what());
      }
    }
  }
  if (c.inference.pdo) {
    r.checks.push_back("PDO monotonicity");
    const auto& curve = *c.inference.pdo;
    double prev = -1.0;
    for (double b : detail::beta_grid(curve, c.output.beta_grid)) {
      const double a = curve.eval(b);
      if (!(a > prev)) {
        r.failures.push_back("PDO curve not strictly increasing at beta=" + detail::fmt(b));
        break;
      }
      prev = a;
    }
  }
  return r;
}

}  // namespace bfi::cli
