#pragma once

// Analysis configuration: parsing and schema validation of the JSON document
// read by the command-line tool.

#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"

#include "bfi/error.hpp"
#include "bfi/models.hpp"
#include "bfi/pdo.hpp"

namespace bfi::cli {

using nlohmann::json;

enum class ModelKind { normal_known_var, binomial, normal_unknown_var, relative_risk };

inline const char* to_string(ModelKind k) {
  switch (k) {
    case ModelKind::normal_known_var: return "normal_known_var";
    case ModelKind::binomial: return "binomial";
    case ModelKind::normal_unknown_var: return "normal_unknown_var";
    case ModelKind::relative_risk: return "relative_risk";
  }
  return "?";
}

struct ModelBlock {
  ModelKind kind;
  // normal_known_var / normal_unknown_var
  double xbar = 0.0;
  double sigma = 1.0;
  unsigned n = 1;
  double s2 = 0.0;
  // binomial
  unsigned e = 0;
  // relative_risk
  unsigned e_t = 0, n_t = 0, e_c = 0, n_c = 0;
};

struct HSpec {
  double a = 4.0;
  double b = 4.0;
};

struct InferenceBlock {
  double epsilon = 0.0;
  /// Fixed alpha values (single-parameter models).
  std::vector<double> alphas;
  bool alpha_at_floor = false;
  std::optional<PdoCurve> pdo;
  HSpec h;
  FillKind fill = FillKind::calibrated;
  /// Interval mass held by the upper-bound curve of the PDO table.
  std::optional<double> upper_target;
};

struct SamplerBlock {
  std::size_t n_samples = 100000;
  std::size_t burn_in = 2000;
  std::size_t thin = 1;
  std::uint64_t seed = 1;
  std::optional<std::vector<std::size_t>> fixed_scan;  // empty means random scan
  std::size_t chains = 1;
  std::vector<std::vector<double>> initial;  // optional, one per chain
  bool compatible = false;
  bool compare_orders = false;
  bool tune = true;
};

struct OutputBlock {
  std::string dir = "out";
  std::size_t grid_points = 801;
  std::size_t bins = 100;
  std::size_t beta_grid = 200;
};

struct AnalysisConfig {
  std::string name;
  ModelBlock model;
  InferenceBlock inference;
  std::optional<SamplerBlock> sampler;
  OutputBlock output;
  std::vector<std::string> tasks;
  /// Effective configuration (after overrides) used for hashing.
  json document;
};

inline const std::set<std::string>& known_tasks() {
  static const std::set<std::string> t{"density", "importance", "pdo_table", "gibbs", "rr_fiducial"};
  return t;
}

namespace detail {

inline void reject_unknown(const json& obj, const std::string& where, const std::set<std::string>& allowed) {
  if (!obj.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& [k, v] : obj.items()) {
    (void)v;
    if (!allowed.count(k)) throw ConfigError(where + "." + k + ": unknown field");
  }
}

inline const json& require(const json& obj, const std::string& where, const std::string& key) {
  if (!obj.contains(key)) throw ConfigError(where + "." + key + ": required field missing");
  return obj.at(key);
}

inline double get_number(const json& obj, const std::string& where, const std::string& key) {
  const json& v = require(obj, where, key);
  if (!v.is_number()) throw ConfigError(where + "." + key + ": expected a number");
  return v.get<double>();
}

inline unsigned get_count(const json& obj, const std::string& where, const std::string& key) {
  const json& v = require(obj, where, key);
  if (!v.is_number_integer() || v.get<long long>() < 0) throw ConfigError(where + "." + key + ": expected a nonnegative integer");
  return v.get<unsigned>();
}

template <class T>
T get_or(const json& obj, const std::string& where, const std::string& key, T fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if constexpr (std::is_same_v<T, bool>) {
    if (!v.is_boolean()) throw ConfigError(where + "." + key + ": expected true or false");
  } else if constexpr (std::is_integral_v<T>) {
    if (!v.is_number_integer() || v.get<long long>() < 0)
      throw ConfigError(where + "." + key + ": expected a nonnegative integer");
  } else if constexpr (std::is_floating_point_v<T>) {
    if (!v.is_number()) throw ConfigError(where + "." + key + ": expected a number");
  } else {
    if (!v.is_string()) throw ConfigError(where + "." + key + ": expected a string");
  }
  return v.get<T>();
}

inline ModelBlock parse_model(const json& j) {
  const std::string w = "model";
  if (!j.is_object()) throw ConfigError("model: expected an object");
  const std::string kind = get_or<std::string>(j, w, "kind", "");
  ModelBlock m{};
  if (kind == "normal_known_var") {
    reject_unknown(j, w, {"kind", "xbar", "sigma", "n"});
    m.kind = ModelKind::normal_known_var;
    m.xbar = get_number(j, w, "xbar");
    m.sigma = get_number(j, w, "sigma");
    m.n = get_or<unsigned>(j, w, "n", 1);
    if (!(m.sigma > 0.0)) throw ConfigError("model.sigma: must be positive");
    if (m.n < 1) throw ConfigError("model.n: must be at least 1");
  } else if (kind == "binomial") {
    reject_unknown(j, w, {"kind", "e", "n"});
    m.kind = ModelKind::binomial;
    m.e = get_count(j, w, "e");
    m.n = get_count(j, w, "n");
    if (m.n == 0 || m.e > m.n) throw ConfigError("model.e: must satisfy 0 <= e <= n with n > 0");
  } else if (kind == "normal_unknown_var") {
    reject_unknown(j, w, {"kind", "n", "xbar", "s2", "samples"});
    m.kind = ModelKind::normal_unknown_var;
    if (j.contains("samples")) {
      if (j.contains("n") || j.contains("xbar") || j.contains("s2"))
        throw ConfigError("model.samples: give either samples or the summaries (n, xbar, s2), not both");
      const json& s = j.at("samples");
      if (!s.is_array()) throw ConfigError("model.samples: expected an array of numbers");
      std::vector<double> xs;
      for (const auto& x : s) {
        if (!x.is_number()) throw ConfigError("model.samples: expected an array of numbers");
        xs.push_back(x.get<double>());
      }
      if (xs.size() < 2) throw ConfigError("model.samples: need at least two observations");
      const auto red = NormalUnknownVarModel::from_samples(xs, 0.0);
      m.n = red.n;
      m.xbar = red.xbar;
      m.s2 = red.s2;
    } else {
      m.n = get_count(j, w, "n");
      m.xbar = get_number(j, w, "xbar");
      m.s2 = get_number(j, w, "s2");
    }
    if (m.n < 2) throw ConfigError("model.n: must be at least 2");
    if (!(m.s2 > 0.0)) throw ConfigError("model.s2: must be positive");
  } else if (kind == "relative_risk") {
    reject_unknown(j, w, {"kind", "e_t", "n_t", "e_c", "n_c"});
    m.kind = ModelKind::relative_risk;
    m.e_t = get_count(j, w, "e_t");
    m.n_t = get_count(j, w, "n_t");
    m.e_c = get_count(j, w, "e_c");
    m.n_c = get_count(j, w, "n_c");
    if (m.n_t == 0 || m.n_c == 0 || m.e_t > m.n_t || m.e_c > m.n_c)
      throw ConfigError("model: event counts must satisfy 0 <= e <= n with n > 0 in each arm");
  } else {
    throw ConfigError("model.kind: expected one of normal_known_var, binomial, normal_unknown_var, relative_risk");
  }
  return m;
}

inline PdoCurve parse_pdo(const json& j) {
  const std::string w = "inference.pdo";
  const std::string form = get_or<std::string>(j, w, "form", "");
  try {
    if (form == "power") {
      reject_unknown(j, w, {"form", "c", "gamma", "beta_max"});
      return PdoCurve::power(get_or<double>(j, w, "c", 1.0), get_number(j, w, "gamma"),
                             get_or<double>(j, w, "beta_max", 0.5));
    }
    if (form == "knots") {
      reject_unknown(j, w, {"form", "points", "beta_max"});
      const json& pts = require(j, w, "points");
      if (!pts.is_array()) throw ConfigError(w + ".points: expected an array of [beta, alpha] pairs");
      std::vector<std::pair<double, double>> knots;
      for (const auto& p : pts) {
        if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number())
          throw ConfigError(w + ".points: expected an array of [beta, alpha] pairs");
        knots.emplace_back(p[0].get<double>(), p[1].get<double>());
      }
      std::optional<double> bmax;
      if (j.contains("beta_max")) bmax = get_number(j, w, "beta_max");
      return PdoCurve::knots(std::move(knots), bmax);
    }
  } catch (const DomainError& e) {
    throw ConfigError(w + ": " + e.what());
  }
  throw ConfigError(w + ".form: expected \"power\" or \"knots\"");
}

inline InferenceBlock parse_inference(const json& j) {
  const std::string w = "inference";
  reject_unknown(j, w, {"epsilon", "alpha", "pdo", "h", "fill", "upper_target"});
  InferenceBlock inf;
  inf.epsilon = get_or<double>(j, w, "epsilon", 0.0);
  if (!(inf.epsilon >= 0.0)) throw ConfigError("inference.epsilon: must be nonnegative");
  if (j.contains("alpha")) {
    const json& a = j.at("alpha");
    if (a.is_string() && a.get<std::string>() == "floor") {
      inf.alpha_at_floor = true;
    } else if (a.is_number()) {
      inf.alphas.push_back(a.get<double>());
    } else if (a.is_array() && !a.empty()) {
      for (const auto& v : a) {
        if (!v.is_number()) throw ConfigError("inference.alpha: expected numbers");
        inf.alphas.push_back(v.get<double>());
      }
    } else {
      throw ConfigError("inference.alpha: expected a number, a nonempty array of numbers or \"floor\"");
    }
    for (double v : inf.alphas)
      if (!(v > 0.0 && v < 1.0)) throw ConfigError("inference.alpha: values must lie in (0,1)");
  }
  if (j.contains("pdo")) inf.pdo = parse_pdo(j.at("pdo"));
  if (j.contains("h")) {
    reject_unknown(j.at("h"), "inference.h", {"a", "b"});
    inf.h.a = get_number(j.at("h"), "inference.h", "a");
    inf.h.b = get_number(j.at("h"), "inference.h", "b");
  }
  if (!(inf.h.a > 1.0 && inf.h.b > 1.0))
    throw ConfigError("inference.h: shapes must exceed 1 so that h vanishes at both interval endpoints");
  const std::string fill = get_or<std::string>(j, w, "fill", "calibrated");
  if (fill == "calibrated") inf.fill = FillKind::calibrated;
  else if (fill == "uniform") inf.fill = FillKind::uniform;
  else if (fill == "partial") inf.fill = FillKind::partial;
  else throw ConfigError("inference.fill: expected calibrated, uniform or partial");
  if (j.contains("upper_target")) {
    inf.upper_target = get_number(j, w, "upper_target");
    if (!(*inf.upper_target > 0.0 && *inf.upper_target < 1.0))
      throw ConfigError("inference.upper_target: must lie in (0,1)");
  }
  return inf;
}

inline SamplerBlock parse_sampler(const json& j) {
  const std::string w = "sampler";
  reject_unknown(j, w,
                 {"n_samples", "burn_in", "thin", "seed", "scan", "chains", "initial", "conditionals",
                  "compare_orders", "tune"});
  SamplerBlock s;
  s.n_samples = get_or<std::size_t>(j, w, "n_samples", s.n_samples);
  s.burn_in = get_or<std::size_t>(j, w, "burn_in", s.burn_in);
  s.thin = get_or<std::size_t>(j, w, "thin", s.thin);
  s.seed = get_or<std::uint64_t>(j, w, "seed", s.seed);
  s.chains = get_or<std::size_t>(j, w, "chains", s.chains);
  s.compare_orders = get_or<bool>(j, w, "compare_orders", false);
  s.tune = get_or<bool>(j, w, "tune", true);
  if (s.n_samples == 0) throw ConfigError("sampler.n_samples: must be positive");
  if (s.thin == 0) throw ConfigError("sampler.thin: must be at least 1");
  if (s.chains == 0) throw ConfigError("sampler.chains: must be at least 1");
  if (j.contains("scan")) {
    const json& sc = j.at("scan");
    if (sc.is_string() && sc.get<std::string>() == "random") {
    } else if (sc.is_array()) {
      std::vector<std::size_t> perm;
      for (const auto& v : sc) {
        if (!v.is_number_integer() || v.get<long long>() < 0) throw ConfigError("sampler.scan: expected parameter indices");
        perm.push_back(v.get<std::size_t>());
      }
      s.fixed_scan = perm;
    } else {
      throw ConfigError("sampler.scan: expected \"random\" or a permutation array");
    }
  }
  if (j.contains("initial")) {
    const json& in = j.at("initial");
    if (!in.is_array()) throw ConfigError("sampler.initial: expected an array of states");
    for (const auto& st : in) {
      if (!st.is_array()) throw ConfigError("sampler.initial: expected an array of states");
      std::vector<double> v;
      for (const auto& x : st) {
        if (!x.is_number()) throw ConfigError("sampler.initial: states must be numbers");
        v.push_back(x.get<double>());
      }
      s.initial.push_back(v);
    }
  }
  const std::string cond = get_or<std::string>(j, w, "conditionals", "bispatial");
  if (cond == "compatible") s.compatible = true;
  else if (cond != "bispatial") throw ConfigError("sampler.conditionals: expected bispatial or compatible");
  return s;
}

inline OutputBlock parse_output(const json& j) {
  const std::string w = "output";
  reject_unknown(j, w, {"dir", "grid_points", "bins", "beta_grid"});
  OutputBlock o;
  o.dir = get_or<std::string>(j, w, "dir", o.dir);
  o.grid_points = get_or<std::size_t>(j, w, "grid_points", o.grid_points);
  o.bins = get_or<std::size_t>(j, w, "bins", o.bins);
  o.beta_grid = get_or<std::size_t>(j, w, "beta_grid", o.beta_grid);
  if (o.grid_points < 8) throw ConfigError("output.grid_points: need at least 8");
  if (o.bins == 0) throw ConfigError("output.bins: must be positive");
  if (o.beta_grid < 2) throw ConfigError("output.beta_grid: need at least 2");
  return o;
}

inline std::size_t line_of_offset(const std::string& text, std::size_t byte) {
  std::size_t line = 1;
  for (std::size_t i = 0; i < std::min(byte, text.size()); ++i) line += text[i] == '\n';
  return line;
}

// Schema-level coherence between the blocks.
inline void check_tasks(const AnalysisConfig& c) {
  const bool single = c.model.kind == ModelKind::normal_known_var || c.model.kind == ModelKind::binomial;
  for (const auto& t : c.tasks) {
    if (!known_tasks().count(t)) throw ConfigError("tasks: unknown task \"" + t + "\"");
    if ((t == "density" || t == "importance") && !single)
      throw ConfigError("tasks." + t + ": needs a single-parameter model (normal_known_var or binomial)");
    if ((t == "density" || t == "importance") && c.inference.alphas.empty() && !c.inference.alpha_at_floor)
      throw ConfigError("tasks." + t + ": needs inference.alpha");
    if (t == "importance" && !c.sampler) throw ConfigError("tasks.importance: needs a sampler block (n_samples, seed)");
    if (t == "importance" && c.inference.fill == FillKind::partial)
      throw ConfigError("tasks.importance: the partial fill has no density inside the interval");
    if (t == "pdo_table" && c.model.kind != ModelKind::normal_unknown_var && c.model.kind != ModelKind::relative_risk)
      throw ConfigError("tasks.pdo_table: needs a nuisance-indexed model (normal_unknown_var or relative_risk)");
    if (t == "pdo_table" && !c.inference.pdo) throw ConfigError("tasks.pdo_table: needs inference.pdo");
    if (t == "gibbs" && single) throw ConfigError("tasks.gibbs: needs a two-parameter model");
    if (t == "gibbs" && !c.sampler) throw ConfigError("tasks.gibbs: needs a sampler block");
    if (t == "gibbs" && !c.inference.pdo && c.inference.alphas.empty() && !c.inference.alpha_at_floor &&
        !(c.sampler && c.sampler->compatible) && c.model.kind != ModelKind::relative_risk)
      throw ConfigError("tasks.gibbs: needs inference.pdo, inference.alpha or compatible conditionals");
    if (t == "rr_fiducial" && c.model.kind != ModelKind::relative_risk)
      throw ConfigError("tasks.rr_fiducial: needs the relative_risk model");
  }
  if (c.model.kind == ModelKind::binomial && !(c.inference.epsilon < 0.5))
    throw ConfigError("inference.epsilon: the binomial interval must lie inside (0,1)");
  if (c.model.kind == ModelKind::relative_risk && !(c.inference.epsilon > 0.0))
    throw ConfigError("inference.epsilon: must be positive for the relative_risk model");
  if (c.sampler) {
    const std::size_t k = single ? 1 : 2;
    if (c.sampler->fixed_scan) {
      try {
        ScanOrder::fixed(*c.sampler->fixed_scan).validate(k);
      } catch (const DomainError& e) {
        throw ConfigError(std::string("sampler.scan: ") + e.what());
      }
    }
    for (const auto& st : c.sampler->initial)
      if (st.size() != k) throw ConfigError("sampler.initial: each state needs " + std::to_string(k) + " values");
    if (!c.sampler->initial.empty() && c.sampler->initial.size() != c.sampler->chains)
      throw ConfigError("sampler.initial: give one state per chain");
  }
}

}  // namespace detail

/// Parses and schema-checks a configuration document. Throws ConfigError
/// naming the offending line or field.
inline AnalysisConfig parse_config(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("line " + std::to_string(detail::line_of_offset(text, e.byte)) + ": " + e.what());
  }
  detail::reject_unknown(doc, "config", {"name", "model", "inference", "sampler", "output", "tasks"});
  AnalysisConfig c;
  c.name = detail::get_or<std::string>(doc, "config", "name", "analysis");
  c.model = detail::parse_model(detail::require(doc, "config", "model"));
  c.inference = detail::parse_inference(doc.value("inference", json::object()));
  if (doc.contains("sampler")) c.sampler = detail::parse_sampler(doc.at("sampler"));
  c.output = detail::parse_output(doc.value("output", json::object()));
  const json& tasks = detail::require(doc, "config", "tasks");
  if (!tasks.is_array() || tasks.empty()) throw ConfigError("config.tasks: expected a nonempty array of task names");
  for (const auto& t : tasks) {
    if (!t.is_string()) throw ConfigError("config.tasks: expected task names");
    c.tasks.push_back(t.get<std::string>());
  }
  detail::check_tasks(c);
  c.document = doc;
  return c;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline AnalysisConfig load_config(const std::string& path) { return parse_config(read_file(path)); }

// Overrides from the command line are applied to the document too, so the
// manifest digest reflects them.

inline void override_seed(AnalysisConfig& c, std::uint64_t seed) {
  if (!c.sampler) c.sampler = SamplerBlock{};
  c.sampler->seed = seed;
  c.document["sampler"]["seed"] = seed;
}

inline void override_samples(AnalysisConfig& c, std::size_t n) {
  if (n == 0) throw ConfigError("--samples: must be positive");
  if (!c.sampler) c.sampler = SamplerBlock{};
  c.sampler->n_samples = n;
  c.document["sampler"]["n_samples"] = n;
}

inline void override_out_dir(AnalysisConfig& c, const std::string& dir) {
  c.output.dir = dir;
  c.document["output"]["dir"] = dir;
}

/// 64-bit FNV-1a of the canonical (sorted-key) serialization.
inline std::uint64_t config_digest(const json& doc) {
  const std::string s = doc.dump();
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  return h;
}

}  // namespace bfi::cli
