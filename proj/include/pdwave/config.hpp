#pragma once

// Experiment configuration: INI-style key = value files with optional
// [section] headers. Keys may be written bare at the top level when the bare
// name is unambiguous (e.g. `E = 100`).

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <map>
#include <numbers>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "pdwave/integrators.hpp"
#include "pdwave/model.hpp"
#include "pdwave/quadrature.hpp"

namespace pdwave::harness {

enum class Experiment {
  Test1Convergence,
  Test2Energy,
  Test2Stability,
  Test3WaveLimit,
  Test4Spectral,
  Test5Nonlinear,
  Custom
};

enum class MethodTag { MSV, MMI, MT, GT, SPECTRAL };

[[nodiscard]] inline const char* to_string(Experiment e) {
  switch (e) {
    case Experiment::Test1Convergence: return "test1";
    case Experiment::Test2Energy: return "energy";
    case Experiment::Test2Stability: return "stability";
    case Experiment::Test3WaveLimit: return "test3";
    case Experiment::Test4Spectral: return "test4";
    case Experiment::Test5Nonlinear: return "test5";
    case Experiment::Custom: return "custom";
  }
  return "?";
}

[[nodiscard]] inline const char* to_string(MethodTag m) {
  switch (m) {
    case MethodTag::MSV: return "MSV";
    case MethodTag::MMI: return "MMI";
    case MethodTag::MT: return "MT";
    case MethodTag::GT: return "GT";
    case MethodTag::SPECTRAL: return "SPECTRAL";
  }
  return "?";
}

/// Raised for unreadable files, unknown keys, bad values and violated
/// invariants; line is 0 when the problem is not tied to a line.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& message, std::size_t line = 0, std::string key = {})
      : std::runtime_error(format(message, line, key)), line_(line), key_(std::move(key)) {}

  [[nodiscard]] std::size_t line() const { return line_; }
  [[nodiscard]] const std::string& key() const { return key_; }

 private:
  static std::string format(const std::string& message, std::size_t line, const std::string& key) {
    std::string out = "config";
    if (line) out += ":" + std::to_string(line);
    if (!key.empty()) out += ": key '" + key + "'";
    return out + ": " + message;
  }
  std::size_t line_;
  std::string key_;
};

struct Rung {
  double h = 0.1;
  double tau = 0.1;
};

struct ExperimentConfig {
  Experiment experiment = Experiment::Test1Convergence;
  std::vector<MethodTag> methods;  ///< empty: the experiment's default set
  std::vector<Rung> ladder;        ///< empty: the experiment's default ladder
  Material material;
  double T = 3.0;
  double D = 10.0;                 ///< half-width of the truncated domain
  double mt_regularization = 2.4;  ///< exponent s of the h^s shift for MT
  double gt_regularization = 4.0;  ///< exponent s for GT
  double exact_tol = 1e-10;

  // Wave-limit study.
  std::vector<double> l_values{0.4, 0.2, 0.1};

  // Spectral study.
  double spectral_M = 2.5;
  std::vector<std::size_t> spectral_N{628, 1256, 6284, 12566, 62832, 125664};
  double spectral_t = 3.5;
  double spectral_window = std::numbers::pi;

  // Nonlinear bar.
  double epsilon = 1e-3;
  int horizon_nodes = 3;
  double fp_tol = 1e-12;
  std::size_t fp_max_iters = 200;

  // Custom runs.
  QuadratureScheme custom_scheme = QuadratureScheme::MidpointRule;
  TimeMethod custom_integrator = TimeMethod::StormerVerlet;
  std::optional<double> custom_regularization;

  std::string output_dir = "out";
  bool write_series = false;
  std::uint64_t seed = 20240611;
  unsigned threads = 0;  ///< 0: hardware concurrency
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream is(s);
  while (std::getline(is, item, sep)) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

struct Entry {
  std::string value;
  std::size_t line;
};

// Canonical keys, as section.key.
inline const std::vector<std::string>& known_keys() {
  static const std::vector<std::string> keys = {
      "experiment.type",        "experiment.methods",       "experiment.ladder",        "experiment.T",
      "experiment.seed",        "experiment.threads",       "material.rho",             "material.E",
      "material.l",             "material.L",               "quadrature.D",             "quadrature.mt_regularization",
      "quadrature.gt_regularization", "reference.tol",      "wave_limit.l_values",      "spectral.M",
      "spectral.N",             "spectral.t",               "spectral.window",          "nonlinear.epsilon",
      "nonlinear.horizon_nodes", "nonlinear.fp_tol",        "nonlinear.fp_max_iters",   "custom.scheme",
      "custom.integrator",      "custom.regularization",    "output.dir",               "output.series"};
  return keys;
}

inline std::string resolve_key(const std::string& section, const std::string& key, std::size_t line) {
  const auto& keys = known_keys();
  if (!section.empty()) {
    const std::string full = section + "." + key;
    if (std::find(keys.begin(), keys.end(), full) == keys.end()) throw ConfigError("unknown key", line, full);
    return full;
  }
  std::string found;
  for (const auto& k : keys) {
    if (k.substr(k.find('.') + 1) == key) {
      if (!found.empty()) throw ConfigError("ambiguous bare key; put it under a [section]", line, key);
      found = k;
    }
  }
  if (found.empty()) throw ConfigError("unknown key", line, key);
  return found;
}

inline double parse_double(const std::string& key, const Entry& e) {
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(e.value, &pos);
  } catch (const std::exception&) {
    throw ConfigError("expected a number, got '" + e.value + "'", e.line, key);
  }
  if (pos != e.value.size() || !std::isfinite(v)) {
    throw ConfigError("expected a finite number, got '" + e.value + "'", e.line, key);
  }
  return v;
}

inline long long parse_integer(const std::string& key, const Entry& e) {
  std::size_t pos = 0;
  long long v = 0;
  try {
    v = std::stoll(e.value, &pos);
  } catch (const std::exception&) {
    throw ConfigError("expected an integer, got '" + e.value + "'", e.line, key);
  }
  if (pos != e.value.size()) throw ConfigError("expected an integer, got '" + e.value + "'", e.line, key);
  return v;
}

inline bool parse_bool(const std::string& key, const Entry& e) {
  const auto v = lower(e.value);
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError("expected true/false, got '" + e.value + "'", e.line, key);
}

}  // namespace detail

[[nodiscard]] inline Experiment parse_experiment(const std::string& text, std::size_t line = 0) {
  const auto v = detail::lower(text);
  if (v == "test1" || v == "convergence" || v == "table1") return Experiment::Test1Convergence;
  if (v == "energy" || v == "test2_energy") return Experiment::Test2Energy;
  if (v == "stability" || v == "table2" || v == "test2_stability") return Experiment::Test2Stability;
  if (v == "test3" || v == "wave_limit" || v == "table3") return Experiment::Test3WaveLimit;
  if (v == "test4" || v == "spectral" || v == "table4") return Experiment::Test4Spectral;
  if (v == "test5" || v == "nonlinear" || v == "table5") return Experiment::Test5Nonlinear;
  if (v == "custom") return Experiment::Custom;
  throw ConfigError("unknown experiment '" + text + "'", line, "experiment.type");
}

[[nodiscard]] inline MethodTag parse_method(const std::string& text, std::size_t line = 0) {
  const auto v = detail::lower(text);
  if (v == "msv") return MethodTag::MSV;
  if (v == "mmi") return MethodTag::MMI;
  if (v == "mt") return MethodTag::MT;
  if (v == "gt") return MethodTag::GT;
  if (v == "spectral") return MethodTag::SPECTRAL;
  throw ConfigError("unknown method '" + text + "' (MSV, MMI, MT, GT, SPECTRAL)", line, "experiment.methods");
}

[[nodiscard]] inline std::vector<MethodTag> parse_methods(const std::string& text, std::size_t line = 0) {
  std::vector<MethodTag> out;
  for (const auto& item : detail::split(text, ',')) out.push_back(parse_method(item, line));
  return out;
}

/// "h:tau, h:tau, ..." (a bare h means tau = h).
[[nodiscard]] inline std::vector<Rung> parse_ladder(const std::string& text, std::size_t line = 0) {
  std::vector<Rung> out;
  const std::string key = "experiment.ladder";
  for (const auto& item : detail::split(text, ',')) {
    const auto parts = detail::split(item, ':');
    if (parts.empty() || parts.size() > 2) throw ConfigError("rung '" + item + "' is not h:tau", line, key);
    Rung r;
    r.h = detail::parse_double(key, {parts[0], line});
    r.tau = parts.size() == 2 ? detail::parse_double(key, {parts[1], line}) : r.h;
    out.push_back(r);
  }
  return out;
}

/// Methods, ladder and parameters each experiment uses when not configured.
[[nodiscard]] inline std::vector<MethodTag> default_methods(Experiment e) {
  switch (e) {
    case Experiment::Test1Convergence: return {MethodTag::MSV, MethodTag::MT, MethodTag::MMI, MethodTag::GT};
    case Experiment::Test2Energy: return {MethodTag::MSV, MethodTag::MT};
    case Experiment::Test2Stability: return {MethodTag::MSV, MethodTag::MT, MethodTag::MMI};
    case Experiment::Test3WaveLimit: return {MethodTag::MSV, MethodTag::MT, MethodTag::GT, MethodTag::MMI};
    case Experiment::Test4Spectral: return {MethodTag::SPECTRAL};
    case Experiment::Test5Nonlinear: return {MethodTag::MSV, MethodTag::MMI};
    case Experiment::Custom: return {};
  }
  return {};
}

[[nodiscard]] inline std::vector<Rung> default_ladder(Experiment e) {
  switch (e) {
    case Experiment::Test2Stability: return {{0.1, 0.1}, {0.05, 0.2}, {0.025, 0.4}};
    case Experiment::Test2Energy: return {{0.1, 0.1}, {0.05, 0.05}};
    case Experiment::Test3WaveLimit: return {{0.05, 0.05}};
    case Experiment::Test5Nonlinear: return {{0.1, 0.01}, {0.05, 0.005}, {0.025, 0.0025}};
    default: return {{0.1, 0.1}, {0.05, 0.05}, {0.025, 0.025}};
  }
}

/// Fills unset methods/ladder and checks every invariant.
inline void finalize(ExperimentConfig& c) {
  if (c.methods.empty()) c.methods = default_methods(c.experiment);
  if (c.ladder.empty()) c.ladder = default_ladder(c.experiment);
  try {
    c.material.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what(), 0, "material");
  }
  for (const auto& r : c.ladder) {
    if (!(r.h > 0.0) || !(r.tau > 0.0)) throw ConfigError("ladder entries must be positive", 0, "experiment.ladder");
  }
  if (!(c.T > 0.0)) throw ConfigError("must be positive", 0, "experiment.T");
  if (!(c.D > 0.0)) throw ConfigError("must be positive", 0, "quadrature.D");
  if (!(c.exact_tol > 0.0) || c.exact_tol > 1e-6) throw ConfigError("must lie in (0, 1e-6]", 0, "reference.tol");
  if (!(c.spectral_M > 0.0)) throw ConfigError("must be positive", 0, "spectral.M");
  if (!(c.spectral_t >= 0.0)) throw ConfigError("must be nonnegative", 0, "spectral.t");
  if (!(c.spectral_window > 0.0)) throw ConfigError("must be positive", 0, "spectral.window");
  for (auto n : c.spectral_N)
    if (n == 0) throw ConfigError("mode counts must be positive", 0, "spectral.N");
  for (double l : c.l_values)
    if (!(l > 0.0)) throw ConfigError("length scales must be positive", 0, "wave_limit.l_values");
  if (!(c.epsilon > 0.0)) throw ConfigError("must be positive", 0, "nonlinear.epsilon");
  if (c.horizon_nodes < 1) throw ConfigError("must be at least 1", 0, "nonlinear.horizon_nodes");
  if (!(c.fp_tol > 0.0)) throw ConfigError("must be positive", 0, "nonlinear.fp_tol");
  if (c.fp_max_iters == 0) throw ConfigError("must be positive", 0, "nonlinear.fp_max_iters");

  const bool spectral = c.experiment == Experiment::Test4Spectral;
  for (auto m : c.methods) {
    if ((m == MethodTag::SPECTRAL) != spectral) {
      throw ConfigError(std::string("method ") + to_string(m) + " cannot run experiment " + to_string(c.experiment),
                        0, "experiment.methods");
    }
    if (c.experiment == Experiment::Test5Nonlinear && m != MethodTag::MSV && m != MethodTag::MMI) {
      throw ConfigError("the nonlinear study supports MSV and MMI only", 0, "experiment.methods");
    }
  }
  if (c.experiment == Experiment::Custom) {
    if (!c.methods.empty()) throw ConfigError("custom runs are set through [custom], not methods", 0, "experiment.methods");
    // Trigonometric schemes are paired with a quadrature rule of matching order.
    if (c.custom_integrator == TimeMethod::Trig2 && c.custom_scheme != QuadratureScheme::MidpointRule) {
      throw ConfigError("trig2 pairs with the midpoint grid", 0, "custom.integrator");
    }
    if (c.custom_integrator == TimeMethod::Trig4 && c.custom_scheme != QuadratureScheme::GaussTwoPoint) {
      throw ConfigError("trig4 pairs with the gauss2 grid", 0, "custom.integrator");
    }
  }
}

/// Per-experiment defaults that differ from the struct defaults.
inline void apply_experiment_defaults(ExperimentConfig& c) {
  switch (c.experiment) {
    case Experiment::Test2Stability:
      c.material.E = 100.0;
      c.T = 30.0;
      break;
    case Experiment::Test2Energy: c.T = 30.0; break;
    case Experiment::Test5Nonlinear: c.T = 10.0; break;
    default: c.T = 3.0; break;
  }
}

/// Parses configuration text. Empty input gives the default convergence config,
/// or the `expected` experiment when given; a file naming another experiment
/// is then rejected.
[[nodiscard]] inline ExperimentConfig parse_config_text(const std::string& text,
                                                        std::optional<Experiment> expected = std::nullopt) {
  std::map<std::string, detail::Entry> entries;
  std::istringstream is(text);
  std::string raw;
  std::string section;
  std::size_t line_no = 0;
  while (std::getline(is, raw)) {
    ++line_no;
    const auto hash = raw.find_first_of("#;");
    const std::string line = detail::trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError("unterminated section header", line_no);
      section = detail::trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("expected key = value", line_no);
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError("missing key before '='", line_no);
    const std::string full = detail::resolve_key(section, key, line_no);
    if (entries.count(full)) {
      throw ConfigError("duplicate key (first set on line " + std::to_string(entries[full].line) + ")", line_no, full);
    }
    entries[full] = {value, line_no};
  }

  ExperimentConfig c;
  auto get = [&](const std::string& k) -> const detail::Entry* {
    const auto it = entries.find(k);
    return it == entries.end() ? nullptr : &it->second;
  };
  auto num = [&](const std::string& k, double& target, bool positive = true) {
    if (const auto* e = get(k)) {
      target = detail::parse_double(k, *e);
      if (positive && !(target > 0.0)) throw ConfigError("must be positive, got " + e->value, e->line, k);
    }
  };
  if (expected) c.experiment = *expected;
  if (const auto* e = get("experiment.type")) {
    c.experiment = parse_experiment(e->value, e->line);
    if (expected && c.experiment != *expected) {
      throw ConfigError(std::string("file describes ") + to_string(c.experiment) + ", expected " +
                            to_string(*expected),
                        e->line, "experiment.type");
    }
  }
  apply_experiment_defaults(c);
  if (const auto* e = get("experiment.methods")) c.methods = parse_methods(e->value, e->line);
  if (const auto* e = get("experiment.ladder")) {
    c.ladder = parse_ladder(e->value, e->line);
    for (const auto& r : c.ladder) {
      if (!(r.h > 0.0) || !(r.tau > 0.0)) {
        throw ConfigError("h and tau must be positive in every rung", e->line, "experiment.ladder");
      }
    }
  }
  num("experiment.T", c.T);
  if (const auto* e = get("experiment.seed")) {
    const auto v = detail::parse_integer("experiment.seed", *e);
    if (v < 0) throw ConfigError("must be nonnegative", e->line, "experiment.seed");
    c.seed = static_cast<std::uint64_t>(v);
  }
  if (const auto* e = get("experiment.threads")) {
    const auto v = detail::parse_integer("experiment.threads", *e);
    if (v < 0) throw ConfigError("must be nonnegative", e->line, "experiment.threads");
    c.threads = static_cast<unsigned>(v);
  }
  num("material.rho", c.material.rho);
  num("material.E", c.material.E);
  num("material.l", c.material.l);
  num("material.L", c.material.L);
  num("quadrature.D", c.D);
  num("quadrature.mt_regularization", c.mt_regularization, false);
  num("quadrature.gt_regularization", c.gt_regularization, false);
  num("reference.tol", c.exact_tol);
  if (const auto* e = get("wave_limit.l_values")) {
    c.l_values.clear();
    for (const auto& item : detail::split(e->value, ','))
      c.l_values.push_back(detail::parse_double("wave_limit.l_values", {item, e->line}));
  }
  num("spectral.M", c.spectral_M);
  if (const auto* e = get("spectral.N")) {
    c.spectral_N.clear();
    for (const auto& item : detail::split(e->value, ',')) {
      const auto v = detail::parse_integer("spectral.N", {item, e->line});
      if (v <= 0) throw ConfigError("mode counts must be positive", e->line, "spectral.N");
      c.spectral_N.push_back(static_cast<std::size_t>(v));
    }
  }
  num("spectral.t", c.spectral_t, false);
  num("spectral.window", c.spectral_window);
  num("nonlinear.epsilon", c.epsilon);
  if (const auto* e = get("nonlinear.horizon_nodes")) {
    const auto v = detail::parse_integer("nonlinear.horizon_nodes", *e);
    if (v < 1) throw ConfigError("must be at least 1", e->line, "nonlinear.horizon_nodes");
    c.horizon_nodes = static_cast<int>(v);
  }
  num("nonlinear.fp_tol", c.fp_tol);
  if (const auto* e = get("nonlinear.fp_max_iters")) {
    const auto v = detail::parse_integer("nonlinear.fp_max_iters", *e);
    if (v < 1) throw ConfigError("must be at least 1", e->line, "nonlinear.fp_max_iters");
    c.fp_max_iters = static_cast<std::size_t>(v);
  }
  if (const auto* e = get("custom.scheme")) {
    const auto v = detail::lower(e->value);
    if (v == "midpoint") c.custom_scheme = QuadratureScheme::MidpointRule;
    else if (v == "gauss2" || v == "gauss") c.custom_scheme = QuadratureScheme::GaussTwoPoint;
    else throw ConfigError("expected midpoint or gauss2, got '" + e->value + "'", e->line, "custom.scheme");
  }
  if (const auto* e = get("custom.integrator")) {
    const auto v = detail::lower(e->value);
    if (v == "sv" || v == "stormer-verlet") c.custom_integrator = TimeMethod::StormerVerlet;
    else if (v == "im" || v == "implicit-midpoint") c.custom_integrator = TimeMethod::ImplicitMidpoint;
    else if (v == "trig2") c.custom_integrator = TimeMethod::Trig2;
    else if (v == "trig4") c.custom_integrator = TimeMethod::Trig4;
    else throw ConfigError("expected sv, im, trig2 or trig4, got '" + e->value + "'", e->line, "custom.integrator");
  }
  if (const auto* e = get("custom.regularization")) {
    c.custom_regularization = detail::parse_double("custom.regularization", *e);
  }
  if (const auto* e = get("output.dir")) c.output_dir = e->value;
  if (const auto* e = get("output.series")) c.write_series = detail::parse_bool("output.series", *e);

  // Report invariant violations against the line of the offending key.
  try {
    finalize(c);
  } catch (const ConfigError& err) {
    if (const auto* e = get(err.key()); e && err.line() == 0) {
      const std::string what = err.what();
      throw ConfigError(what.substr(what.rfind(": ") + 2), e->line, err.key());
    }
    throw;
  }
  return c;
}

[[nodiscard]] inline ExperimentConfig parse_config(const std::string& path,
                                                   std::optional<Experiment> expected = std::nullopt) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), expected);
}

}  // namespace pdwave::harness
