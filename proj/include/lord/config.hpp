#pragma once

// Run configuration: a YAML document describing the model, the dose space,
// the design problems to solve and the optimizer settings. See
// docs/config.md for the format.

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <yaml-cpp/yaml.h>

#include "lord/cr_model.hpp"
#include "lord/design_problems.hpp"
#include "lord/pso.hpp"
#include "lord/scenarios.hpp"

namespace lord {

/// Environment variable overriding the default optimizer seed.
inline constexpr const char* kSeedEnv = "LORD_SEED";

class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& what, int line = -1, int column = -1)
      : std::runtime_error(line >= 0 ? what + " (line " + std::to_string(line + 1) +
                                           ", column " + std::to_string(column + 1) + ")"
                                     : what),
        line_(line),
        column_(column) {}

  /// Zero-based position of the offending node, -1 when unknown.
  int line() const noexcept { return line_; }
  int column() const noexcept { return column_; }

 private:
  int line_;
  int column_;
};

enum class SpaceKind { Continuous, Discrete };

inline const char* to_string(SpaceKind k) {
  return k == SpaceKind::Continuous ? "continuous" : "discrete";
}

struct ProblemSpec {
  std::string label;
  Criterion criterion = Criterion::D;
  Restriction restriction = Restriction::MtdCap;
  SpaceKind space = SpaceKind::Continuous;
  /// Log-scale overrides of the run-level dose space.
  std::optional<std::vector<double>> grid;
  std::optional<DoseInterval> interval;
  std::optional<MinEdDefinition> mined;
  /// Label of another problem; adds D/c efficiencies relative to its design.
  std::optional<std::string> compare_to;

  friend bool operator==(const ProblemSpec&, const ProblemSpec&) = default;
};

/// Labels of the designs anchoring D- and c-efficiencies per space kind.
struct ReferenceSpec {
  std::string continuous_d = "I";
  std::string continuous_c = "III";
  std::string discrete_d = "I'";
  std::string discrete_c = "III'";

  friend bool operator==(const ReferenceSpec&, const ReferenceSpec&) = default;
};

struct OutputSpec {
  std::string directory = "lord-report";
  bool json = true;
  bool csv = true;

  friend bool operator==(const OutputSpec&, const OutputSpec&) = default;
};

struct RunConfig {
  /// Preset name when theta came from a preset, empty otherwise.
  std::string scenario;
  ThetaParams theta;
  std::vector<double> grid = scenarios::standard_grid();
  DoseInterval interval = scenarios::interval();
  double gamma = scenarios::kGamma;
  MinEdDefinition mined = NeutralProbability{scenarios::kDelta};
  std::vector<ProblemSpec> problems;
  PsoConfig pso;
  ReferenceSpec references;
  bool rwr = false;
  std::size_t sensitivity_samples = 2001;
  OutputSpec output;

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

/// Conventional label for a problem: I..IV, primed on a grid.
inline std::string conventional_label(Criterion c, Restriction r, SpaceKind k) {
  static const char* names[] = {"I", "II", "III", "IV"};
  const int i = (c == Criterion::C ? 2 : 0) + (r == Restriction::TherapeuticWindow ? 1 : 0);
  return std::string(names[i]) + (k == SpaceKind::Discrete ? "'" : "");
}

/// Parses "I".."IV" with an optional trailing prime.
inline std::optional<ProblemSpec> problem_from_label(std::string_view label) {
  ProblemSpec p;
  p.label = std::string(label);
  if (!label.empty() && label.back() == '\'') {
    p.space = SpaceKind::Discrete;
    label.remove_suffix(1);
  }
  if (label == "I") {
    p.criterion = Criterion::D;
    p.restriction = Restriction::MtdCap;
  } else if (label == "II") {
    p.criterion = Criterion::D;
    p.restriction = Restriction::TherapeuticWindow;
  } else if (label == "III") {
    p.criterion = Criterion::C;
    p.restriction = Restriction::MtdCap;
  } else if (label == "IV") {
    p.criterion = Criterion::C;
    p.restriction = Restriction::TherapeuticWindow;
  } else {
    return std::nullopt;
  }
  return p;
}

namespace detail {

inline ConfigError config_error(const YAML::Node& node, const std::string& what) {
  const auto m = node.Mark();
  return ConfigError(what, m.is_null() ? -1 : m.line, m.is_null() ? -1 : m.column);
}

inline void check_keys(const YAML::Node& node, const std::string& where,
                       std::initializer_list<std::string_view> allowed) {
  if (!node.IsMap()) throw config_error(node, where + " must be a mapping");
  for (const auto& kv : node) {
    const auto key = kv.first.as<std::string>();
    bool ok = false;
    for (const auto a : allowed) ok = ok || key == a;
    if (!ok) throw config_error(kv.first, "unknown key '" + key + "' in " + where);
  }
}

template <class T>
T scalar(const YAML::Node& node, const std::string& field) {
  try {
    return node.as<T>();
  } catch (const YAML::Exception&) {
    throw config_error(node, "invalid value for '" + field + "'");
  }
}

inline std::vector<double> number_list(const YAML::Node& node, const std::string& field) {
  if (!node.IsSequence()) throw config_error(node, "'" + field + "' must be a list");
  std::vector<double> out;
  for (const auto& v : node) out.push_back(scalar<double>(v, field));
  return out;
}

inline std::vector<double> to_log_scale(std::vector<double> values, bool raw,
                                        const YAML::Node& node, const std::string& field) {
  if (!raw) return values;
  for (auto& v : values) {
    if (!(v > 0.0)) throw config_error(node, "'" + field + "' raw doses must be positive");
    v = std::log(v);
  }
  return values;
}

inline DoseGrid checked_grid(std::vector<double> x, const YAML::Node& node,
                             const std::string& field) {
  DoseGrid g{std::move(x)};
  try {
    g.validate();
  } catch (const DomainError& e) {
    throw config_error(node, "'" + field + "': " + e.what());
  }
  return g;
}

inline DoseInterval checked_interval(const std::vector<double>& v, const YAML::Node& node,
                                     const std::string& field) {
  if (v.size() != 2) throw config_error(node, "'" + field + "' must be [lo, hi]");
  DoseInterval iv{v[0], v[1]};
  try {
    iv.validate();
  } catch (const DomainError& e) {
    throw config_error(node, "'" + field + "': " + e.what());
  }
  return iv;
}

inline MinEdDefinition parse_mined(const YAML::Node& node, const std::string& where) {
  check_keys(node, where, {"kind", "level"});
  if (!node["kind"] || !node["level"])
    throw config_error(node, where + " requires 'kind' and 'level'");
  const auto kind = scalar<std::string>(node["kind"], where + ".kind");
  const double level = scalar<double>(node["level"], where + ".level");
  if (!(level > 0.0 && level < 1.0))
    throw config_error(node["level"], "'" + where + ".level' must lie in (0, 1)");
  if (kind == "neutral") return NeutralProbability{level};
  if (kind == "conditional_efficacy") return ConditionalEfficacy{level};
  throw config_error(node["kind"],
                     "'" + where + ".kind' must be 'neutral' or 'conditional_efficacy'");
}

inline Criterion parse_criterion(const YAML::Node& node) {
  const auto s = scalar<std::string>(node, "criterion");
  if (s == "D" || s == "d") return Criterion::D;
  if (s == "c" || s == "C") return Criterion::C;
  throw config_error(node, "'criterion' must be 'D' or 'c'");
}

inline Restriction parse_restriction(const YAML::Node& node) {
  const auto s = scalar<std::string>(node, "restriction");
  if (s == "mtd_cap") return Restriction::MtdCap;
  if (s == "therapeutic_window") return Restriction::TherapeuticWindow;
  throw config_error(node, "'restriction' must be 'mtd_cap' or 'therapeutic_window'");
}

inline SpaceKind parse_space_kind(const YAML::Node& node) {
  const auto s = scalar<std::string>(node, "space");
  if (s == "continuous") return SpaceKind::Continuous;
  if (s == "discrete") return SpaceKind::Discrete;
  throw config_error(node, "'space' must be 'continuous' or 'discrete'");
}

inline std::uint64_t default_seed() {
  if (const char* env = std::getenv(kSeedEnv)) {
    try {
      std::size_t used = 0;
      const auto v = std::stoull(env, &used);
      if (used == std::string_view(env).size()) return v;
    } catch (const std::exception&) {
    }
    throw ConfigError(std::string(kSeedEnv) + " is not an unsigned integer");
  }
  return PsoConfig{}.seed;
}

inline PsoConfig parse_pso(const YAML::Node& node) {
  PsoConfig c;
  c.seed = default_seed();
  if (!node) return c;
  check_keys(node, "pso",
             {"swarm_size", "max_iters", "c1", "c2", "w_start", "w_end", "relaxation", "seed",
              "restarts", "stall_iters", "rel_tol", "threads"});
  if (node["swarm_size"]) c.swarm_size = scalar<int>(node["swarm_size"], "pso.swarm_size");
  if (node["max_iters"]) c.max_iters = scalar<int>(node["max_iters"], "pso.max_iters");
  if (node["c1"]) c.cognitive = scalar<double>(node["c1"], "pso.c1");
  if (node["c2"]) c.social = scalar<double>(node["c2"], "pso.c2");
  if (node["w_start"]) c.inertia.w_start = scalar<double>(node["w_start"], "pso.w_start");
  if (node["w_end"]) c.inertia.w_end = scalar<double>(node["w_end"], "pso.w_end");
  if (node["relaxation"])
    c.inertia.relaxation = scalar<double>(node["relaxation"], "pso.relaxation");
  if (node["seed"]) c.seed = scalar<std::uint64_t>(node["seed"], "pso.seed");
  if (node["restarts"]) c.restarts = scalar<int>(node["restarts"], "pso.restarts");
  if (node["stall_iters"])
    c.stop.stall_iters = scalar<int>(node["stall_iters"], "pso.stall_iters");
  if (node["rel_tol"]) c.stop.rel_tol = scalar<double>(node["rel_tol"], "pso.rel_tol");
  if (node["threads"]) c.threads = scalar<unsigned>(node["threads"], "pso.threads");
  try {
    c.validate();
  } catch (const DomainError& e) {
    throw config_error(node, std::string("pso: ") + e.what());
  }
  return c;
}

inline ProblemSpec parse_problem(const YAML::Node& node, bool raw_scale) {
  if (node.IsScalar()) {
    const auto label = node.as<std::string>();
    auto p = problem_from_label(label);
    if (!p) throw config_error(node, "unknown problem label '" + label + "'");
    return *p;
  }
  check_keys(node, "problem",
             {"label", "criterion", "restriction", "space", "grid", "interval", "mined",
              "compare_to"});
  ProblemSpec p;
  if (!node["criterion"] || !node["restriction"] || !node["space"])
    throw config_error(node, "problem requires 'criterion', 'restriction' and 'space'");
  p.criterion = parse_criterion(node["criterion"]);
  p.restriction = parse_restriction(node["restriction"]);
  p.space = parse_space_kind(node["space"]);
  p.label = node["label"] ? scalar<std::string>(node["label"], "label")
                          : conventional_label(p.criterion, p.restriction, p.space);
  if (node["grid"]) {
    auto x = to_log_scale(number_list(node["grid"], "grid"), raw_scale, node["grid"], "grid");
    p.grid = checked_grid(std::move(x), node["grid"], "grid").x;
  }
  if (node["interval"]) {
    auto v = to_log_scale(number_list(node["interval"], "interval"), raw_scale,
                          node["interval"], "interval");
    p.interval = checked_interval(v, node["interval"], "interval");
  }
  if (node["mined"]) p.mined = parse_mined(node["mined"], "problem.mined");
  if (node["compare_to"]) p.compare_to = scalar<std::string>(node["compare_to"], "compare_to");
  return p;
}

}  // namespace detail

inline RunConfig parse_config(const YAML::Node& root) {
  using namespace detail;
  RunConfig c;
  if (!root || root.IsNull()) throw ConfigError("configuration is empty");
  check_keys(root, "configuration",
             {"scenario", "theta", "dose_space", "gamma", "mined", "problems", "pso",
              "references", "rwr", "sensitivity_samples", "output"});

  if (root["scenario"]) {
    c.scenario = scalar<std::string>(root["scenario"], "scenario");
    const auto t = scenarios::preset(c.scenario);
    if (!t) throw config_error(root["scenario"], "unknown scenario '" + c.scenario + "'");
    c.theta = *t;
  }
  if (root["theta"]) {
    const auto v = number_list(root["theta"], "theta");
    if (v.size() != 4) throw config_error(root["theta"], "'theta' must have 4 entries");
    c.theta = {v[0], v[1], v[2], v[3]};
    if (!c.scenario.empty() && scenarios::preset(c.scenario) != c.theta) c.scenario.clear();
  }
  if (!root["scenario"] && !root["theta"])
    throw ConfigError("configuration requires 'scenario' or 'theta'");
  try {
    c.theta.validate();
  } catch (const DomainError& e) {
    throw config_error(root["theta"] ? root["theta"] : root["scenario"],
                       std::string("'theta': ") + e.what());
  }

  bool raw = false;
  if (const auto ds = root["dose_space"]) {
    check_keys(ds, "dose_space", {"scale", "grid", "interval"});
    if (ds["scale"]) {
      const auto s = scalar<std::string>(ds["scale"], "dose_space.scale");
      if (s != "log" && s != "raw")
        throw config_error(ds["scale"], "'dose_space.scale' must be 'log' or 'raw'");
      raw = s == "raw";
    }
    if (ds["grid"]) {
      auto x = to_log_scale(number_list(ds["grid"], "dose_space.grid"), raw, ds["grid"],
                            "dose_space.grid");
      c.grid = checked_grid(std::move(x), ds["grid"], "dose_space.grid").x;
      c.interval = {c.grid.front(), c.grid.back()};
    }
    if (ds["interval"]) {
      auto v = to_log_scale(number_list(ds["interval"], "dose_space.interval"), raw,
                            ds["interval"], "dose_space.interval");
      c.interval = checked_interval(v, ds["interval"], "dose_space.interval");
    }
  }

  if (root["gamma"]) {
    c.gamma = scalar<double>(root["gamma"], "gamma");
    if (!(c.gamma > 0.0 && c.gamma < 1.0))
      throw config_error(root["gamma"], "'gamma' must lie in (0, 1)");
  }
  if (root["mined"]) c.mined = parse_mined(root["mined"], "mined");

  if (const auto ps = root["problems"]) {
    if (!ps.IsSequence()) throw config_error(ps, "'problems' must be a list");
    std::set<std::string> seen;
    for (const auto& p : ps) {
      c.problems.push_back(parse_problem(p, raw));
      if (!seen.insert(c.problems.back().label).second)
        throw config_error(p, "duplicate problem label '" + c.problems.back().label + "'");
    }
    for (std::size_t i = 0; i < c.problems.size(); ++i) {
      const auto& cmp = c.problems[i].compare_to;
      if (cmp && !seen.count(*cmp))
        throw config_error(ps[i], "'compare_to' names unknown problem '" + *cmp + "'");
    }
  }

  c.pso = parse_pso(root["pso"]);

  if (const auto r = root["references"]) {
    check_keys(r, "references", {"continuous_d", "continuous_c", "discrete_d", "discrete_c"});
    if (r["continuous_d"]) c.references.continuous_d = scalar<std::string>(r["continuous_d"], "references.continuous_d");
    if (r["continuous_c"]) c.references.continuous_c = scalar<std::string>(r["continuous_c"], "references.continuous_c");
    if (r["discrete_d"]) c.references.discrete_d = scalar<std::string>(r["discrete_d"], "references.discrete_d");
    if (r["discrete_c"]) c.references.discrete_c = scalar<std::string>(r["discrete_c"], "references.discrete_c");
  }
  if (root["rwr"]) c.rwr = scalar<bool>(root["rwr"], "rwr");
  if (root["sensitivity_samples"]) {
    const auto n = scalar<long long>(root["sensitivity_samples"], "sensitivity_samples");
    if (n < 2) throw config_error(root["sensitivity_samples"], "'sensitivity_samples' must be >= 2");
    c.sensitivity_samples = static_cast<std::size_t>(n);
  }
  if (const auto o = root["output"]) {
    check_keys(o, "output", {"directory", "formats"});
    if (o["directory"]) c.output.directory = scalar<std::string>(o["directory"], "output.directory");
    if (o["formats"]) {
      if (!o["formats"].IsSequence()) throw config_error(o["formats"], "'output.formats' must be a list");
      c.output.json = c.output.csv = false;
      for (const auto& f : o["formats"]) {
        const auto s = scalar<std::string>(f, "output.formats");
        if (s == "json") c.output.json = true;
        else if (s == "csv") c.output.csv = true;
        else throw config_error(f, "unknown output format '" + s + "'");
      }
    }
  }
  return c;
}

inline RunConfig parse_config_string(const std::string& text) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ConfigError("parse error: " + e.msg, e.mark.line, e.mark.column);
  }
  return parse_config(root);
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open configuration file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_string(ss.str());
}

namespace detail {

inline void emit_mined(YAML::Emitter& out, const MinEdDefinition& m) {
  out << YAML::BeginMap;
  out << YAML::Key << "kind" << YAML::Value
      << (std::holds_alternative<NeutralProbability>(m) ? "neutral" : "conditional_efficacy");
  out << YAML::Key << "level" << YAML::Value << mined_level(m);
  out << YAML::EndMap;
}

inline void emit_list(YAML::Emitter& out, const std::vector<double>& v) {
  out << YAML::Flow << YAML::BeginSeq;
  for (const double x : v) out << x;
  out << YAML::EndSeq;
}

}  // namespace detail

/// Canonical YAML for `c` on the log scale; parse_config_string inverts it.
inline std::string write_config(const RunConfig& c) {
  using detail::emit_list;
  YAML::Emitter out;
  out.SetDoublePrecision(17);
  out << YAML::BeginMap;
  if (!c.scenario.empty()) out << YAML::Key << "scenario" << YAML::Value << c.scenario;
  out << YAML::Key << "theta" << YAML::Value;
  emit_list(out, {c.theta.theta1, c.theta.theta2, c.theta.theta3, c.theta.theta4});
  out << YAML::Key << "dose_space" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "scale" << YAML::Value << "log";
  out << YAML::Key << "grid" << YAML::Value;
  emit_list(out, c.grid);
  out << YAML::Key << "interval" << YAML::Value;
  emit_list(out, {c.interval.lo, c.interval.hi});
  out << YAML::EndMap;
  out << YAML::Key << "gamma" << YAML::Value << c.gamma;
  out << YAML::Key << "mined" << YAML::Value;
  detail::emit_mined(out, c.mined);

  out << YAML::Key << "problems" << YAML::Value << YAML::BeginSeq;
  for (const auto& p : c.problems) {
    out << YAML::BeginMap;
    out << YAML::Key << "label" << YAML::Value << p.label;
    out << YAML::Key << "criterion" << YAML::Value << to_string(p.criterion);
    out << YAML::Key << "restriction" << YAML::Value << to_string(p.restriction);
    out << YAML::Key << "space" << YAML::Value << to_string(p.space);
    if (p.grid) {
      out << YAML::Key << "grid" << YAML::Value;
      emit_list(out, *p.grid);
    }
    if (p.interval) {
      out << YAML::Key << "interval" << YAML::Value;
      emit_list(out, {p.interval->lo, p.interval->hi});
    }
    if (p.mined) {
      out << YAML::Key << "mined" << YAML::Value;
      detail::emit_mined(out, *p.mined);
    }
    if (p.compare_to) out << YAML::Key << "compare_to" << YAML::Value << *p.compare_to;
    out << YAML::EndMap;
  }
  out << YAML::EndSeq;

  const auto& s = c.pso;
  out << YAML::Key << "pso" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "swarm_size" << YAML::Value << s.swarm_size;
  out << YAML::Key << "max_iters" << YAML::Value << s.max_iters;
  out << YAML::Key << "c1" << YAML::Value << s.cognitive;
  out << YAML::Key << "c2" << YAML::Value << s.social;
  out << YAML::Key << "w_start" << YAML::Value << s.inertia.w_start;
  out << YAML::Key << "w_end" << YAML::Value << s.inertia.w_end;
  out << YAML::Key << "relaxation" << YAML::Value << s.inertia.relaxation;
  out << YAML::Key << "seed" << YAML::Value << s.seed;
  out << YAML::Key << "restarts" << YAML::Value << s.restarts;
  out << YAML::Key << "stall_iters" << YAML::Value << s.stop.stall_iters;
  out << YAML::Key << "rel_tol" << YAML::Value << s.stop.rel_tol;
  out << YAML::Key << "threads" << YAML::Value << s.threads;
  out << YAML::EndMap;

  out << YAML::Key << "references" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "continuous_d" << YAML::Value << c.references.continuous_d;
  out << YAML::Key << "continuous_c" << YAML::Value << c.references.continuous_c;
  out << YAML::Key << "discrete_d" << YAML::Value << c.references.discrete_d;
  out << YAML::Key << "discrete_c" << YAML::Value << c.references.discrete_c;
  out << YAML::EndMap;

  out << YAML::Key << "rwr" << YAML::Value << c.rwr;
  out << YAML::Key << "sensitivity_samples" << YAML::Value << c.sensitivity_samples;
  out << YAML::Key << "output" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "directory" << YAML::Value << c.output.directory;
  out << YAML::Key << "formats" << YAML::Value << YAML::Flow << YAML::BeginSeq;
  if (c.output.json) out << "json";
  if (c.output.csv) out << "csv";
  out << YAML::EndSeq << YAML::EndMap;
  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

}  // namespace lord
