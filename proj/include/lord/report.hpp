#pragma once

// Batch execution of a RunConfig and JSON/CSV export of the results.

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "lord/config.hpp"
#include "lord/design_problems.hpp"
#include "lord/evaluation.hpp"

namespace lord {

inline constexpr const char* kToolName = "lord";
inline constexpr const char* kToolVersion = "1.0.0";

inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitGetViolation = 2;

struct RelativeEfficiency {
  std::string reference;
  double d_eff = 0.0;
  double c_eff = 0.0;
};

struct ProblemOutcome {
  ProblemSpec spec;
  /// Solved only because another design's efficiencies refer to it.
  bool reference_only = false;
  std::optional<std::string> error;

  DoseInterval bounds;
  std::vector<double> admissible;  // grid problems only
  DesignMeasure design;
  double criterion_value = 0.0;
  int iterations = 0;
  int restart_index = 0;
  SensitivityCurve sensitivity;
  bool get_pass = false;

  std::optional<EfficiencyReport> efficiency;
  std::optional<std::string> efficiency_error;
  std::optional<RelativeEfficiency> relative;

  bool solved() const noexcept { return !error.has_value(); }
};

struct TargetsBlock {
  std::optional<TargetDoses> continuous;
  std::optional<DiscreteTargets> discrete;
  std::optional<std::string> error;
};

struct RwrBlock {
  DesignMeasure allocation;
  std::optional<EfficiencyReport> efficiency;
  std::optional<std::string> error;
};

struct Provenance {
  std::uint64_t seed = 0;
  std::string config_hash;
  std::string timestamp;
};

struct RunReport {
  RunConfig config;
  Provenance provenance;
  TargetsBlock targets;
  std::vector<ProblemOutcome> problems;
  std::optional<RwrBlock> rwr;

  const ProblemOutcome* find(const std::string& label) const {
    for (const auto& p : problems)
      if (p.spec.label == label) return &p;
    return nullptr;
  }

  /// 1 if any problem failed, else 2 if any design failed GET, else 0.
  int exit_code() const {
    bool violated = false;
    for (const auto& p : problems) {
      if (!p.solved()) return kExitError;
      violated = violated || !p.get_pass;
    }
    return violated ? kExitGetViolation : kExitOk;
  }
};

struct RunOptions {
  /// Fixed timestamp for reproducible output; current UTC time when empty.
  std::optional<std::string> timestamp;
};

namespace detail {

inline std::string fnv1a_hex(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

inline std::string utc_now() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline DoseGrid problem_grid(const RunConfig& c, const ProblemSpec& p) {
  return DoseGrid{p.grid ? *p.grid : c.grid};
}

inline DoseSpace problem_space(const RunConfig& c, const ProblemSpec& p) {
  if (p.space == SpaceKind::Discrete) return problem_grid(c, p);
  if (p.interval) return *p.interval;
  if (p.grid) return DoseGrid{*p.grid}.hull();
  return c.interval;
}

inline const std::string& reference_label(const RunConfig& c, SpaceKind k, Criterion crit) {
  if (k == SpaceKind::Continuous)
    return crit == Criterion::D ? c.references.continuous_d : c.references.continuous_c;
  return crit == Criterion::D ? c.references.discrete_d : c.references.discrete_c;
}

inline ProblemOutcome solve_outcome(const RunConfig& c, const ProblemSpec& spec) {
  ProblemOutcome out;
  out.spec = spec;
  try {
    const auto problem = build_problem(spec.criterion, spec.restriction, problem_space(c, spec),
                                       c.theta, c.gamma, spec.mined ? *spec.mined : c.mined);
    out.bounds = problem.bounds;
    out.admissible = problem.admissible.doses;
    const ProblemObjective objective(problem);
    const auto r = optimize(objective, encoding_for(problem), c.pso);
    out.design = r.best_design;
    out.criterion_value = r.best_value;
    out.iterations = r.iterations_run;
    out.restart_index = r.restart_index;
    out.sensitivity =
        spec.criterion == Criterion::D
            ? sensitivity_d(out.design, c.theta, problem.restricted_space(), c.sensitivity_samples)
            : sensitivity_c(out.design, c.theta, objective.c(), problem.restricted_space(),
                            c.sensitivity_samples);
    out.get_pass = out.sensitivity.passes();
  } catch (const std::exception& e) {
    out.error = e.what();
  }
  return out;
}

}  // namespace detail

/// Solves a single problem of `config` and runs its GET check.
inline ProblemOutcome solve_problem(const RunConfig& config, const ProblemSpec& spec) {
  return detail::solve_outcome(config, spec);
}

inline RunReport run(const RunConfig& config, const RunOptions& options = {}) {
  RunReport report;
  report.config = config;
  report.provenance.seed = config.pso.seed;
  report.provenance.config_hash = detail::fnv1a_hex(write_config(config));
  report.provenance.timestamp = options.timestamp ? *options.timestamp : detail::utc_now();

  try {
    report.targets.continuous = target_doses(config.theta, config.gamma, config.mined);
    report.targets.discrete =
        discrete_targets(config.theta, DoseGrid{config.grid}, config.gamma, config.mined);
  } catch (const std::exception& e) {
    report.targets.error = e.what();
  }

  // Reference designs are solved first; missing ones are added on demand.
  std::vector<ProblemSpec> plan;
  std::map<std::string, bool> listed;
  for (const auto& p : config.problems) listed[p.label] = true;
  bool need[2] = {false, false};
  for (const auto& p : config.problems) need[p.space == SpaceKind::Discrete] = true;
  if (config.rwr) need[1] = true;
  for (const SpaceKind k : {SpaceKind::Continuous, SpaceKind::Discrete}) {
    if (!need[k == SpaceKind::Discrete]) continue;
    for (const Criterion crit : {Criterion::D, Criterion::C}) {
      const auto& label = detail::reference_label(config, k, crit);
      if (listed.count(label)) continue;
      auto spec = problem_from_label(label);
      if (!spec) throw ConfigError("reference design '" + label + "' is not a known problem");
      plan.push_back(*spec);
      listed[label] = false;
    }
  }
  std::vector<bool> auto_ref(plan.size(), true);
  for (const auto& p : config.problems) {
    plan.push_back(p);
    auto_ref.push_back(false);
  }

  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < plan.size(); ++i) {
    report.problems.push_back(detail::solve_outcome(config, plan[i]));
    report.problems.back().reference_only = auto_ref[i];
    index[plan[i].label] = i;
  }

  std::optional<CVector> c;
  std::string c_error;
  try {
    c = c_vector(config.theta);
  } catch (const std::exception& e) {
    c_error = e.what();
  }

  const auto evaluate = [&](const DesignMeasure& xi, SpaceKind k, const DoseGrid& grid,
                            std::optional<EfficiencyReport>& eff,
                            std::optional<std::string>& err) {
    if (!c) {
      err = c_error;
      return;
    }
    const auto& rd = report.problems[index.at(detail::reference_label(config, k, Criterion::D))];
    const auto& rc = report.problems[index.at(detail::reference_label(config, k, Criterion::C))];
    if (!rd.solved() || !rc.solved()) {
      err = "reference design unavailable";
      return;
    }
    try {
      eff = efficiencies(xi, config.theta, rd.design, rc.design, *c, grid);
    } catch (const std::exception& e) {
      err = e.what();
    }
  };

  for (auto& p : report.problems) {
    if (!p.solved()) continue;
    const DoseGrid grid = p.spec.space == SpaceKind::Discrete
                              ? detail::problem_grid(config, p.spec)
                              : DoseGrid{config.grid};
    evaluate(p.design, p.spec.space, grid, p.efficiency, p.efficiency_error);
    if (p.spec.compare_to) {
      const auto& other = report.problems[index.at(*p.spec.compare_to)];
      if (other.solved() && c) {
        try {
          p.relative = RelativeEfficiency{*p.spec.compare_to,
                                          d_efficiency(p.design, other.design, config.theta),
                                          c_efficiency(p.design, other.design, config.theta, *c)};
        } catch (const std::exception&) {
        }
      }
    }
  }

  if (config.rwr) {
    RwrBlock b;
    try {
      b.allocation = rwr_stationary(config.theta, DoseGrid{config.grid}, config.gamma);
      evaluate(b.allocation, SpaceKind::Discrete, DoseGrid{config.grid}, b.efficiency, b.error);
    } catch (const std::exception& e) {
      b.error = e.what();
    }
    report.rwr = b;
  }
  return report;
}

// JSON export

namespace detail {

using nlohmann::ordered_json;

inline ordered_json number(double v) {
  if (!std::isfinite(v)) return nullptr;
  return v;
}

inline ordered_json design_json(const DesignMeasure& xi) {
  ordered_json pts = ordered_json::array();
  for (std::size_t i = 0; i < xi.size(); ++i)
    pts.push_back({{"dose", number(xi.points[i])}, {"weight", number(xi.weights[i])}});
  return pts;
}

inline ordered_json efficiency_json(const EfficiencyReport& e) {
  return {{"d_eff", number(e.d_eff)}, {"c_eff", number(e.c_eff)}, {"delta", number(e.delta)},
          {"s", number(e.s)},         {"score", number(e.score)}};
}

inline ordered_json curve_json(const std::vector<CurvePoint>& pts) {
  ordered_json a = ordered_json::array();
  for (const auto& p : pts) a.push_back({number(p.dose), number(p.value)});
  return a;
}

inline ordered_json mined_json(const MinEdDefinition& m) {
  return {{"kind", std::holds_alternative<NeutralProbability>(m) ? "neutral"
                                                                 : "conditional_efficacy"},
          {"level", mined_level(m)}};
}

inline ordered_json problem_json(const ProblemOutcome& p) {
  ordered_json j;
  j["label"] = p.spec.label;
  j["criterion"] = to_string(p.spec.criterion);
  j["restriction"] = to_string(p.spec.restriction);
  j["space"] = to_string(p.spec.space);
  j["reference_only"] = p.reference_only;
  j["status"] = !p.solved() ? "error" : (p.get_pass ? "ok" : "get_violation");
  j["error"] = p.error ? ordered_json(*p.error) : ordered_json(nullptr);
  if (!p.solved()) return j;
  j["bounds"] = {number(p.bounds.lo), number(p.bounds.hi)};
  j["admissible"] = p.admissible;
  j["design"] = design_json(p.design);
  j["criterion_value"] = number(p.criterion_value);
  j["iterations"] = p.iterations;
  j["restart_index"] = p.restart_index;
  j["sensitivity"] = {{"max_violation", number(p.sensitivity.max_violation)},
                      {"max_abs_residual", number(p.sensitivity.max_abs_residual())},
                      {"tolerance", kGetTolerance},
                      {"passes", p.get_pass},
                      {"residuals", curve_json(p.sensitivity.design_point_residuals)},
                      {"samples", curve_json(p.sensitivity.samples)}};
  j["efficiency"] = p.efficiency ? efficiency_json(*p.efficiency) : ordered_json(nullptr);
  j["efficiency_error"] =
      p.efficiency_error ? ordered_json(*p.efficiency_error) : ordered_json(nullptr);
  if (p.relative)
    j["relative"] = {{"reference", p.relative->reference},
                     {"d_eff", number(p.relative->d_eff)},
                     {"c_eff", number(p.relative->c_eff)}};
  else
    j["relative"] = nullptr;
  return j;
}

}  // namespace detail

inline nlohmann::ordered_json to_json(const RunReport& r) {
  using detail::number;
  using detail::ordered_json;
  const auto& c = r.config;
  ordered_json j;
  j["provenance"] = {{"tool", kToolName},
                     {"version", kToolVersion},
                     {"seed", r.provenance.seed},
                     {"config_hash", r.provenance.config_hash},
                     {"timestamp", r.provenance.timestamp}};
  j["model"] = {{"scenario", c.scenario.empty() ? ordered_json(nullptr) : ordered_json(c.scenario)},
                {"theta", {c.theta.theta1, c.theta.theta2, c.theta.theta3, c.theta.theta4}},
                {"gamma", c.gamma},
                {"mined", detail::mined_json(c.mined)},
                {"grid", c.grid},
                {"interval", {c.interval.lo, c.interval.hi}}};

  ordered_json t;
  if (r.targets.continuous) {
    const auto& td = *r.targets.continuous;
    t["continuous"] = {{"mined", number(td.mined)}, {"obd", number(td.obd)},
                       {"mted", number(td.mted)}};
  } else {
    t["continuous"] = nullptr;
  }
  if (r.targets.discrete) {
    const auto& d = *r.targets.discrete;
    // 1-based positions on the grid
    t["discrete"] = {{"mined", d.mined + 1}, {"obd", d.obd + 1}, {"mted", d.mted + 1}};
  } else {
    t["discrete"] = nullptr;
  }
  t["error"] = r.targets.error ? ordered_json(*r.targets.error) : ordered_json(nullptr);
  j["targets"] = t;

  j["problems"] = ordered_json::array();
  for (const auto& p : r.problems) j["problems"].push_back(detail::problem_json(p));

  if (r.rwr) {
    j["rwr"] = {{"allocation", detail::design_json(r.rwr->allocation)},
                {"efficiency", r.rwr->efficiency ? detail::efficiency_json(*r.rwr->efficiency)
                                                 : ordered_json(nullptr)},
                {"error", r.rwr->error ? ordered_json(*r.rwr->error) : ordered_json(nullptr)}};
  } else {
    j["rwr"] = nullptr;
  }
  j["exit_code"] = r.exit_code();
  return j;
}

// CSV export

/// Column headers of each CSV table, keyed by file stem.
inline const std::map<std::string, std::string>& csv_headers() {
  static const std::map<std::string, std::string> h{
      {"targets", "target,continuous,grid_position,grid_dose"},
      {"designs", "problem,point,dose,weight"},
      {"verification", "problem,criterion,status,max_violation,max_abs_residual"},
      {"efficiencies", "design,d_eff,c_eff,delta,s,score"},
      {"radar", "scenario,design,d_eff,c_eff,s"},
      {"relative", "problem,reference,d_eff,c_eff"},
      {"sensitivity", "problem,dose,value"},
  };
  return h;
}

namespace detail {

inline std::string fmt(double v) {
  if (!std::isfinite(v)) return "";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

}  // namespace detail

/// CSV tables as {file stem, contents}.
inline std::map<std::string, std::string> to_csv(const RunReport& r) {
  using detail::fmt;
  std::map<std::string, std::ostringstream> s;
  for (const auto& [stem, header] : csv_headers()) s[stem] << header << '\n';

  const auto& grid = r.config.grid;
  if (r.targets.continuous && r.targets.discrete) {
    const auto& td = *r.targets.continuous;
    const auto& dt = *r.targets.discrete;
    const auto row = [&](const char* name, double v, std::size_t i) {
      s["targets"] << name << ',' << fmt(v) << ',' << i + 1 << ',' << fmt(grid[i]) << '\n';
    };
    row("MinED", td.mined, dt.mined);
    row("OBD", td.obd, dt.obd);
    row("MTD", td.mted, dt.mted);
  }

  const std::string scenario = r.config.scenario.empty() ? "custom" : r.config.scenario;
  const auto eff_rows = [&](const std::string& name, const EfficiencyReport& e) {
    s["efficiencies"] << name << ',' << fmt(e.d_eff) << ',' << fmt(e.c_eff) << ','
                      << fmt(e.delta) << ',' << fmt(e.s) << ',' << fmt(e.score) << '\n';
    s["radar"] << scenario << ',' << name << ',' << fmt(e.d_eff) << ',' << fmt(e.c_eff) << ','
               << fmt(e.s) << '\n';
  };

  for (const auto& p : r.problems) {
    const auto& label = p.spec.label;
    if (!p.solved()) {
      s["verification"] << label << ',' << to_string(p.spec.criterion) << ",error,,\n";
      continue;
    }
    for (std::size_t i = 0; i < p.design.size(); ++i)
      s["designs"] << label << ',' << i + 1 << ',' << fmt(p.design.points[i]) << ','
                   << fmt(p.design.weights[i]) << '\n';
    s["verification"] << label << ',' << to_string(p.spec.criterion) << ','
                      << (p.get_pass ? "ok" : "get_violation") << ','
                      << fmt(p.sensitivity.max_violation) << ','
                      << fmt(p.sensitivity.max_abs_residual()) << '\n';
    if (p.efficiency) eff_rows(label, *p.efficiency);
    if (p.relative)
      s["relative"] << label << ',' << p.relative->reference << ',' << fmt(p.relative->d_eff)
                    << ',' << fmt(p.relative->c_eff) << '\n';
    for (const auto& pt : p.sensitivity.samples)
      s["sensitivity"] << label << ',' << fmt(pt.dose) << ',' << fmt(pt.value) << '\n';
  }
  if (r.rwr && r.rwr->efficiency) eff_rows("RWR", *r.rwr->efficiency);

  std::map<std::string, std::string> out;
  for (auto& [stem, os] : s) out[stem] = os.str();
  return out;
}

/// Writes report.json and/or the CSV tables under `dir`; returns the paths.
inline std::vector<std::filesystem::path> export_report(const RunReport& r,
                                                        const std::filesystem::path& dir,
                                                        bool json, bool csv) {
  std::vector<std::filesystem::path> written;
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create directory '" + dir.string() + "': " + ec.message());
  const auto write = [&](const std::filesystem::path& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    f << text;
    f.close();
    if (!f) throw std::runtime_error("cannot write '" + path.string() + "'");
    written.push_back(path);
  };
  if (json) write(dir / "report.json", to_json(r).dump(2) + "\n");
  if (csv)
    for (const auto& [stem, text] : to_csv(r)) write(dir / (stem + ".csv"), text);
  return written;
}

inline std::vector<std::filesystem::path> export_report(const RunReport& r) {
  return export_report(r, r.config.output.directory, r.config.output.json, r.config.output.csv);
}

}  // namespace lord
