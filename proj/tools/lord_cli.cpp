#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "lord/config.hpp"
#include "lord/report.hpp"

namespace {

struct ModelOptions {
  std::string config;
  std::string scenario;
  std::vector<double> theta;
  std::optional<double> gamma;
  std::string mined_kind;
  std::optional<double> mined_level;
  std::vector<double> grid;
  bool raw = false;
  std::optional<std::uint64_t> seed;

  void add_to(CLI::App* app) {
    app->add_option("-c,--config", config, "configuration file")->check(CLI::ExistingFile);
    app->add_option("-s,--scenario", scenario, "preset scenario (A, B, C or D)");
    app->add_option("--theta", theta, "explicit parameters theta1 theta2 theta3 theta4")
        ->expected(4);
    app->add_option("--gamma", gamma, "target toxicity level");
    app->add_option("--mined-kind", mined_kind, "neutral or conditional_efficacy");
    app->add_option("--mined-level", mined_level, "MinED defining level");
    app->add_option("--grid", grid, "dose grid");
    app->add_flag("--raw", raw, "grid doses are raw (natural log applied)");
    app->add_option("--seed", seed, "optimizer seed");
  }

  lord::RunConfig build() const {
    lord::RunConfig c;
    if (!config.empty()) {
      c = lord::load_config(config);
    } else {
      c.pso.seed = lord::detail::default_seed();
      if (scenario.empty() && theta.empty())
        throw lord::ConfigError("either --config, --scenario or --theta is required");
    }
    if (!scenario.empty()) {
      const auto t = lord::scenarios::preset(scenario);
      if (!t) throw lord::ConfigError("unknown scenario '" + scenario + "'");
      c.scenario = scenario;
      c.theta = *t;
    }
    if (!theta.empty()) {
      c.scenario.clear();
      c.theta = {theta[0], theta[1], theta[2], theta[3]};
    }
    c.theta.validate();
    if (gamma) c.gamma = *gamma;
    if (!mined_kind.empty() || mined_level) {
      const std::string kind = mined_kind.empty() ? "neutral" : mined_kind;
      const double level = mined_level ? *mined_level : lord::mined_level(c.mined);
      if (kind == "neutral")
        c.mined = lord::NeutralProbability{level};
      else if (kind == "conditional_efficacy")
        c.mined = lord::ConditionalEfficacy{level};
      else
        throw lord::ConfigError("--mined-kind must be 'neutral' or 'conditional_efficacy'");
    }
    if (!grid.empty()) {
      auto x = grid;
      if (raw)
        for (auto& v : x) {
          if (!(v > 0.0)) throw lord::ConfigError("raw doses must be positive");
          v = std::log(v);
        }
      lord::DoseGrid{x}.validate();
      c.grid = x;
      c.interval = {x.front(), x.back()};
    }
    if (seed) c.pso.seed = *seed;
    return c;
  }
};

std::string fmt(double v, int prec = 4) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.*f", prec, v);
  return buf;
}

void print_design(const lord::DesignMeasure& xi) {
  for (std::size_t i = 0; i < xi.size(); ++i)
    std::cout << "  dose " << fmt(xi.points[i]) << "  weight " << fmt(xi.weights[i]) << '\n';
}

void print_get(const lord::SensitivityCurve& s) {
  std::cout << "GET: max phi " << std::scientific << s.max_violation
            << ", max |phi| at support " << s.max_abs_residual() << std::defaultfloat << " -> "
            << (s.passes() ? "pass" : "VIOLATED") << '\n';
}

lord::ProblemSpec problem_by_label(const lord::RunConfig& c, const std::string& label) {
  for (const auto& p : c.problems)
    if (p.label == label) return p;
  const auto p = lord::problem_from_label(label);
  if (!p) throw lord::ConfigError("unknown problem '" + label + "'");
  return *p;
}

int cmd_targets(const ModelOptions& m, bool json) {
  const auto c = m.build();
  const auto t = lord::target_doses(c.theta, c.gamma, c.mined);
  const auto d = lord::discrete_targets(c.theta, lord::DoseGrid{c.grid}, c.gamma, c.mined);
  if (json) {
    nlohmann::ordered_json j;
    j["continuous"] = {{"mined", t.mined}, {"obd", t.obd}, {"mted", t.mted}};
    j["discrete"] = {{"mined", d.mined + 1}, {"obd", d.obd + 1}, {"mted", d.mted + 1}};
    std::cout << j.dump(2) << '\n';
    return lord::kExitOk;
  }
  std::cout << "target  ln-dose    grid\n";
  const auto row = [&](const char* n, double v, std::size_t i) {
    std::cout << n << fmt(v) << "    x" << i + 1 << " (" << fmt(c.grid[i], 2) << ")\n";
  };
  row("MinED   ", t.mined, d.mined);
  row("OBD     ", t.obd, d.obd);
  row("MTD     ", t.mted, d.mted);
  if (t.window_empty()) std::cout << "therapeutic window is empty\n";
  return lord::kExitOk;
}

int cmd_solve(const ModelOptions& m, const std::string& label, const std::string& out) {
  auto c = m.build();
  const auto spec = problem_by_label(c, label);
  const auto r = lord::solve_problem(c, spec);
  if (!r.solved()) {
    std::cerr << "error: " << *r.error << '\n';
    return lord::kExitError;
  }
  std::cout << "problem " << spec.label << " (" << lord::to_string(spec.criterion) << ", "
            << lord::to_string(spec.restriction) << ", " << lord::to_string(spec.space)
            << ") on [" << fmt(r.bounds.lo) << ", " << fmt(r.bounds.hi) << "]\n";
  print_design(r.design);
  std::cout << "criterion " << std::setprecision(10) << r.criterion_value
            << ", iterations " << r.iterations << ", best restart " << r.restart_index << '\n';
  print_get(r.sensitivity);
  if (!out.empty()) {
    c.problems = {spec};
    const auto report = lord::run(c);
    for (const auto& p : lord::export_report(report, out, true, true))
      std::cout << "wrote " << p.string() << '\n';
  }
  return r.get_pass ? lord::kExitOk : lord::kExitGetViolation;
}

void print_efficiency_table(const lord::RunReport& r) {
  std::cout << "design      d_eff   c_eff   delta   s       score\n";
  const auto row = [](const std::string& name, const lord::EfficiencyReport& e) {
    std::string n = name;
    n.resize(10, ' ');
    std::cout << n << "  " << fmt(e.d_eff, 3) << "   " << fmt(e.c_eff, 3) << "   "
              << fmt(e.delta, 3) << "   " << fmt(e.s, 3) << "   " << fmt(e.score, 3) << '\n';
  };
  for (const auto& p : r.problems)
    if (p.efficiency) row(p.spec.label, *p.efficiency);
  if (r.rwr && r.rwr->efficiency) row("RWR", *r.rwr->efficiency);
}

int cmd_batch(const std::string& path, const std::optional<std::uint64_t>& seed,
              const std::string& out, const std::string& timestamp, bool quiet) {
  auto c = lord::load_config(path);
  if (seed) c.pso.seed = *seed;
  if (!out.empty()) c.output.directory = out;
  lord::RunOptions opts;
  if (!timestamp.empty()) opts.timestamp = timestamp;
  const auto report = lord::run(c, opts);
  const auto files = lord::export_report(report);
  if (!quiet) {
    for (const auto& p : report.problems) {
      std::cout << p.spec.label << (p.reference_only ? " (reference)" : "") << ": ";
      if (!p.solved()) {
        std::cout << "error: " << *p.error << '\n';
        continue;
      }
      std::cout << (p.get_pass ? "GET ok" : "GET VIOLATED") << ", " << p.design.size()
                << " points\n";
      print_design(p.design);
    }
    for (const auto& f : files) std::cout << "wrote " << f.string() << '\n';
  }
  return report.exit_code();
}

lord::DesignMeasure parse_design(const std::string& text) {
  lord::DesignMeasure xi;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto colon = item.find(':');
    if (colon == std::string::npos)
      throw lord::ConfigError("design entries must be dose:weight, got '" + item + "'");
    try {
      xi.points.push_back(std::stod(item.substr(0, colon)));
      xi.weights.push_back(std::stod(item.substr(colon + 1)));
    } catch (const std::exception&) {
      throw lord::ConfigError("invalid design entry '" + item + "'");
    }
  }
  return xi;
}

int cmd_verify(const ModelOptions& m, const std::string& label, const std::string& design,
               bool normalize) {
  const auto c = m.build();
  const auto spec = problem_by_label(c, label);
  auto xi = parse_design(design);
  if (normalize) {
    const double total = xi.total_weight();
    for (auto& w : xi.weights) w /= total;
  }
  xi.validate();
  const auto p = lord::build_problem(spec.criterion, spec.restriction,
                                     lord::detail::problem_space(c, spec), c.theta, c.gamma,
                                     spec.mined ? *spec.mined : c.mined);
  for (const double d : xi.points) {
    const auto region = p.restricted_space();
    bool inside = p.bounds.contains(d);
    if (const auto* g = std::get_if<lord::DoseGrid>(&region))
      inside = std::find(g->x.begin(), g->x.end(), d) != g->x.end();
    if (!inside)
      std::cout << "warning: dose " << fmt(d) << " lies outside the restricted space\n";
  }
  const auto s = spec.criterion == lord::Criterion::D
                     ? lord::sensitivity_d(xi, c.theta, p.restricted_space(), c.sensitivity_samples)
                     : lord::sensitivity_c(xi, c.theta, lord::c_vector(c.theta),
                                           p.restricted_space(), c.sensitivity_samples);
  std::cout << "problem " << spec.label << " on [" << fmt(p.bounds.lo) << ", "
            << fmt(p.bounds.hi) << "]\n";
  for (const auto& r : s.design_point_residuals)
    std::cout << "  phi(" << fmt(r.dose) << ") = " << std::scientific << r.value
              << std::defaultfloat << '\n';
  print_get(s);
  return s.passes() ? lord::kExitOk : lord::kExitGetViolation;
}

int cmd_compare(const std::string& path, const std::optional<std::uint64_t>& seed,
                const std::string& out) {
  auto c = lord::load_config(path);
  if (seed) c.pso.seed = *seed;
  c.rwr = true;
  const auto report = lord::run(c);
  print_efficiency_table(report);
  for (const auto& p : report.problems)
    if (p.relative)
      std::cout << p.spec.label << " vs " << p.relative->reference << ": d_eff "
                << fmt(p.relative->d_eff, 3) << ", c_eff " << fmt(p.relative->c_eff, 3) << '\n';
  if (report.rwr && report.rwr->error) std::cout << "RWR: " << *report.rwr->error << '\n';
  if (!out.empty())
    for (const auto& f : lord::export_report(report, out, true, true))
      std::cout << "wrote " << f.string() << '\n';
  return report.exit_code();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Locally optimal restricted designs for the continuation-ratio model"};
  app.require_subcommand(1);
  app.set_version_flag("--version", lord::kToolVersion);

  ModelOptions targets_opts, solve_opts, verify_opts;
  bool targets_json = false;
  auto* targets = app.add_subcommand("targets", "print MinED, OBD and MTD");
  targets_opts.add_to(targets);
  targets->add_flag("--json", targets_json, "print JSON");

  std::string solve_problem_label, solve_out;
  auto* solve = app.add_subcommand("solve", "solve one design problem");
  solve_opts.add_to(solve);
  solve->add_option("-p,--problem", solve_problem_label, "problem label, e.g. I or III'")
      ->required();
  solve->add_option("-o,--out", solve_out, "also write report files to this directory");

  std::string batch_path, batch_out, batch_timestamp;
  std::optional<std::uint64_t> batch_seed;
  bool batch_quiet = false;
  auto* batch = app.add_subcommand("batch", "run every problem of a configuration");
  batch->add_option("config", batch_path, "configuration file")->required()->check(
      CLI::ExistingFile);
  batch->add_option("--seed", batch_seed, "optimizer seed");
  batch->add_option("-o,--out", batch_out, "output directory");
  batch->add_option("--timestamp", batch_timestamp, "fixed provenance timestamp");
  batch->add_flag("-q,--quiet", batch_quiet, "suppress the summary");

  std::string verify_label, verify_design;
  bool verify_normalize = false;
  auto* verify = app.add_subcommand("verify", "GET check of a given design");
  verify_opts.add_to(verify);
  verify->add_option("-p,--problem", verify_label, "problem label")->required();
  verify->add_option("-d,--design", verify_design, "design as dose:weight,dose:weight,...")
      ->required();
  verify->add_flag("--normalize", verify_normalize, "rescale weights to sum to 1");

  std::string compare_path, compare_out;
  std::optional<std::uint64_t> compare_seed;
  auto* compare = app.add_subcommand("compare", "efficiency and score table including RWR");
  compare->add_option("config", compare_path, "configuration file")->required()->check(
      CLI::ExistingFile);
  compare->add_option("--seed", compare_seed, "optimizer seed");
  compare->add_option("-o,--out", compare_out, "write report files to this directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : lord::kExitError;
  }

  try {
    if (*targets) return cmd_targets(targets_opts, targets_json);
    if (*solve) return cmd_solve(solve_opts, solve_problem_label, solve_out);
    if (*batch) return cmd_batch(batch_path, batch_seed, batch_out, batch_timestamp, batch_quiet);
    if (*verify) return cmd_verify(verify_opts, verify_label, verify_design, verify_normalize);
    if (*compare) return cmd_compare(compare_path, compare_seed, compare_out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return lord::kExitError;
  }
  return lord::kExitError;
}
