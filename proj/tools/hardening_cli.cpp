#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "hardening/errors.hpp"
#include "hardening/report.hpp"
#include "hardening/scenario.hpp"

namespace fs = std::filesystem;
using namespace hardening;

namespace {

constexpr int kOk = 0;
constexpr int kValidation = 2;
constexpr int kSolver = 3;
constexpr int kIo = 4;

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

ScenarioConfig load_valid(const std::string& file) {
  ScenarioConfig config = parse_scenario_file(file);
  const auto violations = validate(config);
  if (!violations.empty()) {
    std::vector<std::string> lines;
    for (const auto& v : violations) lines.push_back(v.code + ": " + v.message);
    throw ValidationError(file + " is not runnable", lines);
  }
  return config;
}

int cmd_validate(const std::string& file) {
  const ScenarioConfig config = parse_scenario_file(file);
  const auto violations = validate(config);
  if (violations.empty()) {
    fmt::print("{}: ok (C1 = {:g}, dt = {:g})\n", config.name, config.c1, config.dt());
    return kOk;
  }
  for (const auto& v : violations) fmt::print("{}: {}: {}\n", config.name, v.code, v.message);
  return kValidation;
}

int cmd_run(const std::string& file, const std::string& out, bool reproducible,
            bool with_probes, std::optional<double> mu) {
  const auto start = std::chrono::steady_clock::now();
  const ScenarioConfig config = load_valid(file);
  RunReport report;
  report.config = config;
  report.mu = mu.value_or(config.mu.front());
  const Scenario scenario = build_scenario(config, report.mu);
  report.safety = safety_load_check(scenario);
  const FieldHistory history = run(scenario);
  report.energy = energy_diagnostics(history, scenario);
  report.newton = history.newton_summary();
  if (with_probes) report.probes = run_probes(history, probe_config(config));
  report.runtime_seconds = seconds_since(start);
  emit_report(report, out, ReportOptions{reproducible});
  fmt::print("{}: mu = {:g}, {} steps, {} Newton iterations, energy bound {:.6e}\n",
             config.name, report.mu, config.steps, report.newton.total,
             report.energy.energy_bound);
  if (report.probes) {
    for (std::size_t i = 0; i < report.probes->tables.size(); ++i) {
      const auto& t = report.probes->tables[i];
      const auto& f = report.probes->fits[i];
      if (f.fit && f.fit->status == FitResult::Status::identically_regular) {
        fmt::print("  {:<14} {:<17} {:<8} identically regular\n", t.axis.name(), t.field,
                   to_string(t.mode));
      } else if (f.fit) {
        fmt::print("  {:<14} {:<17} {:<8} s = {:.3f} (target {:.3f})\n", t.axis.name(),
                   t.field, to_string(t.mode), f.fit->s_hat, f.target_minus_delta);
      } else {
        fmt::print("  {:<14} {:<17} {:<8} no fit: {}\n", t.axis.name(), t.field,
                   to_string(t.mode), f.error);
      }
    }
  }
  fmt::print("wrote {}\n", out);
  return kOk;
}

int cmd_sweep(const std::string& file, const std::string& out, bool reproducible) {
  const auto start = std::chrono::steady_clock::now();
  const ScenarioConfig config = load_valid(file);
  const Scenario scenario = build_scenario(config, config.mu.front());
  const SafetyLoadReport safety = safety_load_check(scenario);
  const ReportOptions options{reproducible};
  auto last = std::chrono::steady_clock::now();
  const UniformityReport sweep = mu_sweep(
      scenario, config.mu, probe_config(config),
      [&](const SweepEntry& entry, const FieldHistory*) {
        const double elapsed = seconds_since(last);
        last = std::chrono::steady_clock::now();
        if (!entry.ok) {
          std::fprintf(stderr, "mu = %g failed: %s\n", entry.mu, entry.error.c_str());
          return;
        }
        RunReport r;
        r.config = config;
        r.mu = entry.mu;
        r.energy = entry.energy;
        r.newton = entry.newton;
        r.safety = safety;
        r.probes = entry.probes;
        r.runtime_seconds = elapsed;
        emit_report(r, fs::path(out) / sweep_dirname(entry.mu), options);
        std::fprintf(stderr, "mu = %g done (%.1f s)\n", entry.mu, elapsed);
      });
  emit_sweep_summary(config, sweep, out, seconds_since(start));
  for (const auto& [name, value] : sweep.spreads) fmt::print("  spread {:<40} {:.4f}\n", name, value);
  if (sweep.overshoot_l2_slope) {
    fmt::print("  overshoot L2 slope {:.4f}\n", *sweep.overshoot_l2_slope);
  }
  fmt::print("wrote {}\n", out);
  for (const auto& r : sweep.runs) {
    if (!r.ok) return kSolver;
  }
  return kOk;
}

int cmd_targets(int dim, const std::string& model, const std::string& boundary,
                const std::string& side) {
  if (dim != 2 && dim != 3) throw ParseError("--d: must be 2 or 3");
  HardeningModel m;
  if (model == "k" || model == "kinematic") {
    m = HardeningModel::kinematic;
  } else if (model == "i" || model == "isotropic") {
    m = HardeningModel::isotropic;
  } else {
    throw ParseError("--model: expected k or i");
  }
  const BoundaryMode mode = boundary_mode_from_string(boundary);
  CutoffSide s = mode == BoundaryMode::all_dirichlet ? CutoffSide::dirichlet
                                                     : CutoffSide::neumann;
  if (!side.empty()) s = cutoff_side_from_string(side);
  if (mode == BoundaryMode::all_dirichlet && s == CutoffSide::neumann) {
    throw ParseError("--side: an all-dirichlet boundary has no Neumann part");
  }
  if (mode == BoundaryMode::all_neumann_bottom && s == CutoffSide::dirichlet) {
    throw ParseError("--side: an all-neumann-bottom boundary has no Dirichlet part");
  }
  nlohmann::json j = to_json(target_exponents(dim, m, s));
  j["boundary_mode"] = to_string(mode);
  fmt::print("{}\n", j.dump(2));
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Elasto-plastic hardening solver and regularity probes"};
  app.require_subcommand(1);

  std::string file, out, side, boundary = "mixed", model = "k";
  bool reproducible = false;
  int dim = 2;
  std::optional<double> mu;

  auto* validate_cmd = app.add_subcommand("validate", "Check a scenario file");
  validate_cmd->add_option("file", file, "Scenario JSON")->required();

  auto* run_cmd = app.add_subcommand("run", "Run a scenario and write energy diagnostics");
  auto* probe_cmd = app.add_subcommand("probe", "Run a scenario and all regularity probes");
  auto* sweep_cmd = app.add_subcommand("sweep", "Run a scenario for every listed mu");
  for (auto* sub : {run_cmd, probe_cmd, sweep_cmd}) {
    sub->add_option("file", file, "Scenario JSON")->required();
    sub->add_option("--out", out, "Output directory")->required();
    sub->add_flag("--reproducible", reproducible, "17 significant digits in CSV output");
  }
  for (auto* sub : {run_cmd, probe_cmd}) {
    sub->add_option("--mu", mu, "Viscosity (defaults to the first listed value)");
  }

  auto* targets_cmd = app.add_subcommand("targets", "Print the exponent targets");
  targets_cmd->add_option("--d", dim, "Dimension")->required()->check(CLI::IsMember({2, 3}));
  targets_cmd->add_option("--model", model, "k or i")->required();
  targets_cmd->add_option("--boundary", boundary, "mixed | all-dirichlet | all-neumann-bottom");
  targets_cmd->add_option("--side", side, "neumann | dirichlet");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kValidation;
  }

  try {
    if (*validate_cmd) return cmd_validate(file);
    if (*run_cmd) return cmd_run(file, out, reproducible, false, mu);
    if (*probe_cmd) return cmd_run(file, out, reproducible, true, mu);
    if (*sweep_cmd) return cmd_sweep(file, out, reproducible);
    if (*targets_cmd) return cmd_targets(dim, model, boundary, side);
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    for (const auto& v : e.violations()) std::cerr << "  " << v << "\n";
    return kValidation;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kIo;
  } catch (const SolverError& e) {
    std::cerr << "solver error: " << e.what() << "\n";
    return kSolver;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kValidation;
  } catch (const std::exception& e) {
    std::cerr << "solver error: " << e.what() << "\n";
    return kSolver;
  }
  return kOk;
}
