#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "hardening/probe.hpp"
#include "hardening/scenario.hpp"

namespace hardening {

struct ReportOptions {
  /// 17 significant digits in every CSV cell.
  bool reproducible = false;
};

/// Everything written for one run directory.
struct RunReport {
  ScenarioConfig config;
  double mu = 0.0;
  EnergyReport energy;
  NewtonSummary newton;
  SafetyLoadReport safety;
  std::optional<ProbeReport> probes;
  double runtime_seconds = 0.0;
};

std::string format_number(double value, const ReportOptions& options);

/// File name of a table inside a run directory, e.g. "table_normal_stress_sup.csv".
std::string table_filename(const SeminormTable& table);

nlohmann::json to_json(const ExponentTargets& targets);
nlohmann::json to_json(const EnergyReport& energy);
nlohmann::json to_json(const NewtonSummary& newton);
nlohmann::json to_json(const SafetyLoadReport& safety);
nlohmann::json to_json(const ProbeReport& probes);
nlohmann::json summary_json(const RunReport& report);
nlohmann::json summary_json(const UniformityReport& sweep);

void write_energy_csv(const std::filesystem::path& path,
                      const std::vector<StepRecord>& records,
                      const ReportOptions& options);
void write_table_csv(const std::filesystem::path& path, const SeminormTable& table,
                     const ReportOptions& options);

/// report.json, meta.json, energy.csv and one CSV per table.
/// Throws IoError naming the offending path.
void emit_report(const RunReport& report, const std::filesystem::path& out_dir,
                 const ReportOptions& options);

/// Subdirectory name of one sweep run, e.g. "mu_0.001".
std::string sweep_dirname(double mu);

/// sweep_summary.json plus meta.json; per-run directories are written by the
/// caller through emit_report.
void emit_sweep_summary(const ScenarioConfig& config, const UniformityReport& sweep,
                        const std::filesystem::path& out_dir, double runtime_seconds);

}  // namespace hardening
