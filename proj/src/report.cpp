#include "hardening/report.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <set>

#include <fmt/format.h>

#include "hardening/errors.hpp"

namespace hardening {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json finite_or_null(double v) {
  if (std::isfinite(v)) return v;
  return nullptr;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw IoError(fmt::format("cannot create directory {}: {}", dir.string(),
                              ec ? ec.message() : "not a directory"));
  }
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << text;
  out.flush();
  if (!out) throw IoError("failed writing " + path.string());
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

json fit_json(const ProbeFit& f) {
  json j{{"target", f.target}, {"target_minus_delta", f.target_minus_delta}};
  if (f.fit) {
    j["status"] = f.fit->status == FitResult::Status::fitted ? "fitted"
                                                              : "identically_regular";
    j["s_hat"] = finite_or_null(f.fit->s_hat);
    j["r2"] = finite_or_null(f.fit->r2);
    j["rows_used"] = f.fit->rows_used;
    j["zero_rows"] = f.fit->zero_rows;
    j["h_min"] = f.fit->h_min;
    j["h_max"] = f.fit->h_max;
    j["margin"] = finite_or_null(f.margin);
    j["pass"] = f.fit->status == FitResult::Status::identically_regular || f.margin >= 0.0;
  } else {
    j["status"] = "unfitted";
    j["error"] = f.error;
  }
  return j;
}

}  // namespace

std::string format_number(double value, const ReportOptions& options) {
  if (options.reproducible) return fmt::format("{:.16e}", value);
  return fmt::format("{:.9e}", value);
}

std::string table_filename(const SeminormTable& table) {
  std::string axis = table.axis.name();
  std::string suffix;
  const bool weighted = table.cutoff != "none";
  if (table.axis.kind == AxisKind::time && weighted) suffix = "_weighted";
  if (table.axis.kind != AxisKind::time && !weighted) suffix = "_unweighted";
  return fmt::format("table_{}_{}_{}{}.csv", axis, table.field, to_string(table.mode),
                     suffix);
}

json to_json(const ExponentTargets& t) {
  return json{{"d", t.dim},
              {"model", to_string(t.model)},
              {"side", to_string(t.side)},
              {"stress_normal", t.stress_normal},
              {"rate_time", t.rate_time},
              {"rate_tangential", t.rate_tangential},
              {"rate_normal", t.rate_normal},
              {"alpha", t.alpha},
              {"beta_p3", t.beta_degenerate ? json(nullptr) : json(t.beta)},
              {"lambda_p3", t.beta_degenerate ? json(nullptr) : json(t.lambda)},
              {"beta_degenerate", t.beta_degenerate}};
}

json to_json(const EnergyReport& e) {
  return json{{"sup_stress_rate", e.sup_stress_rate},
              {"sup_hardening_rate", e.sup_hardening_rate},
              {"sup_velocity_h1", e.sup_velocity_h1},
              {"max_overshoot", e.max_overshoot},
              {"final_penalty_energy", e.final_penalty_energy},
              {"final_dissipation", e.final_dissipation},
              {"final_overshoot_l2", e.final_overshoot_l2},
              {"energy_bound", e.energy_bound}};
}

json to_json(const NewtonSummary& n) {
  return json{{"total", n.total}, {"max", n.max}, {"mean", n.mean}};
}

json to_json(const SafetyLoadReport& s) {
  return json{{"pass", s.pass},
              {"max_deviator", s.max_deviator},
              {"margin", s.margin},
              {"translated_margin", s.translated_margin}};
}

json to_json(const ProbeReport& p) {
  json j;
  j["targets"] = to_json(p.targets);
  json tables = json::array();
  for (std::size_t i = 0; i < p.tables.size(); ++i) {
    const SeminormTable& t = p.tables[i];
    json entry{{"axis", t.axis.name()},
               {"field", t.field},
               {"mode", to_string(t.mode)},
               {"cutoff", t.cutoff},
               {"file", table_filename(t)},
               {"rows", t.rows.size()},
               {"reference", t.reference}};
    entry["fit"] = fit_json(p.fits[i]);
    tables.push_back(entry);
  }
  j["tables"] = tables;
  if (p.interpolation) {
    const InterpolationReport& r = *p.interpolation;
    json rows = json::array();
    for (const auto& row : r.rows) {
      rows.push_back({{"multiple", row.multiple},
                      {"h", row.h},
                      {"lhs", row.lhs},
                      {"rhs", row.rhs},
                      {"ratio", finite_or_null(row.ratio)},
                      {"flagged", row.flagged}});
    }
    j["interpolation"] = {{"delta", r.delta},
                          {"spread", finite_or_null(r.spread)},
                          {"degenerate", r.degenerate},
                          {"rows", rows}};
  } else {
    j["interpolation"] = nullptr;
  }
  json strips = json::array();
  for (const auto& s : p.strips) {
    strips.push_back({{"multiple", s.multiple},
                      {"h", s.h},
                      {"normal_gradient_integral", s.normal_gradient_integral},
                      {"sym_gradient_integral", s.sym_gradient_integral}});
  }
  j["strips"] = strips;
  return j;
}

json summary_json(const RunReport& r) {
  json j;
  j["config"] = to_json(r.config);
  j["mu"] = r.mu;
  j["energy"] = to_json(r.energy);
  j["newton"] = to_json(r.newton);
  j["safety"] = to_json(r.safety);
  j["probes"] = r.probes ? to_json(*r.probes) : json(nullptr);
  return j;
}

json summary_json(const UniformityReport& s) {
  json runs = json::array();
  for (const auto& r : s.runs) {
    json entry{{"mu", r.mu}, {"ok", r.ok}, {"directory", sweep_dirname(r.mu)}};
    if (r.ok) {
      entry["energy"] = to_json(r.energy);
      entry["newton"] = to_json(r.newton);
      json fits = json::array();
      for (std::size_t i = 0; i < r.probes.tables.size(); ++i) {
        const SeminormTable& t = r.probes.tables[i];
        json f = fit_json(r.probes.fits[i]);
        f["axis"] = t.axis.name();
        f["field"] = t.field;
        f["mode"] = to_string(t.mode);
        fits.push_back(f);
      }
      entry["fits"] = fits;
    } else {
      entry["error"] = r.error;
    }
    runs.push_back(entry);
  }
  json spreads = json::object();
  for (const auto& [name, value] : s.spreads) spreads[name] = finite_or_null(value);
  json j{{"runs", runs}, {"spreads", spreads}};
  j["overshoot_l2_slope"] = s.overshoot_l2_slope ? json(*s.overshoot_l2_slope) : json(nullptr);
  j["overshoot_max_slope"] =
      s.overshoot_max_slope ? json(*s.overshoot_max_slope) : json(nullptr);
  return j;
}

void write_energy_csv(const fs::path& path, const std::vector<StepRecord>& records,
                      const ReportOptions& o) {
  std::string out =
      "step,time,newton_iterations,residual,penalty_energy,dissipation,"
      "stress_rate_l2,hardening_rate_l2,velocity_h1,overshoot_max,overshoot_l2,"
      "plastic_points,plastic_trace,kinematic_identity,iso_increment_min,"
      "trace_defect\n";
  for (const auto& r : records) {
    out += fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n", r.step,
                       format_number(r.time, o), r.newton_iterations,
                       format_number(r.residual, o), format_number(r.penalty_energy, o),
                       format_number(r.dissipation, o),
                       format_number(r.stress_rate_l2, o),
                       format_number(r.hardening_rate_l2, o),
                       format_number(r.velocity_h1, o), format_number(r.overshoot_max, o),
                       format_number(r.overshoot_l2, o), r.plastic_points,
                       format_number(r.plastic_trace, o),
                       format_number(r.kinematic_identity, o),
                       format_number(r.iso_increment_min, o),
                       format_number(r.trace_defect, o));
  }
  write_text(path, out);
}

void write_table_csv(const fs::path& path, const SeminormTable& t, const ReportOptions& o) {
  std::string out = "axis,field,mode,h,value\n";
  for (const auto& row : t.rows) {
    out += fmt::format("{},{},{},{},{}\n", t.axis.name(), t.field, to_string(t.mode),
                       format_number(row.h, o), format_number(row.value, o));
  }
  write_text(path, out);
}

void emit_report(const RunReport& r, const fs::path& dir, const ReportOptions& o) {
  ensure_dir(dir);
  json summary = summary_json(r);
  if (r.probes) {
    std::set<std::string> used;
    for (std::size_t i = 0; i < r.probes->tables.size(); ++i) {
      std::string name = table_filename(r.probes->tables[i]);
      if (!used.insert(name).second) {
        name = fmt::format("{}_{}.csv", name.substr(0, name.size() - 4), i);
        used.insert(name);
      }
      summary["probes"]["tables"][i]["file"] = name;
      write_table_csv(dir / name, r.probes->tables[i], o);
    }
  }
  write_text(dir / "report.json", summary.dump(2) + "\n");
  write_energy_csv(dir / "energy.csv", r.energy.series, o);
  const json meta{{"written_at", utc_timestamp()},
                  {"runtime_seconds", r.runtime_seconds},
                  {"reproducible", o.reproducible}};
  write_text(dir / "meta.json", meta.dump(2) + "\n");
}

std::string sweep_dirname(double mu) { return fmt::format("mu_{:g}", mu); }

void emit_sweep_summary(const ScenarioConfig& config, const UniformityReport& sweep,
                        const fs::path& dir, double runtime_seconds) {
  ensure_dir(dir);
  json j = summary_json(sweep);
  j["config"] = to_json(config);
  write_text(dir / "sweep_summary.json", j.dump(2) + "\n");
  const json meta{{"written_at", utc_timestamp()}, {"runtime_seconds", runtime_seconds}};
  write_text(dir / "meta.json", meta.dump(2) + "\n");
}

}  // namespace hardening
