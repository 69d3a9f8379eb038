#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "hardening/evolution.hpp"
#include "hardening/probe.hpp"

namespace hardening {

/// Scenario file contents could not be turned into a configuration.
class ParseError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A symmetric fourth-order tensor as written in a scenario file.
///
///   {"type": "identity"}
///   {"type": "scaled", "scale": s}
///   {"type": "isotropic", "dev": a, "vol": b}       a P_dev + b P_vol
///   {"type": "lame", "shear": G, "lambda": l}       compliance of (G, l)
///   {"type": "matrix", "mandel": [[...], ...]}
struct TensorSpec {
  std::string type = "identity";
  double scale = 1.0;
  double dev = 1.0;
  double vol = 1.0;
  double shear = 1.0;
  double lambda = 0.0;
  std::vector<std::vector<double>> mandel;

  Tensor4Sym build(int dim) const;
  nlohmann::json to_json() const;
  static TensorSpec from_json(const nlohmann::json& j, const std::string& field);
  bool operator==(const TensorSpec&) const = default;
};

/// Fully resolved scenario file: every default is filled in.
struct ScenarioConfig {
  std::string name;
  HardeningModel model = HardeningModel::kinematic;
  int dim = 2;
  int n = 8;
  double final_time = 1.0;
  int steps = 16;
  std::vector<double> mu;
  bool mu_is_list = false;
  double kappa = 1.0;
  double c1 = 0.0;
  TensorSpec elastic;
  TensorSpec hardening;           // kinematic model
  double hardening_modulus = 1.0; // isotropic model
  BoundaryMode boundary = BoundaryMode::mixed;
  nlohmann::json data;
  double eps0 = 0.1;
  double h0 = 0.25;
  CutoffSide cutoff_side = CutoffSide::neumann;
  std::vector<ProbeSpec> probes;
  FitWindow window;
  double delta = 0.05;
  int record_every = 1;
  SolverOptions solver;
  /// Allows sweeps with dt > mu_min / 2.
  bool allow_coarse_dt = false;

  double dt() const { return final_time / steps; }
  bool operator==(const ScenarioConfig&) const = default;
};

ScenarioConfig parse_scenario(const nlohmann::json& doc,
                              const std::string& default_name = "scenario");
/// Throws IoError when the file cannot be read, ParseError on bad content.
ScenarioConfig parse_scenario_file(const std::filesystem::path& path);

/// The resolved configuration as a scenario document.
nlohmann::json to_json(const ScenarioConfig& config);

/// Largest C1 compatible with A, H and kappa.
double admissible_c1(HardeningModel model, const Tensor4Sym& compliance,
                     const Tensor4Sym& kinematic_hardening, double modulus,
                     double kappa);

MaterialParams material_params(const ScenarioConfig& config, double mu);
Scenario build_scenario(const ScenarioConfig& config, double mu);
ProbeConfig probe_config(const ScenarioConfig& config);

struct Violation {
  std::string code;
  std::string message;
};

/// Empty when the scenario is runnable.
std::vector<Violation> validate(const ScenarioConfig& config);

}  // namespace hardening
