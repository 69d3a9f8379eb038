#include <optional>
#include <string>

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "hardening/errors.hpp"
#include "hardening/report.hpp"
#include "hardening/scenario.hpp"

namespace py = pybind11;
using namespace hardening;

namespace {

ScenarioConfig load(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("invalid JSON: ") + e.what());
  }
  return parse_scenario(doc);
}

HardeningModel model_from(const std::string& name) {
  if (name == "kinematic" || name == "k") return HardeningModel::kinematic;
  if (name == "isotropic" || name == "i") return HardeningModel::isotropic;
  throw std::invalid_argument("model must be kinematic or isotropic, got " + name);
}

std::vector<std::pair<std::string, std::string>> validate_text(const std::string& text) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& v : validate(load(text))) out.emplace_back(v.code, v.message);
  return out;
}

std::string normalize(const std::string& text) { return to_json(load(text)).dump(); }

std::string run_text(const std::string& text, std::optional<double> mu, bool probes) {
  const ScenarioConfig config = load(text);
  const auto violations = validate(config);
  if (!violations.empty()) {
    throw ValidationError(violations.front().code + ": " + violations.front().message);
  }
  RunReport report;
  report.config = config;
  report.mu = mu.value_or(config.mu.front());
  const Scenario scenario = build_scenario(config, report.mu);
  report.safety = safety_load_check(scenario);
  const FieldHistory history = run(scenario);
  report.energy = energy_diagnostics(history, scenario);
  report.newton = history.newton_summary();
  if (probes) report.probes = run_probes(history, probe_config(config));
  return summary_json(report).dump();
}

std::string targets_text(int dim, const std::string& model, const std::string& side) {
  return to_json(target_exponents(dim, model_from(model), cutoff_side_from_string(side))).dump();
}

py::dict local_update_py(const Eigen::MatrixXd& stress, const Eigen::MatrixXd& increment,
                         double dt, const std::string& model, double kappa, double mu,
                         double shear, double lambda, double modulus,
                         std::optional<Eigen::MatrixXd> back_stress, double iso_hardening) {
  if (stress.rows() != stress.cols() || stress.rows() < 2 || stress.rows() > 3 ||
      increment.rows() != stress.rows() || increment.cols() != stress.cols()) {
    throw std::invalid_argument("stress and increment must be matching 2x2 or 3x3 matrices");
  }
  const int dim = static_cast<int>(stress.rows());
  MaterialParams p;
  p.model = model_from(model);
  p.compliance = Tensor4Sym::lame_compliance(dim, shear, lambda);
  p.kinematic_hardening = Tensor4Sym::scaled_identity(dim, modulus);
  p.isotropic_modulus = modulus;
  p.kappa = kappa;
  p.mu = mu;
  ConstitutiveState prev = ConstitutiveState::initial(SymTensor2::from_matrix(stress));
  if (back_stress) prev.back_stress = SymTensor2::from_matrix(*back_stress);
  prev.iso_hardening = iso_hardening;
  const LocalSolution s =
      solve_local(prev, SymTensor2::from_matrix(increment), dt, Material(p));
  py::dict out;
  out["stress"] = s.state.stress.to_matrix();
  out["back_stress"] = s.state.back_stress.to_matrix();
  out["iso_hardening"] = s.state.iso_hardening;
  out["plastic_strain"] = s.state.plastic_strain.to_matrix();
  out["plastic"] = s.plastic;
  out["iterations"] = s.iterations;
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Viscoplastic hardening solver core";

  py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
  py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
  py::register_exception<SolverError>(m, "SolverError", PyExc_RuntimeError);
  py::register_exception<IoError>(m, "IoError", PyExc_OSError);

  m.def("validate", &validate_text, py::arg("scenario_json"),
        "List of (code, message) violations; empty when runnable.");
  m.def("normalize", &normalize, py::arg("scenario_json"),
        "Scenario with every default filled in, as JSON text.");
  m.def("run", &run_text, py::arg("scenario_json"), py::arg("mu") = py::none(),
        py::arg("probes") = true, py::call_guard<py::gil_scoped_release>(),
        "Run one scenario and return the report summary as JSON text.");
  m.def("targets", &targets_text, py::arg("d"), py::arg("model"),
        py::arg("side") = "neumann");
  m.def("local_update", &local_update_py, py::arg("stress"), py::arg("increment"),
        py::arg("dt"), py::arg("model") = "kinematic", py::arg("kappa") = 1.0,
        py::arg("mu") = 1e-2, py::arg("shear") = 1.0, py::arg("lambda_") = 1.0,
        py::arg("modulus") = 1.0, py::arg("back_stress") = py::none(),
        py::arg("iso_hardening") = 0.0);
}
