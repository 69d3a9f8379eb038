#include "hardening/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include <fmt/format.h>

namespace hardening {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& field, const std::string& what) {
  throw ParseError(fmt::format("{}: {}", field, what));
}

void check_keys(const json& obj, const std::string& field,
                std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) fail(field, "expected an object");
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool known = false;
    for (const char* k : allowed) known = known || it.key() == k;
    if (!known) {
      fail(field.empty() ? it.key() : field + "." + it.key(), "unknown field");
    }
  }
}

double number(const json& obj, const char* key, const std::string& field) {
  const json& v = obj.at(key);
  if (!v.is_number()) fail(field, "expected a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) fail(field, "expected a finite number");
  return x;
}

double number_or(const json& obj, const char* key, const std::string& field,
                 double fallback) {
  return obj.contains(key) ? number(obj, key, field) : fallback;
}

int integer(const json& obj, const char* key, const std::string& field) {
  const json& v = obj.at(key);
  if (!v.is_number_integer()) fail(field, "expected an integer");
  return v.get<int>();
}

std::string string_of(const json& obj, const char* key, const std::string& field) {
  const json& v = obj.at(key);
  if (!v.is_string()) fail(field, "expected a string");
  return v.get<std::string>();
}

const json& require(const json& doc, const char* key) {
  if (!doc.contains(key)) fail(key, "required field is missing");
  return doc.at(key);
}

template <class F>
auto parse_enum(F&& f, const std::string& field, const std::string& value) {
  try {
    return f(value);
  } catch (const std::invalid_argument& e) {
    fail(field, e.what());
  }
}

std::vector<Violation> ellipticity_violations(const std::string& code,
                                              const std::string& label,
                                              const Tensor4Sym& t, double c1) {
  std::vector<Violation> out;
  try {
    const EllipticityReport r = check_ellipticity(t, c1);
    if (!r.pass) {
      out.push_back({code, fmt::format("{} violates the ellipticity bounds: "
                                       "eigenvalues [{:.6g}, {:.6g}] not within "
                                       "[C1, 1/C1] = [{:.6g}, {:.6g}]",
                                       label, r.lambda_min, r.lambda_max, c1,
                                       1.0 / c1)});
    }
  } catch (const std::invalid_argument& e) {
    out.push_back({code, label + ": " + e.what()});
  }
  return out;
}

}  // namespace

Tensor4Sym TensorSpec::build(int dim) const {
  if (type == "identity") return Tensor4Sym::identity(dim);
  if (type == "scaled") return Tensor4Sym::scaled_identity(dim, scale);
  if (type == "isotropic") return Tensor4Sym::isotropic(dim, dev, vol);
  if (type == "lame") return Tensor4Sym::lame_compliance(dim, shear, lambda);
  if (type == "matrix") {
    const int m = mandel_size(dim);
    if (static_cast<int>(mandel.size()) != m) {
      throw DimensionError(fmt::format("Mandel matrix must be {}x{}", m, m));
    }
    MandelMatrix mm(m, m);
    for (int i = 0; i < m; ++i) {
      if (static_cast<int>(mandel[i].size()) != m) {
        throw DimensionError(fmt::format("Mandel matrix must be {}x{}", m, m));
      }
      for (int k = 0; k < m; ++k) mm(i, k) = mandel[i][k];
    }
    return Tensor4Sym::from_mandel(dim, mm);
  }
  throw std::invalid_argument("unknown tensor type '" + type + "'");
}

json TensorSpec::to_json() const {
  json j{{"type", type}};
  if (type == "scaled") j["scale"] = scale;
  if (type == "isotropic") {
    j["dev"] = dev;
    j["vol"] = vol;
  }
  if (type == "lame") {
    j["shear"] = shear;
    j["lambda"] = lambda;
  }
  if (type == "matrix") j["mandel"] = mandel;
  return j;
}

TensorSpec TensorSpec::from_json(const json& j, const std::string& field) {
  check_keys(j, field, {"type", "scale", "dev", "vol", "shear", "lambda", "mandel"});
  TensorSpec t;
  t.type = j.contains("type") ? string_of(j, "type", field + ".type") : "identity";
  if (t.type == "identity") {
  } else if (t.type == "scaled") {
    t.scale = number(j, "scale", field + ".scale");
  } else if (t.type == "isotropic") {
    t.dev = number(j, "dev", field + ".dev");
    t.vol = number(j, "vol", field + ".vol");
  } else if (t.type == "lame") {
    t.shear = number(j, "shear", field + ".shear");
    t.lambda = number(j, "lambda", field + ".lambda");
  } else if (t.type == "matrix") {
    const json& m = j.at("mandel");
    if (!m.is_array()) fail(field + ".mandel", "expected an array of rows");
    for (const auto& row : m) {
      if (!row.is_array()) fail(field + ".mandel", "expected an array of rows");
      std::vector<double> r;
      for (const auto& v : row) {
        if (!v.is_number()) fail(field + ".mandel", "expected numbers");
        r.push_back(v.get<double>());
      }
      t.mandel.push_back(std::move(r));
    }
  } else {
    fail(field + ".type", "unknown tensor type '" + t.type + "'");
  }
  return t;
}

double admissible_c1(HardeningModel model, const Tensor4Sym& compliance,
                     const Tensor4Sym& kinematic_hardening, double modulus,
                     double kappa) {
  auto bound = [](const Tensor4Sym& t) {
    Eigen::SelfAdjointEigenSolver<MandelMatrix> eig(t.matrix(),
                                                    Eigen::EigenvaluesOnly);
    return std::min(eig.eigenvalues().minCoeff(), 1.0 / eig.eigenvalues().maxCoeff());
  };
  double c1 = std::min(bound(compliance), kappa);
  if (model == HardeningModel::kinematic) {
    c1 = std::min(c1, bound(kinematic_hardening));
  } else {
    c1 = std::min(c1, modulus);
  }
  return c1;
}

ScenarioConfig parse_scenario(const json& doc, const std::string& default_name) {
  if (!doc.is_object()) throw ParseError("scenario must be a JSON object");
  check_keys(doc, "",
             {"name", "model", "d", "n", "T", "N", "mu", "kappa", "c1", "elastic",
              "hardening", "boundary_mode", "data", "cutoff", "probes",
              "fit_window", "delta", "record_every", "solver", "allow_coarse_dt"});
  ScenarioConfig c;
  c.name = doc.contains("name") ? string_of(doc, "name", "name") : default_name;
  c.model = parse_enum(
      [](const std::string& s) {
        if (s == "kinematic") return HardeningModel::kinematic;
        if (s == "isotropic") return HardeningModel::isotropic;
        throw std::invalid_argument("expected \"kinematic\" or \"isotropic\"");
      },
      "model", string_of(require(doc, "model").is_string() ? doc : doc, "model", "model"));

  require(doc, "d");
  c.dim = integer(doc, "d", "d");
  if (c.dim != 2 && c.dim != 3) fail("d", "must be 2 or 3");
  require(doc, "n");
  c.n = integer(doc, "n", "n");
  if (c.n < 2) fail("n", "must be >= 2");
  require(doc, "T");
  c.final_time = number(doc, "T", "T");
  if (!(c.final_time > 0.0)) fail("T", "must be > 0");
  require(doc, "N");
  c.steps = integer(doc, "N", "N");
  if (c.steps < 1) fail("N", "must be >= 1");

  const json& mu = require(doc, "mu");
  if (mu.is_array()) {
    c.mu_is_list = true;
    if (mu.empty()) fail("mu", "list must not be empty");
    for (std::size_t i = 0; i < mu.size(); ++i) {
      if (!mu[i].is_number()) fail(fmt::format("mu[{}]", i), "expected a number");
      c.mu.push_back(mu[i].get<double>());
    }
  } else if (mu.is_number()) {
    c.mu.push_back(mu.get<double>());
  } else {
    fail("mu", "expected a number or a list of numbers");
  }
  for (std::size_t i = 0; i < c.mu.size(); ++i) {
    if (!(c.mu[i] > 0.0)) fail("mu", "values must be > 0");
    if (i > 0 && !(c.mu[i] < c.mu[i - 1])) fail("mu", "list must be strictly descending");
  }

  require(doc, "kappa");
  c.kappa = number(doc, "kappa", "kappa");
  if (!(c.kappa > 0.0)) fail("kappa", "must be > 0 (kappa >= C1 > 0)");

  if (doc.contains("elastic")) c.elastic = TensorSpec::from_json(doc["elastic"], "elastic");
  if (doc.contains("hardening")) {
    json h = doc["hardening"];
    check_keys(h, "hardening",
               {"type", "scale", "dev", "vol", "shear", "lambda", "mandel", "modulus"});
    if (h.contains("modulus")) {
      c.hardening_modulus = number(h, "modulus", "hardening.modulus");
      if (!(c.hardening_modulus > 0.0)) fail("hardening.modulus", "must be > 0");
      h.erase("modulus");
    }
    if (!h.empty()) c.hardening = TensorSpec::from_json(h, "hardening");
  }

  Tensor4Sym compliance = Tensor4Sym::identity(c.dim);
  Tensor4Sym kin = Tensor4Sym::identity(c.dim);
  try {
    compliance = c.elastic.build(c.dim);
  } catch (const std::invalid_argument& e) {
    fail("elastic", e.what());
  }
  try {
    kin = c.hardening.build(c.dim);
  } catch (const std::invalid_argument& e) {
    fail("hardening", e.what());
  }

  if (doc.contains("c1")) {
    c.c1 = number(doc, "c1", "c1");
    if (!(c.c1 > 0.0)) fail("c1", "must be > 0");
  } else {
    c.c1 = admissible_c1(c.model, compliance, kin, c.hardening_modulus, c.kappa);
    if (!(c.c1 > 0.0)) {
      fail("c1", "no positive C1 is admissible for the given tensors");
    }
  }

  if (doc.contains("boundary_mode")) {
    c.boundary = parse_enum(boundary_mode_from_string, "boundary_mode",
                            string_of(doc, "boundary_mode", "boundary_mode"));
  }

  const json& data = require(doc, "data");
  if (!data.is_object()) fail("data", "expected an object");
  try {
    c.data = make_generator(data, c.dim, compliance)->to_json();
  } catch (const ParseError&) {
    throw;
  } catch (const std::exception& e) {
    fail("data", e.what());
  }

  if (doc.contains("cutoff")) {
    const json& cut = doc["cutoff"];
    check_keys(cut, "cutoff", {"eps0", "h0", "side"});
    c.eps0 = number_or(cut, "eps0", "cutoff.eps0", c.eps0);
    c.h0 = number_or(cut, "h0", "cutoff.h0", c.h0);
    if (cut.contains("side")) {
      c.cutoff_side = parse_enum(cutoff_side_from_string, "cutoff.side",
                                 string_of(cut, "side", "cutoff.side"));
    }
  }
  try {
    Cutoff(c.dim, c.eps0, c.h0, c.cutoff_side);
  } catch (const std::invalid_argument& e) {
    fail("cutoff", e.what());
  }

  if (doc.contains("probes")) {
    const json& list = doc["probes"];
    if (!list.is_array()) fail("probes", "expected a list");
    for (std::size_t i = 0; i < list.size(); ++i) {
      const std::string f = fmt::format("probes[{}]", i);
      check_keys(list[i], f, {"axis", "field", "mode", "weighted"});
      ProbeSpec p;
      p.axis = parse_enum(AxisSpec::parse, f + ".axis", string_of(list[i], "axis", f + ".axis"));
      if (p.axis.kind == AxisKind::tangential && p.axis.index >= c.dim - 1) {
        fail(f + ".axis", "tangential axis index must be < d - 1");
      }
      p.field = parse_enum(probe_field_from_string, f + ".field",
                           string_of(list[i], "field", f + ".field"));
      p.mode = list[i].contains("mode")
                   ? parse_enum(aggregation_from_string, f + ".mode",
                                string_of(list[i], "mode", f + ".mode"))
                   : Aggregation::sup;
      if (list[i].contains("weighted")) {
        if (!list[i]["weighted"].is_boolean()) fail(f + ".weighted", "expected a boolean");
        p.weighted = list[i]["weighted"].get<bool>();
      } else {
        p.weighted = p.axis.kind != AxisKind::time;
      }
      c.probes.push_back(p);
    }
  } else {
    c.probes = default_probes(c.dim);
  }

  if (doc.contains("fit_window")) {
    const json& w = doc["fit_window"];
    check_keys(w, "fit_window",
               {"space_min_cells", "space_max", "time_min_frames", "time_max_fraction"});
    c.window.space_min_cells =
        number_or(w, "space_min_cells", "fit_window.space_min_cells", c.window.space_min_cells);
    c.window.space_max = number_or(w, "space_max", "fit_window.space_max", c.window.space_max);
    c.window.time_min_frames =
        number_or(w, "time_min_frames", "fit_window.time_min_frames", c.window.time_min_frames);
    c.window.time_max_fraction = number_or(w, "time_max_fraction",
                                           "fit_window.time_max_fraction",
                                           c.window.time_max_fraction);
    if (!(c.window.space_max > 0.0 && c.window.time_max_fraction > 0.0)) {
      fail("fit_window", "upper bounds must be > 0");
    }
  }

  if (doc.contains("delta")) {
    c.delta = number(doc, "delta", "delta");
    if (!(c.delta > 0.0 && c.delta < 1.0 / 3.0)) fail("delta", "must lie in (0, 1/3)");
  }

  if (doc.contains("record_every")) {
    c.record_every = integer(doc, "record_every", "record_every");
    if (c.record_every < 1) fail("record_every", "must be >= 1");
  } else {
    Scenario tmp;
    tmp.steps = c.steps;
    c.record_every = tmp.record_stride();
  }

  if (doc.contains("solver")) {
    const json& s = doc["solver"];
    check_keys(s, "solver", {"newton_tolerance", "max_newton_iterations",
                             "max_line_search", "linear", "cg_tolerance"});
    c.solver.newton_tolerance =
        number_or(s, "newton_tolerance", "solver.newton_tolerance", c.solver.newton_tolerance);
    if (s.contains("max_newton_iterations")) {
      c.solver.max_newton_iterations =
          integer(s, "max_newton_iterations", "solver.max_newton_iterations");
    }
    if (s.contains("max_line_search")) {
      c.solver.max_line_search = integer(s, "max_line_search", "solver.max_line_search");
    }
    if (s.contains("linear")) {
      c.solver.linear = parse_enum(linear_solver_from_string, "solver.linear",
                                   string_of(s, "linear", "solver.linear"));
    }
    c.solver.cg_tolerance =
        number_or(s, "cg_tolerance", "solver.cg_tolerance", c.solver.cg_tolerance);
    if (!(c.solver.newton_tolerance > 0.0)) fail("solver.newton_tolerance", "must be > 0");
    if (c.solver.max_newton_iterations < 1) fail("solver.max_newton_iterations", "must be >= 1");
    if (c.solver.max_line_search < 0) fail("solver.max_line_search", "must be >= 0");
  }

  if (doc.contains("allow_coarse_dt")) {
    if (!doc["allow_coarse_dt"].is_boolean()) fail("allow_coarse_dt", "expected a boolean");
    c.allow_coarse_dt = doc["allow_coarse_dt"].get<bool>();
  }
  return c;
}

ScenarioConfig parse_scenario_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read scenario file " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(path.string() + ": invalid JSON: " + e.what());
  }
  return parse_scenario(doc, path.stem().string());
}

json to_json(const ScenarioConfig& c) {
  json j;
  j["name"] = c.name;
  j["model"] = to_string(c.model);
  j["d"] = c.dim;
  j["n"] = c.n;
  j["T"] = c.final_time;
  j["N"] = c.steps;
  if (c.mu_is_list) {
    j["mu"] = c.mu;
  } else {
    j["mu"] = c.mu.front();
  }
  j["kappa"] = c.kappa;
  j["c1"] = c.c1;
  j["elastic"] = c.elastic.to_json();
  json h = c.hardening.to_json();
  h["modulus"] = c.hardening_modulus;
  j["hardening"] = h;
  j["boundary_mode"] = to_string(c.boundary);
  j["data"] = c.data;
  j["cutoff"] = {{"eps0", c.eps0}, {"h0", c.h0}, {"side", to_string(c.cutoff_side)}};
  json probes = json::array();
  for (const auto& p : c.probes) {
    probes.push_back({{"axis", p.axis.name()},
                      {"field", to_string(p.field)},
                      {"mode", to_string(p.mode)},
                      {"weighted", p.weighted}});
  }
  j["probes"] = probes;
  j["fit_window"] = {{"space_min_cells", c.window.space_min_cells},
                     {"space_max", c.window.space_max},
                     {"time_min_frames", c.window.time_min_frames},
                     {"time_max_fraction", c.window.time_max_fraction}};
  j["delta"] = c.delta;
  j["record_every"] = c.record_every;
  j["solver"] = {{"newton_tolerance", c.solver.newton_tolerance},
                 {"max_newton_iterations", c.solver.max_newton_iterations},
                 {"max_line_search", c.solver.max_line_search},
                 {"linear", to_string(c.solver.linear)},
                 {"cg_tolerance", c.solver.cg_tolerance}};
  j["allow_coarse_dt"] = c.allow_coarse_dt;
  return j;
}

MaterialParams material_params(const ScenarioConfig& c, double mu) {
  MaterialParams p;
  p.model = c.model;
  p.compliance = c.elastic.build(c.dim);
  p.kinematic_hardening = c.hardening.build(c.dim);
  p.isotropic_modulus = c.hardening_modulus;
  p.kappa = c.kappa;
  p.mu = mu;
  p.c1 = c.c1;
  return p;
}

Scenario build_scenario(const ScenarioConfig& c, double mu) {
  Scenario s;
  s.geometry = {c.dim, c.boundary};
  s.n = c.n;
  s.final_time = c.final_time;
  s.steps = c.steps;
  s.material = material_params(c, mu);
  s.data = make_generator(c.data, c.dim, s.material.compliance);
  s.solver = c.solver;
  s.record_every = c.record_every;
  return s;
}

ProbeConfig probe_config(const ScenarioConfig& c) {
  ProbeConfig p;
  p.probes = c.probes;
  p.eps0 = c.eps0;
  p.h0 = c.h0;
  p.side = c.cutoff_side;
  p.window = c.window;
  p.delta = c.delta;
  return p;
}

std::vector<Violation> validate(const ScenarioConfig& c) {
  std::vector<Violation> out;
  const MaterialParams p = material_params(c, c.mu.front());
  auto append = [&](std::vector<Violation> v) {
    out.insert(out.end(), v.begin(), v.end());
  };
  append(ellipticity_violations("ellipticity", "elastic compliance A", p.compliance, c.c1));
  if (c.model == HardeningModel::kinematic) {
    append(ellipticity_violations("hardening-ellipticity", "hardening tensor H",
                                  p.kinematic_hardening, c.c1));
  } else if (c.hardening_modulus < c.c1) {
    out.push_back({"hardening-modulus",
                   fmt::format("isotropic hardening modulus {:.6g} is below C1 = {:.6g}",
                               c.hardening_modulus, c.c1)});
  }
  if (c.kappa < c.c1) {
    out.push_back({"kappa", fmt::format("kappa = {:.6g} is below C1 = {:.6g}", c.kappa, c.c1)});
  }

  const Scenario s = build_scenario(c, c.mu.front());
  const SafetyLoadReport safety = safety_load_check(s);
  if (!safety.pass) {
    out.push_back({"safety-load",
                   fmt::format("safety load condition fails: max |dev sigma0(x,0)| = "
                               "{:.6g} is not below kappa = {:.6g}",
                               safety.max_deviator, c.kappa)});
  }

  const Grid grid = build_grid(s.geometry, s.n);
  const DataGenerator& data = *s.data;
  const int m = mandel_size(c.dim);

  // Weak divergence: int sigma0(0) : E(v) = int f v + int_N sigma0 n v.
  std::vector<double> sigma0(static_cast<std::size_t>(grid.num_qp()) * m);
  double compat = 0.0, trace = 0.0, scale = 1.0;
  for (int qp = 0; qp < grid.num_qp(); ++qp) {
    const Point x = grid.qp_coord(qp);
    const SymTensor2 st = data.stress(0.0, x);
    for (int k = 0; k < m; ++k) sigma0[qp * m + k] = st[k];
    const SymTensor2 mismatch = data.strain(0.0, x) - p.compliance.apply(st);
    compat = std::max(compat, norm(mismatch));
    trace = std::max(trace, std::abs(mismatch.trace()));
    scale = std::max({scale, norm(st), norm(data.strain(0.0, x))});
  }
  Assembler assembler(grid);
  const Eigen::VectorXd internal = assembler.internal_force(sigma0);
  const Eigen::VectorXd residual = assembler.dofs().restrict(
      internal - assembler.external_force(
                     [&](const Point& x) { return data.body_force(0.0, x); },
                     [&](const Point& x) { return data.stress(0.0, x); }));
  const double force_scale = std::max(1.0, internal.norm());
  if (residual.norm() > 1e-9 * force_scale) {
    out.push_back({"divergence",
                   fmt::format("sigma0(0) is not weakly divergence-compatible with f "
                               "(residual {:.3e})",
                               residual.norm())});
  }
  if (compat > 1e-10 * scale) {
    out.push_back({"compatibility",
                   fmt::format("compatibility condition E(u0(0)) = A sigma0(0) fails "
                               "(max mismatch {:.3e})",
                               compat)});
  }
  if (trace > 1e-10 * scale) {
    out.push_back({"initial-plastic-trace",
                   fmt::format("initial plastic strain E(u0(0)) - A sigma0(0) is not "
                               "trace-free (max |trace| {:.3e})",
                               trace)});
  }

  if (c.mu_is_list && !c.allow_coarse_dt) {
    const double mu_min = *std::min_element(c.mu.begin(), c.mu.end());
    if (c.dt() > 0.5 * mu_min * (1.0 + 1e-12)) {
      out.push_back({"time-step",
                     fmt::format("sweep time step {:.6g} exceeds mu_min/2 = {:.6g}; "
                                 "refine N or set allow_coarse_dt",
                                 c.dt(), 0.5 * mu_min)});
    }
  }
  return out;
}

}  // namespace hardening
