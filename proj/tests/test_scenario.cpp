#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "hardening/report.hpp"
#include "support/scenarios.hpp"

using namespace hardening;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json minimal() {
  return json::parse(R"({
    "model": "kinematic", "d": 2, "n": 4, "T": 0.5, "N": 10, "mu": 0.1, "kappa": 1.0,
    "data": {"generator": "polynomial",
             "displacement": [{"power": 1, "linear": [[0, 0.2], [0, 0]]}],
             "stress": [{"power": 1, "value": [[0, 0.2], [0.2, 0]]}]}
  })");
}

std::string parse_error(const json& doc) {
  try {
    parse_scenario(doc);
  } catch (const ParseError& e) {
    return e.what();
  }
  return "";
}

std::vector<std::string> codes(const ScenarioConfig& c) {
  std::vector<std::string> out;
  for (const auto& v : validate(c)) out.push_back(v.code);
  return out;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("hardening_test_" + name);
  fs::remove_all(dir);
  return dir;
}

}  // namespace

TEST_CASE("minimal scenario resolves documented defaults") {
  const ScenarioConfig c = parse_scenario(minimal(), "minimal");
  CHECK(c.name == "minimal");
  CHECK(c.dt() == doctest::Approx(0.05));
  CHECK(c.delta == 0.05);
  CHECK(c.eps0 == 0.1);
  CHECK(c.h0 == 0.25);
  CHECK(c.cutoff_side == CutoffSide::neumann);
  CHECK(c.boundary == BoundaryMode::mixed);
  CHECK(c.record_every == 1);
  CHECK(c.c1 == doctest::Approx(1.0));
  CHECK(c.probes == default_probes(2));
  CHECK(c.window == FitWindow{});
  CHECK(c.solver == SolverOptions{});
  CHECK_FALSE(c.mu_is_list);
  CHECK(c.elastic.type == "identity");
}

TEST_CASE("mu list enables sweeps") {
  json doc = minimal();
  doc["mu"] = {0.1, 0.01};
  doc["N"] = 100;
  const ScenarioConfig c = parse_scenario(doc);
  CHECK(c.mu_is_list);
  CHECK(c.mu == std::vector<double>{0.1, 0.01});
  doc["mu"] = {0.01, 0.1};
  CHECK(parse_error(doc).find("mu") == 0);
}

TEST_CASE("invalid fields are rejected by name") {
  struct Case {
    const char* key;
    json value;
  };
  for (const Case& c : {Case{"kappa", 0.0}, Case{"mu", -1.0}, Case{"n", 1}, Case{"N", 0},
                        Case{"T", 0.0}, Case{"d", 4}, Case{"model", "plastic"},
                        Case{"boundary_mode", "open"}, Case{"delta", 0.5}}) {
    json doc = minimal();
    doc[c.key] = c.value;
    CAPTURE(c.key);
    CHECK(parse_error(doc).rfind(c.key, 0) == 0);
  }
  json extra = minimal();
  extra["colour"] = "red";
  CHECK(parse_error(extra).rfind("colour", 0) == 0);
  json missing = minimal();
  missing.erase("kappa");
  CHECK(parse_error(missing).rfind("kappa", 0) == 0);
  json generator = minimal();
  generator["data"]["generator"] = "fourier";
  CHECK(parse_error(generator).find("unknown data generator") != std::string::npos);
  json probe = minimal();
  probe["probes"] = json::array({{{"axis", "normal"}, {"field", "pressure"}}});
  CHECK(parse_error(probe).rfind("probes[0].field", 0) == 0);
}

TEST_CASE("scenario files round trip") {
  for (const char* name : {"elastic-only", "homogeneous-plastic", "mixed-boundary-kinematic",
                           "mixed-boundary-isotropic", "dirichlet-isotropic"}) {
    CAPTURE(name);
    const ScenarioConfig c = oracle::load_benchmark(name);
    CHECK(c.name == name);
    const ScenarioConfig again = parse_scenario(to_json(c), "other");
    CHECK(again == c);
    CHECK(to_json(again) == to_json(c));
  }
}

TEST_CASE("benchmarks validate") {
  for (const char* name : {"elastic-only", "homogeneous-plastic", "mixed-boundary-kinematic",
                           "mixed-boundary-isotropic", "dirichlet-isotropic"}) {
    CAPTURE(name);
    CHECK(codes(oracle::load_benchmark(name)).empty());
  }
}

TEST_CASE("validation violations") {
  json touching = minimal();
  const double r = 1.0 / std::sqrt(2.0);
  touching["data"]["stress"].push_back({{"power", 0}, {"value", {{r, 0.0}, {0.0, -r}}}});
  CHECK(codes(parse_scenario(touching)) == std::vector<std::string>{"safety-load"});

  json incompatible = minimal();
  incompatible["data"]["displacement"].push_back({{"power", 0}, {"linear", {{0.0, 0.1}, {0.1, 0.0}}}});
  CHECK(codes(parse_scenario(incompatible)) == std::vector<std::string>{"compatibility"});

  json dilated = minimal();
  dilated["data"]["displacement"].push_back({{"power", 0}, {"linear", {{0.1, 0.0}, {0.0, 0.1}}}});
  const auto dilated_codes = codes(parse_scenario(dilated));
  CHECK(std::find(dilated_codes.begin(), dilated_codes.end(), "initial-plastic-trace") !=
        dilated_codes.end());

  json unbalanced = minimal();
  unbalanced["data"]["body_force"] = json::array({{{"power", 0}, {"value", {1.0, 0.0}}}});
  CHECK(codes(parse_scenario(unbalanced)) == std::vector<std::string>{"divergence"});

  json weak = minimal();
  weak["c1"] = 0.5;
  weak["kappa"] = 0.4;
  const auto weak_codes = codes(parse_scenario(weak));
  CHECK(std::find(weak_codes.begin(), weak_codes.end(), "kappa") != weak_codes.end());

  json stiff = minimal();
  stiff["c1"] = 0.5;
  stiff["elastic"] = {{"type", "scaled"}, {"scale", 4.0}};
  CHECK(codes(parse_scenario(stiff)) == std::vector<std::string>{"ellipticity"});

  json coarse = minimal();
  coarse["mu"] = {0.1, 0.01};
  CHECK(codes(parse_scenario(coarse)) == std::vector<std::string>{"time-step"});
  coarse["allow_coarse_dt"] = true;
  CHECK(codes(parse_scenario(coarse)).empty());
}

TEST_CASE("admissible C1") {
  const Tensor4Sym a = Tensor4Sym::lame_compliance(2, 1.0, 1.0);
  const Tensor4Sym h = Tensor4Sym::identity(2);
  CHECK(admissible_c1(HardeningModel::kinematic, a, h, 1.0, 1.0) == doctest::Approx(0.25));
  CHECK(admissible_c1(HardeningModel::isotropic, h, h, 0.3, 1.0) == doctest::Approx(0.3));
  CHECK(admissible_c1(HardeningModel::kinematic, h, h, 1.0, 0.2) == doctest::Approx(0.2));
}

TEST_CASE("elastic run report") {
  const ScenarioConfig c = oracle::load_benchmark("elastic-only");
  const fs::path dir = scratch_dir("elastic");
  auto produce = [&](const fs::path& out) {
    RunReport r;
    r.config = c;
    r.mu = c.mu.front();
    const Scenario s = build_scenario(c, r.mu);
    r.safety = safety_load_check(s);
    const FieldHistory h = run(s);
    r.energy = energy_diagnostics(h, s);
    r.newton = h.newton_summary();
    r.probes = run_probes(h, probe_config(c));
    emit_report(r, out, ReportOptions{true});
  };
  produce(dir / "a");
  produce(dir / "b");
  CHECK(slurp(dir / "a" / "report.json") == slurp(dir / "b" / "report.json"));
  CHECK(slurp(dir / "a" / "energy.csv") == slurp(dir / "b" / "energy.csv"));

  std::ifstream energy(dir / "a" / "energy.csv");
  std::string line;
  std::getline(energy, line);
  CHECK(line.rfind("step,time,newton_iterations,residual,penalty_energy", 0) == 0);
  int rows = 0;
  while (std::getline(energy, line)) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) cells.push_back(cell);
    CHECK(std::stod(cells[4]) == 0.0);
    CHECK(cells[1].size() == std::string("0.0000000000000000e+00").size());
    ++rows;
  }
  CHECK(rows == c.steps + 1);

  const json report = json::parse(slurp(dir / "a" / "report.json"));
  CHECK(parse_scenario(report["config"]) == c);
  CHECK(validate(parse_scenario(report["config"])).empty());
  for (const auto& t : report["probes"]["tables"]) {
    CHECK(fs::exists(dir / "a" / t["file"].get<std::string>()));
    CHECK(t["fit"].contains("target"));
  }
  CHECK(fs::exists(dir / "a" / "meta.json"));
  CHECK_FALSE(report.contains("written_at"));
  fs::remove_all(dir);
}

TEST_CASE("table csv layout") {
  SeminormTable t;
  t.axis = {AxisKind::normal, 0};
  t.field = "stress";
  t.mode = Aggregation::sup;
  t.rows = {{1, 0.125, 2.5}};
  const fs::path dir = scratch_dir("table");
  fs::create_directories(dir);
  write_table_csv(dir / "t.csv", t, ReportOptions{true});
  CHECK(slurp(dir / "t.csv") ==
        "axis,field,mode,h,value\nnormal,stress,sup,1.2500000000000000e-01,2.5000000000000000e+00\n");
  CHECK(table_filename(t) == "table_normal_stress_sup_unweighted.csv");
  fs::remove_all(dir);
}

TEST_CASE("sweep report layout") {
  ScenarioConfig c = oracle::load_benchmark("elastic-only");
  c.n = 4;
  c.steps = 20;
  c.mu = {0.1, 0.05};
  const fs::path dir = scratch_dir("sweep");
  const UniformityReport sweep = mu_sweep(
      build_scenario(c, c.mu.front()), c.mu, probe_config(c),
      [&](const SweepEntry& e, const FieldHistory*) {
        RunReport r;
        r.config = c;
        r.mu = e.mu;
        r.energy = e.energy;
        r.newton = e.newton;
        r.probes = e.probes;
        emit_report(r, dir / sweep_dirname(e.mu), ReportOptions{});
      });
  emit_sweep_summary(c, sweep, dir, 0.0);
  CHECK(fs::exists(dir / "mu_0.1" / "report.json"));
  CHECK(fs::exists(dir / "mu_0.05" / "energy.csv"));
  const json summary = json::parse(slurp(dir / "sweep_summary.json"));
  CHECK(summary["runs"].size() == 2);
  CHECK(summary["spreads"]["sup_stress_rate"] == 1.0);
  fs::remove_all(dir);
}

TEST_CASE("io failures name the path") {
  CHECK_THROWS_AS(parse_scenario_file("/nonexistent/scenario.json"), IoError);
  try {
    emit_sweep_summary(oracle::load_benchmark("elastic-only"), UniformityReport{},
                       "/proc/forbidden/out", 0.0);
    FAIL("expected an io error");
  } catch (const IoError& e) {
    CHECK(std::string(e.what()).find("/proc/forbidden/out") != std::string::npos);
  }
}
