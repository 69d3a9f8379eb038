#pragma once

#include <string>

#include <json.hpp>

#include "hardening/scenario.hpp"
#include "support/oracles.hpp"

namespace oracle {

inline std::string benchmark_path(const std::string& name) {
  return std::string(HARDENING_BENCHMARK_DIR) + "/" + name + ".json";
}

inline ScenarioConfig load_benchmark(const std::string& name) {
  return parse_scenario_file(benchmark_path(name));
}

/// Final sigma and xi of the homogeneous benchmark from the pointwise ODE.
inline OdeResult homogeneous_reference(const Scenario& s, double tolerance = 1e-12) {
  const DataGenerator& data = *s.data;
  const Point x0 = Point::Zero(s.geometry.dim);
  auto rate = [&](double t) {
    const double h = 1e-3;
    return (data.strain(t + h, x0) - data.strain(t - h, x0)) / (2.0 * h);
  };
  return integrate_pointwise(s.material, data.stress(0.0, x0), rate, s.final_time, tolerance);
}

/// Largest deviation of the stored final state from the ODE reference.
inline double homogeneous_error(const FieldHistory& h, const OdeResult& ref) {
  const Frame& f = h.final_frame();
  const int m = mandel_size(h.grid().dim());
  const int hc = h.hardening_components();
  double err = 0.0;
  for (int qp = 0; qp < h.grid().num_qp(); ++qp) {
    for (int k = 0; k < m; ++k) err = std::max(err, std::abs(f.stress[qp * m + k] - ref.stress[k]));
    if (hc == 1) {
      err = std::max(err, std::abs(f.hardening[qp] - ref.iso_hardening));
    } else {
      for (int k = 0; k < m; ++k)
        err = std::max(err, std::abs(f.hardening[qp * m + k] - ref.back_stress[k]));
    }
  }
  return err;
}

}  // namespace oracle
