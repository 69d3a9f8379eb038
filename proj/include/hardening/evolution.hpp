#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "hardening/constitutive.hpp"
#include "hardening/data.hpp"
#include "hardening/grid.hpp"

namespace hardening {

enum class LinearSolverChoice { automatic, direct, cg };

const char* to_string(LinearSolverChoice choice);
LinearSolverChoice linear_solver_from_string(const std::string& name);

struct SolverOptions {
  double newton_tolerance = 1e-10;
  int max_newton_iterations = 50;
  int max_line_search = 10;
  LinearSolverChoice linear = LinearSolverChoice::automatic;
  double cg_tolerance = 1e-11;

  bool operator==(const SolverOptions&) const = default;
};

/// Everything the time stepper needs: geometry, grid size, time grid,
/// material and closed-form data.
struct Scenario {
  Geometry geometry;
  int n = 8;
  double final_time = 1.0;
  int steps = 16;
  MaterialParams material;
  std::shared_ptr<const DataGenerator> data;
  SolverOptions solver;
  /// Keep every k-th step as a full frame; 0 picks ceil(steps / 256).
  int record_every = 0;

  double dt() const { return final_time / steps; }
  int record_stride() const;
};

/// Full field snapshot at one time level. Rate fields are backward
/// differences over the last solver step and are empty at step 0.
/// `hardening` holds Mandel back-stress (kinematic) or one scalar per point.
struct Frame {
  int step = 0;
  double time = 0.0;
  std::vector<double> displacement;
  std::vector<double> stress;
  std::vector<double> hardening;
  std::vector<double> plastic_strain;
  std::vector<double> stress_rate;
  std::vector<double> hardening_rate;
  std::vector<double> velocity;

  bool has_rates() const { return !stress_rate.empty(); }
};

/// Per-step scalar diagnostics, recorded for every step including step 0.
struct StepRecord {
  int step = 0;
  double time = 0.0;
  int newton_iterations = 0;
  double residual = 0.0;  // final free-dof residual / force scale
  double penalty_energy = 0.0;
  double dissipation = 0.0;  // cumulative sum dt (|sigma_dot|^2 + |xi_dot|^2)
  double stress_rate_l2 = 0.0;
  double hardening_rate_l2 = 0.0;
  double velocity_h1 = 0.0;
  double overshoot_max = 0.0;
  double overshoot_l2 = 0.0;
  int plastic_points = 0;
  // Structural invariants at this step (max over quadrature points).
  double plastic_trace = 0.0;
  double kinematic_identity = 0.0;
  double iso_increment_min = 0.0;
  double trace_defect = 0.0;
};

struct NewtonSummary {
  int total = 0;
  int max = 0;
  double mean = 0.0;
};

/// Time trajectory of a run: strided full frames, per-step records and the
/// final frame (always kept).
class FieldHistory {
 public:
  FieldHistory(std::shared_ptr<const Grid> grid, HardeningModel model,
               double dt, int stride);

  const Grid& grid() const { return *grid_; }
  std::shared_ptr<const Grid> grid_ptr() const { return grid_; }
  HardeningModel model() const { return model_; }
  double dt() const { return dt_; }
  int stride() const { return stride_; }
  /// Time between consecutive stored frames.
  double frame_spacing() const { return dt_ * stride_; }
  /// Components per quadrature point of the hardening field.
  int hardening_components() const;

  const std::vector<Frame>& frames() const { return frames_; }
  const Frame& final_frame() const { return final_; }
  const std::vector<StepRecord>& records() const { return records_; }
  NewtonSummary newton_summary() const;

  void add_frame(Frame frame) { frames_.push_back(std::move(frame)); }
  void set_final(Frame frame) { final_ = std::move(frame); }
  void add_record(StepRecord record) { records_.push_back(record); }

 private:
  std::shared_ptr<const Grid> grid_;
  HardeningModel model_;
  double dt_;
  int stride_;
  std::vector<Frame> frames_;
  Frame final_;
  std::vector<StepRecord> records_;
};

/// Time stepper holding the state at the current time level.
class Stepper {
 public:
  explicit Stepper(const Scenario& scenario);

  const Scenario& scenario() const { return scenario_; }
  const Grid& grid() const { return *grid_; }
  std::shared_ptr<const Grid> grid_ptr() const { return grid_; }
  const Material& material() const { return material_; }
  int step_index() const { return step_; }
  double time() const { return step_ * scenario_.dt(); }

  const Eigen::VectorXd& displacement() const { return u_; }
  const std::vector<ConstitutiveState>& states() const { return states_; }
  const StepRecord& last_record() const { return record_; }

  /// Advances one step; throws SolverError naming the step on failure.
  void advance();

  /// Snapshot of the current level, with rates of the last step.
  Frame frame() const;

 private:
  struct Evaluation {
    std::vector<LocalSolution> local;
    std::vector<double> stress;
    Eigen::VectorXd internal;
  };

  void evaluate(const Eigen::VectorXd& u, Evaluation& out) const;
  void finish_record(int iterations, double residual);
  std::vector<double> flat_stress() const;

  Scenario scenario_;
  std::shared_ptr<const Grid> grid_;
  Material material_;
  Assembler assembler_;
  LinearSolver linear_;
  int step_ = 0;
  Eigen::VectorXd u_;
  Eigen::VectorXd u_prev_;
  std::vector<double> strain_;  // E(u_) at quadrature points, Mandel-flat
  std::vector<ConstitutiveState> states_;
  std::vector<ConstitutiveState> states_prev_;
  StepRecord record_;
};

/// Runs all N steps, recording frames every `record_stride()` steps.
FieldHistory run(const Scenario& scenario);

struct EnergyReport {
  std::vector<StepRecord> series;
  double sup_stress_rate = 0.0;
  double sup_hardening_rate = 0.0;
  double sup_velocity_h1 = 0.0;
  double max_overshoot = 0.0;
  double final_penalty_energy = 0.0;
  double final_dissipation = 0.0;
  double final_overshoot_l2 = 0.0;
  /// E_pen(T) + C1 * dissipation(T).
  double energy_bound = 0.0;
};

EnergyReport energy_diagnostics(const FieldHistory& history,
                                const Scenario& scenario);

struct SafetyLoadReport {
  bool pass = false;
  double max_deviator = 0.0;  // max over points of |dev sigma0(x, 0)|
  double margin = 0.0;        // kappa - max_deviator
  /// inf over sampled t and points of the feasibility gap of the translated
  /// pair (sigma0(t), xi0(t)).
  double translated_margin = 0.0;
};

/// Samples quadrature points and nodes at t = 0 and `time_samples` levels.
SafetyLoadReport safety_load_check(const Scenario& scenario,
                                   int time_samples = 32);

struct ElasticSolution {
  Eigen::VectorXd displacement;
  std::vector<double> stress;
};

/// One-shot linear elastic solve at time t with the initial stress
/// sigma0(0) + A^-1 (E(u) - E(u(0))).
ElasticSolution solve_linear_elastic(const Scenario& scenario, double t);

/// Nodal interpolant of u0(t).
Eigen::VectorXd interpolate_displacement(const Grid& grid,
                                         const DataGenerator& data, double t);

}  // namespace hardening
