#include "hardening/evolution.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <fmt/format.h>

namespace hardening {

namespace {

void copy_mandel(const SymTensor2& t, double* out) {
  const MandelVector& v = t.mandel();
  for (int k = 0; k < v.size(); ++k) out[k] = v[k];
}

double mandel_trace(const double* v, int dim) {
  double tr = 0.0;
  for (int k = 0; k < dim; ++k) tr += v[k];
  return tr;
}

LinearSolver::Kind resolve_kind(LinearSolverChoice choice, const Grid& grid) {
  switch (choice) {
    case LinearSolverChoice::direct:
      return LinearSolver::Kind::direct;
    case LinearSolverChoice::cg:
      return LinearSolver::Kind::cg;
    case LinearSolverChoice::automatic:
      break;
  }
  return LinearSolver::choose(grid);
}

std::shared_ptr<const Grid> grid_for(const Scenario& scenario) {
  if (!scenario.data) throw std::invalid_argument("scenario has no data generator");
  if (scenario.data->dim() != scenario.geometry.dim ||
      scenario.material.dim() != scenario.geometry.dim) {
    throw DimensionError("scenario dimension mismatch between geometry, data and material");
  }
  if (scenario.steps < 1) throw std::invalid_argument("step count must be >= 1");
  if (!(scenario.final_time > 0.0)) {
    throw std::invalid_argument("final time must be positive");
  }
  return std::make_shared<const Grid>(build_grid(scenario.geometry, scenario.n));
}

std::vector<double> initial_stress(const Grid& grid, const DataGenerator& data) {
  const int m = mandel_size(grid.dim());
  std::vector<double> out(static_cast<std::size_t>(grid.num_qp()) * m);
  for (int qp = 0; qp < grid.num_qp(); ++qp) {
    copy_mandel(data.stress(0.0, grid.qp_coord(qp)), out.data() + qp * m);
  }
  return out;
}

}  // namespace

const char* to_string(LinearSolverChoice choice) {
  switch (choice) {
    case LinearSolverChoice::automatic:
      return "auto";
    case LinearSolverChoice::direct:
      return "direct";
    case LinearSolverChoice::cg:
      return "cg";
  }
  return "?";
}

LinearSolverChoice linear_solver_from_string(const std::string& name) {
  if (name == "auto") return LinearSolverChoice::automatic;
  if (name == "direct") return LinearSolverChoice::direct;
  if (name == "cg") return LinearSolverChoice::cg;
  throw std::invalid_argument("unknown linear solver '" + name + "'");
}

int Scenario::record_stride() const {
  if (record_every > 0) return record_every;
  return std::max(1, (steps + 255) / 256);
}

FieldHistory::FieldHistory(std::shared_ptr<const Grid> grid,
                           HardeningModel model, double dt, int stride)
    : grid_(std::move(grid)), model_(model), dt_(dt), stride_(stride) {}

int FieldHistory::hardening_components() const {
  return model_ == HardeningModel::kinematic ? mandel_size(grid_->dim()) : 1;
}

NewtonSummary FieldHistory::newton_summary() const {
  NewtonSummary out;
  int count = 0;
  for (const auto& r : records_) {
    if (r.step == 0) continue;
    out.total += r.newton_iterations;
    out.max = std::max(out.max, r.newton_iterations);
    ++count;
  }
  out.mean = count > 0 ? static_cast<double>(out.total) / count : 0.0;
  return out;
}

Eigen::VectorXd interpolate_displacement(const Grid& grid,
                                         const DataGenerator& data, double t) {
  const int d = grid.dim();
  Eigen::VectorXd u(grid.num_dofs());
  for (int node = 0; node < grid.num_nodes(); ++node) {
    const Point v = data.displacement(t, grid.node_coord(node));
    for (int c = 0; c < d; ++c) u[node * d + c] = v[c];
  }
  return u;
}

Stepper::Stepper(const Scenario& scenario)
    : scenario_(scenario),
      grid_(grid_for(scenario)),
      material_(scenario.material),
      assembler_(*grid_),
      linear_(resolve_kind(scenario.solver.linear, *grid_),
              scenario.solver.cg_tolerance) {
  const Grid& grid = *grid_;
  const int m = mandel_size(grid.dim());
  u_ = interpolate_displacement(grid, *scenario_.data, 0.0);
  u_prev_ = u_;
  strain_.resize(static_cast<std::size_t>(grid.num_qp()) * m);
  sym_gradient_into(std::span<const double>(u_.data(), u_.size()), grid, strain_);
  states_.reserve(grid.num_qp());
  for (int qp = 0; qp < grid.num_qp(); ++qp) {
    states_.push_back(
        ConstitutiveState::initial(scenario_.data->stress(0.0, grid.qp_coord(qp))));
  }
  states_prev_ = states_;
  finish_record(0, 0.0);
}

void Stepper::evaluate(const Eigen::VectorXd& u, Evaluation& out) const {
  const Grid& grid = *grid_;
  const int dim = grid.dim();
  const int m = mandel_size(dim);
  const double dt = scenario_.dt();
  std::vector<double> eps(strain_.size());
  sym_gradient_into(std::span<const double>(u.data(), u.size()), grid, eps);
  out.local.resize(grid.num_qp());
  out.stress.resize(strain_.size());
  MandelVector inc(m);
  for (int qp = 0; qp < grid.num_qp(); ++qp) {
    for (int k = 0; k < m; ++k) inc[k] = eps[qp * m + k] - strain_[qp * m + k];
    out.local[qp] = solve_local(states_[qp], SymTensor2(dim, inc), dt, material_);
    copy_mandel(out.local[qp].state.stress, out.stress.data() + qp * m);
  }
  out.internal = assembler_.internal_force(out.stress);
}

void Stepper::advance() {
  const Grid& grid = *grid_;
  const DataGenerator& data = *scenario_.data;
  const DofMap& dofs = assembler_.dofs();
  const SolverOptions& opt = scenario_.solver;
  const int d = grid.dim();
  const int next = step_ + 1;
  const double dt = scenario_.dt();
  const double t1 = next * dt;

  Eigen::VectorXd u = 2.0 * u_ - u_prev_;
  for (int node = 0; node < grid.num_nodes(); ++node) {
    if (!grid.node_is_dirichlet(node)) continue;
    const Point v = data.displacement(t1, grid.node_coord(node));
    for (int c = 0; c < d; ++c) u[node * d + c] = v[c];
  }
  const Eigen::VectorXd external = assembler_.external_force(
      [&](const Point& x) { return data.body_force(t1, x); },
      [&](const Point& x) { return data.stress(t1, x); });

  auto fail = [&](const std::string& what) -> SolverError {
    return SolverError(fmt::format("step {} (t = {:.6g}): {}", next, t1, what));
  };

  Evaluation ev;
  auto residual_of = [&](const Evaluation& e) {
    return dofs.restrict(e.internal - external);
  };
  auto tolerance_of = [&](const Evaluation& e) {
    return opt.newton_tolerance * std::max(e.internal.norm(), external.norm());
  };

  try {
    evaluate(u, ev);
  } catch (const LocalSolveError& e) {
    throw fail(e.what());
  }
  Eigen::VectorXd r = residual_of(ev);
  double rnorm = r.norm();
  double tol = tolerance_of(ev);
  int it = 0;
  std::vector<MandelMatrix> tangents;
  Evaluation trial;
  while (rnorm > tol) {
    if (it >= opt.max_newton_iterations) {
      throw fail(fmt::format(
          "Newton did not converge after {} iterations (relative residual "
          "{:.3e}); try a smaller time step or a larger mu",
          it, rnorm / std::max(tol / opt.newton_tolerance,
                               std::numeric_limits<double>::min())));
    }
    ++it;
    bool any_plastic = false;
    for (const auto& s : ev.local) any_plastic = any_plastic || s.plastic;
    if (any_plastic) {
      tangents.resize(grid.num_qp());
      for (int qp = 0; qp < grid.num_qp(); ++qp) {
        tangents[qp] = consistent_tangent(ev.local[qp], dt, material_).matrix();
      }
    } else {
      tangents.assign(1, material_.stiffness().matrix());
    }
    const SparseMatrix& k = assembler_.assemble_tangent(tangents);
    const Eigen::VectorXd delta_free = linear_.solve(k, -r);
    Eigen::VectorXd delta = Eigen::VectorXd::Zero(u.size());
    for (int dof = 0; dof < grid.num_dofs(); ++dof) {
      const int f = dofs.free_index(dof);
      if (f >= 0) delta[dof] = delta_free[f];
    }

    double alpha = 1.0;
    Eigen::VectorXd r_trial;
    double trial_norm = 0.0;
    for (int ls = 0;; ++ls) {
      try {
        evaluate(u + alpha * delta, trial);
      } catch (const LocalSolveError& e) {
        throw fail(e.what());
      }
      r_trial = residual_of(trial);
      trial_norm = r_trial.norm();
      if (trial_norm <= (1.0 - 1e-4 * alpha) * rnorm ||
          trial_norm <= tolerance_of(trial) || ls >= opt.max_line_search) {
        break;
      }
      alpha *= 0.5;
    }
    u += alpha * delta;
    std::swap(ev, trial);
    r = std::move(r_trial);
    rnorm = trial_norm;
    tol = tolerance_of(ev);
  }

  states_prev_ = std::move(states_);
  states_.resize(grid.num_qp());
  for (int qp = 0; qp < grid.num_qp(); ++qp) states_[qp] = ev.local[qp].state;
  u_prev_ = std::move(u_);
  u_ = std::move(u);
  sym_gradient_into(std::span<const double>(u_.data(), u_.size()), grid, strain_);
  step_ = next;
  const double scale = tol / opt.newton_tolerance;
  finish_record(it, scale > 0.0 ? rnorm / scale : 0.0);
}

void Stepper::finish_record(int iterations, double residual) {
  const Grid& grid = *grid_;
  const MaterialParams& p = material_.params();
  const int dim = grid.dim();
  const int m = mandel_size(dim);
  const double w = grid.qp_weight();
  const double dt = scenario_.dt();
  const bool kinematic = p.model == HardeningModel::kinematic;
  const bool has_rates = step_ > 0;

  StepRecord rec;
  rec.step = step_;
  rec.time = time();
  rec.newton_iterations = iterations;
  rec.residual = residual;
  rec.iso_increment_min = has_rates && !kinematic
                              ? std::numeric_limits<double>::infinity()
                              : 0.0;
  double stress_rate2 = 0.0;
  double hardening_rate2 = 0.0;
  for (int qp = 0; qp < grid.num_qp(); ++qp) {
    const ConstitutiveState& s = states_[qp];
    const double over = yield_overshoot(s, p);
    rec.penalty_energy += w * over * over / p.mu;
    rec.overshoot_l2 += w * over * over;
    rec.overshoot_max = std::max(rec.overshoot_max, over);
    rec.plastic_trace = std::max(rec.plastic_trace, std::abs(s.plastic_strain.trace()));
    const SymTensor2 elastic = p.compliance.apply(s.stress);
    rec.trace_defect = std::max(
        rec.trace_defect,
        std::abs(mandel_trace(strain_.data() + qp * m, dim) - elastic.trace()));
    if (kinematic) {
      rec.kinematic_identity = std::max(
          rec.kinematic_identity,
          norm(p.kinematic_hardening.apply(s.back_stress) - s.plastic_strain));
    }
    if (!has_rates) continue;
    const ConstitutiveState& prev = states_prev_[qp];
    stress_rate2 += w * std::pow(norm(s.stress - prev.stress) / dt, 2);
    if (kinematic) {
      hardening_rate2 += w * std::pow(norm(s.back_stress - prev.back_stress) / dt, 2);
    } else {
      const double inc = s.iso_hardening - prev.iso_hardening;
      hardening_rate2 += w * std::pow(inc / dt, 2);
      rec.iso_increment_min = std::min(rec.iso_increment_min, inc);
    }
    if (norm(s.plastic_strain - prev.plastic_strain) > 0.0) ++rec.plastic_points;
  }
  rec.overshoot_l2 = std::sqrt(rec.overshoot_l2);
  rec.stress_rate_l2 = std::sqrt(stress_rate2);
  rec.hardening_rate_l2 = std::sqrt(hardening_rate2);
  rec.dissipation = (step_ > 0 ? record_.dissipation : 0.0) +
                    dt * (stress_rate2 + hardening_rate2);
  if (has_rates) {
    const Eigen::VectorXd v = (u_ - u_prev_) / dt;
    const std::vector<double> grad = displacement_gradient(
        std::span<const double>(v.data(), v.size()), grid);
    double h1 = 0.0;
    for (int qp = 0; qp < grid.num_qp(); ++qp) {
      const int cell = grid.qp_cell(qp);
      const int q = grid.qp_local(qp);
      for (int c = 0; c < dim; ++c) {
        double val = 0.0;
        for (int a = 0; a < grid.nodes_per_cell(); ++a) {
          val += grid.shape(q, a) * v[grid.cell_node(cell, a) * dim + c];
        }
        h1 += w * val * val;
      }
      for (int k = 0; k < dim * dim; ++k) {
        h1 += w * grad[qp * dim * dim + k] * grad[qp * dim * dim + k];
      }
    }
    rec.velocity_h1 = std::sqrt(h1);
  }
  record_ = rec;
}

Frame Stepper::frame() const {
  const Grid& grid = *grid_;
  const int m = mandel_size(grid.dim());
  const bool kinematic = material_.model() == HardeningModel::kinematic;
  const int hc = kinematic ? m : 1;
  const std::size_t nq = grid.num_qp();
  const double dt = scenario_.dt();
  Frame f;
  f.step = step_;
  f.time = time();
  f.displacement.assign(u_.data(), u_.data() + u_.size());
  f.stress.resize(nq * m);
  f.hardening.resize(nq * hc);
  f.plastic_strain.resize(nq * m);
  const bool rates = step_ > 0;
  if (rates) {
    f.stress_rate.resize(nq * m);
    f.hardening_rate.resize(nq * hc);
    f.velocity.resize(u_.size());
    for (Eigen::Index i = 0; i < u_.size(); ++i) {
      f.velocity[i] = (u_[i] - u_prev_[i]) / dt;
    }
  }
  for (std::size_t qp = 0; qp < nq; ++qp) {
    const ConstitutiveState& s = states_[qp];
    copy_mandel(s.stress, f.stress.data() + qp * m);
    copy_mandel(s.plastic_strain, f.plastic_strain.data() + qp * m);
    if (kinematic) {
      copy_mandel(s.back_stress, f.hardening.data() + qp * m);
    } else {
      f.hardening[qp] = s.iso_hardening;
    }
    if (!rates) continue;
    const ConstitutiveState& prev = states_prev_[qp];
    copy_mandel((s.stress - prev.stress) / dt, f.stress_rate.data() + qp * m);
    if (kinematic) {
      copy_mandel((s.back_stress - prev.back_stress) / dt,
                  f.hardening_rate.data() + qp * m);
    } else {
      f.hardening_rate[qp] = (s.iso_hardening - prev.iso_hardening) / dt;
    }
  }
  return f;
}

FieldHistory run(const Scenario& scenario) {
  Stepper stepper(scenario);
  const int stride = scenario.record_stride();
  FieldHistory history(stepper.grid_ptr(), scenario.material.model,
                       scenario.dt(), stride);
  history.add_record(stepper.last_record());
  history.add_frame(stepper.frame());
  for (int n = 1; n <= scenario.steps; ++n) {
    stepper.advance();
    history.add_record(stepper.last_record());
    if (n % stride == 0) history.add_frame(stepper.frame());
  }
  history.set_final(stepper.frame());
  return history;
}

EnergyReport energy_diagnostics(const FieldHistory& history,
                                const Scenario& scenario) {
  EnergyReport out;
  out.series = history.records();
  for (const auto& r : out.series) {
    out.sup_stress_rate = std::max(out.sup_stress_rate, r.stress_rate_l2);
    out.sup_hardening_rate = std::max(out.sup_hardening_rate, r.hardening_rate_l2);
    out.sup_velocity_h1 = std::max(out.sup_velocity_h1, r.velocity_h1);
    out.max_overshoot = std::max(out.max_overshoot, r.overshoot_max);
  }
  if (!out.series.empty()) {
    const StepRecord& last = out.series.back();
    out.final_penalty_energy = last.penalty_energy;
    out.final_dissipation = last.dissipation;
    out.final_overshoot_l2 = last.overshoot_l2;
    out.energy_bound =
        last.penalty_energy + scenario.material.c1 * last.dissipation;
  }
  return out;
}

SafetyLoadReport safety_load_check(const Scenario& scenario, int time_samples) {
  if (!scenario.data) throw std::invalid_argument("scenario has no data generator");
  const Grid grid = build_grid(scenario.geometry, scenario.n);
  const DataGenerator& data = *scenario.data;
  const MaterialParams& p = scenario.material;
  std::vector<Point> points;
  points.reserve(grid.num_qp() + grid.num_nodes());
  for (int qp = 0; qp < grid.num_qp(); ++qp) points.push_back(grid.qp_coord(qp));
  for (int node = 0; node < grid.num_nodes(); ++node) {
    points.push_back(grid.node_coord(node));
  }

  SafetyLoadReport out;
  std::vector<SymTensor2> dev0;
  dev0.reserve(points.size());
  for (const Point& x : points) {
    dev0.push_back(dev(data.stress(0.0, x)));
    out.max_deviator = std::max(out.max_deviator, norm(dev0.back()));
  }
  out.margin = p.kappa - out.max_deviator;
  out.pass = out.max_deviator < p.kappa * (1.0 - 1e-12);

  out.translated_margin = std::numeric_limits<double>::infinity();
  const int samples = std::max(1, time_samples);
  for (int j = 0; j <= samples; ++j) {
    const double t = scenario.final_time * j / samples;
    for (std::size_t i = 0; i < points.size(); ++i) {
      const SymTensor2 st = dev(data.stress(t, points[i]));
      double gap;
      if (p.model == HardeningModel::kinematic) {
        const SymTensor2 xi0 = st - dev0[i];
        gap = p.kappa - norm(st - xi0);
      } else {
        const double xi0 = norm(st) - norm(dev0[i]);
        gap = p.kappa + xi0 - norm(st);
      }
      out.translated_margin = std::min(out.translated_margin, gap);
    }
  }
  return out;
}

ElasticSolution solve_linear_elastic(const Scenario& scenario, double t) {
  const auto grid_ptr = grid_for(scenario);
  const Grid& grid = *grid_ptr;
  const DataGenerator& data = *scenario.data;
  const int m = mandel_size(grid.dim());
  const Tensor4Sym stiffness = scenario.material.compliance.inverse();

  const Eigen::VectorXd u0 = interpolate_displacement(grid, data, 0.0);
  std::vector<double> eps0(static_cast<std::size_t>(grid.num_qp()) * m);
  sym_gradient_into(std::span<const double>(u0.data(), u0.size()), grid, eps0);
  const std::vector<double> sigma0 = initial_stress(grid, data);

  auto stress_of = [&](const Eigen::VectorXd& u) {
    std::vector<double> eps(eps0.size());
    sym_gradient_into(std::span<const double>(u.data(), u.size()), grid, eps);
    std::vector<double> out(eps.size());
    for (int qp = 0; qp < grid.num_qp(); ++qp) {
      MandelVector e(m);
      for (int k = 0; k < m; ++k) e[k] = eps[qp * m + k] - eps0[qp * m + k];
      const SymTensor2 s = stiffness.apply(SymTensor2(grid.dim(), e));
      for (int k = 0; k < m; ++k) out[qp * m + k] = sigma0[qp * m + k] + s[k];
    }
    return out;
  };

  Assembler assembler(grid);
  LinearSolver solver(resolve_kind(scenario.solver.linear, grid),
                      scenario.solver.cg_tolerance);
  ElasticSolution out;
  out.displacement = interpolate_displacement(grid, data, t);
  const Eigen::VectorXd residual = assemble_residual(
      assembler, stress_of(out.displacement),
      [&](const Point& x) { return data.body_force(t, x); },
      [&](const Point& x) { return data.stress(t, x); });
  const MandelMatrix c = stiffness.matrix();
  const SparseMatrix& k = assembler.assemble_tangent(std::span(&c, 1));
  const Eigen::VectorXd delta =
      solver.solve(k, -assembler.dofs().restrict(residual));
  for (int dof = 0; dof < grid.num_dofs(); ++dof) {
    const int f = assembler.dofs().free_index(dof);
    if (f >= 0) out.displacement[dof] += delta[f];
  }
  out.stress = stress_of(out.displacement);
  return out;
}

}  // namespace hardening
