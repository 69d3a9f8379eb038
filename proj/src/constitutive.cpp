#include "hardening/constitutive.hpp"

#include <algorithm>
#include <cmath>

namespace hardening {

namespace {

constexpr int kLocalIterations = 100;
constexpr double kLocalTolerance = 1e-12;
constexpr double kKinkWidth = 1e-10;

MandelVector penalty_vector(const MandelVector& s, double k, double m) {
  const double len = s.norm();
  if (len <= k) return MandelVector::Zero(s.size());
  return ((len - k) / (m * len)) * s;
}

// Derivative of the penalty map restricted to deviators.
MandelMatrix penalty_jacobian(const MandelVector& s, double k, double m,
                              const MandelMatrix& dev_proj) {
  const int n = static_cast<int>(s.size());
  const double len = s.norm();
  if (len <= k) return MandelMatrix::Zero(n, n);
  const MandelVector dir = s / len;
  const MandelMatrix nn = dir * dir.transpose();
  return (nn + ((len - k) / len) * (dev_proj - nn)) / m;
}

}  // namespace

const char* to_string(HardeningModel model) {
  return model == HardeningModel::kinematic ? "kinematic" : "isotropic";
}

Material::Material(MaterialParams params)
    : params_(std::move(params)),
      stiffness_(params_.compliance.inverse()),
      hardening_inverse_(Tensor4Sym::identity(params_.dim())) {
  const int dim = params_.dim();
  if (!(params_.kappa > 0.0)) throw std::invalid_argument("kappa must be > 0");
  if (!(params_.mu > 0.0)) throw std::invalid_argument("mu must be > 0");
  const MandelMatrix d = deviatoric_projector(dim);
  if (params_.model == HardeningModel::kinematic) {
    if (params_.kinematic_hardening.dim() != dim) {
      throw DimensionError("hardening tensor dimension differs from A");
    }
    hardening_inverse_ = params_.kinematic_hardening.inverse();
    coupling_ = d * (stiffness_.matrix() + hardening_inverse_.matrix()) * d;
    if (stiffness_.is_isotropic() && hardening_inverse_.is_isotropic()) {
      coupling_scalar_ = stiffness_.isotropic_moduli()->dev +
                         hardening_inverse_.isotropic_moduli()->dev;
    }
  } else {
    if (!(params_.isotropic_modulus > 0.0)) {
      throw std::invalid_argument("isotropic hardening modulus must be > 0");
    }
    coupling_ = d * stiffness_.matrix() * d;
    if (stiffness_.is_isotropic()) {
      coupling_scalar_ = stiffness_.isotropic_moduli()->dev;
    }
  }
}

ConstitutiveState ConstitutiveState::initial(const SymTensor2& stress) {
  const int dim = stress.dim();
  return ConstitutiveState{stress, SymTensor2::zero(dim), 0.0,
                           SymTensor2::zero(dim)};
}

LocalSolution solve_local(const ConstitutiveState& prev,
                          const SymTensor2& strain_increment, double dt,
                          const Material& material) {
  if (!(dt > 0.0)) throw std::invalid_argument("time step must be positive");
  const MaterialParams& p = material.params();
  const int dim = material.dim();
  if (strain_increment.dim() != dim || prev.stress.dim() != dim) {
    throw DimensionError("state/increment dimension differs from material");
  }

  LocalSolution out;
  out.state = prev;
  const SymTensor2 trial_stress =
      prev.stress + material.stiffness().apply(strain_increment);
  out.state.stress = trial_stress;
  out.flow = SymTensor2::zero(dim);

  SymTensor2 trial = dev(trial_stress);
  if (p.model == HardeningModel::kinematic) {
    trial -= dev(prev.back_stress);
    out.yield_radius = p.kappa;
    out.viscosity = p.mu;
  } else {
    out.yield_radius = p.kappa + prev.iso_hardening;
    out.viscosity = p.mu + dt / p.isotropic_modulus;
  }
  const double k = out.yield_radius;
  const double m = out.viscosity;
  out.relative = trial;

  const double trial_len = norm(trial);
  if (trial_len <= k) return out;
  out.plastic = true;

  const MandelVector& s_tr = trial.mandel();
  const MandelMatrix& coupling = material.coupling();
  const MandelVector dir = s_tr / trial_len;
  const double c = material.coupling_scalar().value_or(
      dir.dot(coupling * dir));
  // Radial guess; exact when the coupling is isotropic on deviators.
  MandelVector s = (k + (trial_len - k) * m / (m + dt * c)) * dir;

  if (!material.coupling_scalar()) {
    const MandelMatrix d = deviatoric_projector(dim);
    const int n = static_cast<int>(s.size());
    const double tol = kLocalTolerance * std::max(1.0, trial_len);
    auto residual = [&](const MandelVector& x) -> MandelVector {
      return x + dt * (coupling * penalty_vector(x, k, m)) - s_tr;
    };
    MandelVector r = residual(s);
    double rnorm = r.norm();
    int it = 0;
    for (; rnorm > tol; ++it) {
      if (it >= kLocalIterations) {
        throw LocalSolveError("local update did not converge (residual " +
                                  std::to_string(rnorm) +
                                  "); reduce dt/mu",
                              out.state);
      }
      const MandelMatrix jac = MandelMatrix::Identity(n, n) +
                               dt * coupling * penalty_jacobian(s, k, m, d);
      const MandelVector step = jac.partialPivLu().solve(-r);
      double alpha = 1.0;
      MandelVector next = s + step;
      MandelVector rnext = residual(next);
      while (rnext.norm() > (1.0 - 1e-4 * alpha) * rnorm && alpha > 1e-10) {
        alpha *= 0.5;
        next = s + alpha * step;
        rnext = residual(next);
      }
      s = next;
      r = rnext;
      rnorm = r.norm();
    }
    out.iterations = it;
  }

  out.relative = SymTensor2(dim, s);
  out.flow = SymTensor2(dim, penalty_vector(s, k, m));
  out.state.stress = trial_stress - dt * material.stiffness().apply(out.flow);
  if (p.model == HardeningModel::kinematic) {
    out.state.back_stress += dt * material.hardening_inverse().apply(out.flow);
  } else {
    out.state.iso_hardening += dt * norm(out.flow) / p.isotropic_modulus;
  }
  out.state.plastic_strain += dt * out.flow;
  return out;
}

ConstitutiveState local_update(const ConstitutiveState& prev,
                               const SymTensor2& strain_increment, double dt,
                               const Material& material) {
  return solve_local(prev, strain_increment, dt, material).state;
}

Tensor4Sym consistent_tangent(const LocalSolution& solution, double dt,
                              const Material& material) {
  const int dim = material.dim();
  const MandelMatrix& stiff = material.stiffness().matrix();
  const double k = solution.yield_radius;
  if (!solution.plastic ||
      norm(solution.relative) - k <= kKinkWidth * std::max(1.0, k)) {
    return material.stiffness();
  }
  const int n = mandel_size(dim);
  const MandelMatrix d = deviatoric_projector(dim);
  const MandelMatrix g =
      penalty_jacobian(solution.relative.mandel(), k, solution.viscosity, d);
  const MandelMatrix lhs =
      MandelMatrix::Identity(n, n) + dt * material.coupling() * g;
  const MandelMatrix ds = lhs.partialPivLu().solve(d * stiff);
  return Tensor4Sym::from_mandel(dim, stiff - dt * stiff * g * ds);
}

Tensor4Sym consistent_tangent(const ConstitutiveState& prev,
                              const SymTensor2& strain_increment, double dt,
                              const Material& material) {
  return consistent_tangent(solve_local(prev, strain_increment, dt, material),
                            dt, material);
}

SymTensor2 yield_argument(const ConstitutiveState& state,
                          HardeningModel model) {
  if (model == HardeningModel::kinematic) {
    return dev(state.stress) - dev(state.back_stress);
  }
  return dev(state.stress);
}

double yield_radius(const ConstitutiveState& state,
                    const MaterialParams& params) {
  return params.model == HardeningModel::kinematic
             ? params.kappa
             : params.kappa + state.iso_hardening;
}

double yield_overshoot(const ConstitutiveState& state,
                       const MaterialParams& params) {
  return std::max(0.0, norm(yield_argument(state, params.model)) -
                           yield_radius(state, params));
}

KktDiagnostics kkt_residual(const ConstitutiveState& state,
                            const SymTensor2& plastic_rate,
                            const MaterialParams& params) {
  const SymTensor2 beta = yield_argument(state, params.model);
  const double len = norm(beta);
  const double radius = yield_radius(state, params);
  const double rate = norm(plastic_rate);
  KktDiagnostics out;
  out.feasibility = std::max(0.0, len - radius);
  out.complementarity = rate * std::abs(len - radius);
  if (rate > 0.0) {
    out.alignment = len > 0.0 ? norm(plastic_rate - (rate / len) * beta) : rate;
  }
  return out;
}

}  // namespace hardening
