#pragma once

#include <optional>

#include "hardening/errors.hpp"
#include "hardening/tensor.hpp"

namespace hardening {

enum class HardeningModel { kinematic, isotropic };

const char* to_string(HardeningModel model);

/// Material data of the penalized flow rule.
///
/// `compliance` is A (elastic strain = A sigma). The kinematic model uses the
/// tensor `kinematic_hardening` (H xi_dot = e_p_dot); the isotropic model uses
/// the scalar `isotropic_modulus` (H xi_dot = |e_p_dot|).
struct MaterialParams {
  HardeningModel model = HardeningModel::kinematic;
  Tensor4Sym compliance = Tensor4Sym::identity(2);
  Tensor4Sym kinematic_hardening = Tensor4Sym::identity(2);
  double isotropic_modulus = 1.0;
  double kappa = 1.0;
  double mu = 1e-2;
  double c1 = 0.5;

  int dim() const { return compliance.dim(); }
};

/// MaterialParams together with the inverses and the deviatoric coupling
/// operator used by the local solver. Construct once, reuse per point.
class Material {
 public:
  explicit Material(MaterialParams params);

  const MaterialParams& params() const { return params_; }
  int dim() const { return params_.dim(); }
  HardeningModel model() const { return params_.model; }
  const Tensor4Sym& stiffness() const { return stiffness_; }
  const Tensor4Sym& hardening_inverse() const { return hardening_inverse_; }
  /// D (A^-1 + H^-1) D for the kinematic model, D A^-1 D for isotropic.
  const MandelMatrix& coupling() const { return coupling_; }
  /// Set when coupling() is a multiple of the deviatoric projector.
  std::optional<double> coupling_scalar() const { return coupling_scalar_; }

 private:
  MaterialParams params_;
  Tensor4Sym stiffness_;
  Tensor4Sym hardening_inverse_;
  MandelMatrix coupling_;
  std::optional<double> coupling_scalar_;
};

/// Per quadrature point record. `back_stress` is the kinematic hardening
/// variable and stays zero for the isotropic model; `iso_hardening` is the
/// scalar isotropic variable and stays zero for the kinematic model.
struct ConstitutiveState {
  SymTensor2 stress;
  SymTensor2 back_stress;
  double iso_hardening = 0.0;
  SymTensor2 plastic_strain;

  static ConstitutiveState initial(const SymTensor2& stress);
};

class LocalSolveError : public SolverError {
 public:
  LocalSolveError(const std::string& what, ConstitutiveState trial)
      : SolverError(what), trial_(std::move(trial)) {}
  const ConstitutiveState& trial_state() const { return trial_; }

 private:
  ConstitutiveState trial_;
};

/// Everything the local update produces, including the quantities needed to
/// linearize it.
struct LocalSolution {
  ConstitutiveState state;
  SymTensor2 flow;   // P, the plastic strain rate
  bool plastic = false;
  int iterations = 0;
  SymTensor2 relative;  // converged deviatoric argument of the penalty
  double yield_radius = 0.0;
  double viscosity = 0.0;
};

/// Backward-Euler step of the penalized flow rule.
///
/// Both models reduce to s + dt M g(s) = s_trial with g the penalty map of
/// radius k and viscosity m: k = kappa, m = mu for the kinematic model and
/// k = kappa + xi_prev, m = mu + dt/H for the isotropic model.
LocalSolution solve_local(const ConstitutiveState& prev,
                          const SymTensor2& strain_increment, double dt,
                          const Material& material);

ConstitutiveState local_update(const ConstitutiveState& prev,
                               const SymTensor2& strain_increment, double dt,
                               const Material& material);

/// d sigma+ / d strain_increment at a converged local solution.
Tensor4Sym consistent_tangent(const LocalSolution& solution, double dt,
                              const Material& material);

Tensor4Sym consistent_tangent(const ConstitutiveState& prev,
                              const SymTensor2& strain_increment, double dt,
                              const Material& material);

struct KktDiagnostics {
  double feasibility = 0.0;
  double complementarity = 0.0;
  double alignment = 0.0;
};

KktDiagnostics kkt_residual(const ConstitutiveState& state,
                            const SymTensor2& plastic_rate,
                            const MaterialParams& params);

/// Argument of the yield function: sigma_D - xi_D (kinematic) or sigma_D.
SymTensor2 yield_argument(const ConstitutiveState& state, HardeningModel model);
/// Current yield radius: kappa or kappa + xi.
double yield_radius(const ConstitutiveState& state,
                    const MaterialParams& params);
/// (|yield_argument| - yield_radius)_+.
double yield_overshoot(const ConstitutiveState& state,
                       const MaterialParams& params);

}  // namespace hardening
