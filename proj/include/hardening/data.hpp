#pragma once

#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "hardening/grid.hpp"
#include "hardening/tensor.hpp"

namespace hardening {

/// Closed-form boundary/initial data u0(t,x), sigma0(t,x), f(t,x).
class DataGenerator {
 public:
  virtual ~DataGenerator() = default;

  virtual int dim() const = 0;
  virtual Point displacement(double t, const Point& x) const = 0;
  /// Symmetric gradient of displacement(), evaluated analytically.
  virtual SymTensor2 strain(double t, const Point& x) const = 0;
  virtual SymTensor2 stress(double t, const Point& x) const = 0;
  virtual Point body_force(double t, const Point& x) const = 0;
  /// Generator id and parameters, as accepted by make_generator.
  virtual nlohmann::json to_json() const = 0;
};

/// Stress affine in x and polynomial in t; displacement polynomial in t with
/// linear and quadratic spatial terms.
///
///   sigma0(t,x) = sum_k t^k (S_k + sum_j x_j G_kj)
///   u0(t,x)     = u_c(x) + sum_k t^k (L_k x + Q_k[x, x])
///   f(t,x)      = -div sigma0 unless given explicitly
///
/// u_c is the quadratic field with E(u_c) = A sigma0(0, .), so the initial
/// compatibility E(u0(0)) = A sigma0(0) holds exactly unless a power-0
/// displacement term with nonzero strain is added.
class PolynomialGenerator : public DataGenerator {
 public:
  struct StressTerm {
    int power = 0;
    Eigen::MatrixXd value;                  // d x d, symmetrized
    std::vector<Eigen::MatrixXd> gradient;  // d matrices or empty
  };
  struct DisplacementTerm {
    int power = 1;
    Eigen::MatrixXd linear;                  // d x d, u_i += L_ij x_j
    std::vector<Eigen::MatrixXd> quadratic;  // d matrices Q_i, u_i += x^T Q_i x
  };
  struct ForceTerm {
    int power = 0;
    Eigen::VectorXd value;
  };

  PolynomialGenerator(int dim, const Tensor4Sym& compliance,
                      std::vector<StressTerm> stress,
                      std::vector<DisplacementTerm> displacement,
                      std::vector<ForceTerm> force = {},
                      bool explicit_force = false);

  static std::unique_ptr<PolynomialGenerator> from_json(
      const nlohmann::json& spec, const Tensor4Sym& compliance);

  int dim() const override { return dim_; }
  Point displacement(double t, const Point& x) const override;
  SymTensor2 strain(double t, const Point& x) const override;
  SymTensor2 stress(double t, const Point& x) const override;
  Point body_force(double t, const Point& x) const override;
  nlohmann::json to_json() const override;

 private:
  int dim_;
  std::vector<StressTerm> stress_;
  std::vector<DisplacementTerm> displacement_;
  std::vector<ForceTerm> force_;
  bool explicit_force_;
  // Compatible initial displacement u_i = B_ij x_j + 1/2 a_ijk x_j x_k.
  Eigen::MatrixXd base_linear_;
  std::vector<Eigen::MatrixXd> base_quadratic_;  // a_i as d x d
};

/// Builds a generator from its JSON description ({"generator": id, ...}).
/// Known ids: "polynomial". Throws std::invalid_argument for unknown ids.
std::shared_ptr<const DataGenerator> make_generator(
    const nlohmann::json& spec, int dim, const Tensor4Sym& compliance);

}  // namespace hardening
