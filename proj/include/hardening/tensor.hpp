#pragma once

#include <array>
#include <optional>
#include <span>
#include <stdexcept>

#include <Eigen/Dense>

namespace hardening {

/// Raised when tensors of different spatial dimension are combined.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Components of a symmetric tensor in Mandel storage (at most 6).
using MandelVector = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, 6, 1>;
/// Linear map on Mandel vectors (at most 6x6).
using MandelMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, 6, 6>;

/// Number of independent components of a symmetric d x d tensor.
constexpr int mandel_size(int dim) { return dim * (dim + 1) / 2; }

/// Row/column of the full matrix for Mandel slot k.
std::pair<int, int> mandel_index(int dim, int k);

/// Symmetric second-order tensor in dimension 2 or 3.
///
/// Storage is Mandel-weighted: diagonal entries first, then off-diagonal
/// entries scaled by sqrt(2), so the Euclidean product of the storage
/// vectors equals the Frobenius contraction of the full matrices.
class SymTensor2 {
 public:
  SymTensor2() : SymTensor2(2) {}
  explicit SymTensor2(int dim);
  SymTensor2(int dim, const MandelVector& mandel);

  static SymTensor2 zero(int dim) { return SymTensor2(dim); }
  static SymTensor2 identity(int dim);
  /// Symmetric part of a square matrix (only the leading dim x dim block).
  static SymTensor2 from_matrix(const Eigen::Ref<const Eigen::MatrixXd>& m);
  static SymTensor2 diag(std::span<const double> entries);

  int dim() const { return dim_; }
  int size() const { return static_cast<int>(v_.size()); }

  /// Full-matrix component (i, j).
  double operator()(int i, int j) const;
  double trace() const;
  Eigen::MatrixXd to_matrix() const;

  const MandelVector& mandel() const { return v_; }
  MandelVector& mandel() { return v_; }
  double operator[](int k) const { return v_[k]; }
  double& operator[](int k) { return v_[k]; }

  SymTensor2& operator+=(const SymTensor2& o);
  SymTensor2& operator-=(const SymTensor2& o);
  SymTensor2& operator*=(double s);
  SymTensor2& operator/=(double s);

 private:
  int dim_;
  MandelVector v_;
};

SymTensor2 operator+(SymTensor2 a, const SymTensor2& b);
SymTensor2 operator-(SymTensor2 a, const SymTensor2& b);
SymTensor2 operator-(SymTensor2 a);
SymTensor2 operator*(double s, SymTensor2 a);
SymTensor2 operator*(SymTensor2 a, double s);
SymTensor2 operator/(SymTensor2 a, double s);

/// Frobenius double contraction S : T.
double inner(const SymTensor2& s, const SymTensor2& t);
double norm(const SymTensor2& t);
/// Trace-free part, T - tr(T)/d I.
SymTensor2 dev(const SymTensor2& t);

/// Symmetric fourth-order tensor acting on SymTensor2 in Mandel form.
///
/// The isotropic form c_dev P_dev + c_vol P_vol keeps a fast path that
/// avoids the dense product.
class Tensor4Sym {
 public:
  struct IsotropicModuli {
    double dev = 1.0;
    double vol = 1.0;
  };

  Tensor4Sym() : Tensor4Sym(identity(2)) {}

  static Tensor4Sym identity(int dim);
  static Tensor4Sym scaled_identity(int dim, double factor);
  /// c_dev P_dev + c_vol P_vol.
  static Tensor4Sym isotropic(int dim, double c_dev, double c_vol);
  /// Elastic compliance of the stiffness 2G I + lambda (I x I).
  static Tensor4Sym lame_compliance(int dim, double shear, double lambda);
  /// Dense Mandel matrix. The matrix is stored as given; symmetry is checked
  /// by check_ellipticity, not here.
  static Tensor4Sym from_mandel(int dim, const MandelMatrix& m);

  int dim() const { return dim_; }
  int size() const { return static_cast<int>(m_.rows()); }
  const MandelMatrix& matrix() const { return m_; }
  const std::optional<IsotropicModuli>& isotropic_moduli() const {
    return iso_;
  }
  bool is_isotropic() const { return iso_.has_value(); }

  SymTensor2 apply(const SymTensor2& t) const;
  /// Dense product, bypassing the isotropic fast path.
  SymTensor2 apply_dense(const SymTensor2& t) const;
  Tensor4Sym inverse() const;

 private:
  Tensor4Sym(int dim, MandelMatrix m, std::optional<IsotropicModuli> iso)
      : dim_(dim), m_(std::move(m)), iso_(iso) {}

  int dim_;
  MandelMatrix m_;
  std::optional<IsotropicModuli> iso_;
};

inline SymTensor2 apply4(const Tensor4Sym& c, const SymTensor2& t) {
  return c.apply(t);
}

/// Mandel matrix of the deviatoric projector.
MandelMatrix deviatoric_projector(int dim);

struct EllipticityReport {
  bool pass = false;
  double lambda_min = 0.0;
  double lambda_max = 0.0;
};

/// Extremal eigenvalues of C and whether c1 <= lambda_min, lambda_max <= 1/c1.
/// Throws std::invalid_argument for c1 <= 0 or a major-symmetry defect
/// larger than 1e-12 (relative to the largest entry).
EllipticityReport check_ellipticity(const Tensor4Sym& c, double c1);

/// Penalty flow direction mu^-1 (|beta| - kappa)_+ beta/|beta|.
/// Exactly zero whenever |beta| <= kappa.
SymTensor2 penalty(const SymTensor2& beta, double kappa, double mu);

}  // namespace hardening
