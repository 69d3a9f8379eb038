#include "hardening/tensor.hpp"

#include <cmath>
#include <string>

namespace hardening {

namespace {

constexpr double kSqrt2 = 1.41421356237309504880;

void check_dim(int dim) {
  if (dim != 2 && dim != 3) {
    throw DimensionError("dimension must be 2 or 3, got " +
                         std::to_string(dim));
  }
}

void require_same(int a, int b) {
  if (a != b) {
    throw DimensionError("dimension mismatch: " + std::to_string(a) +
                         " vs " + std::to_string(b));
  }
}

}  // namespace

std::pair<int, int> mandel_index(int dim, int k) {
  static constexpr std::array<std::pair<int, int>, 3> k2{
      {{0, 0}, {1, 1}, {0, 1}}};
  static constexpr std::array<std::pair<int, int>, 6> k3{
      {{0, 0}, {1, 1}, {2, 2}, {1, 2}, {0, 2}, {0, 1}}};
  return dim == 2 ? k2.at(k) : k3.at(k);
}

SymTensor2::SymTensor2(int dim) : dim_(dim) {
  check_dim(dim);
  v_ = MandelVector::Zero(mandel_size(dim));
}

SymTensor2::SymTensor2(int dim, const MandelVector& mandel) : SymTensor2(dim) {
  if (mandel.size() != mandel_size(dim)) {
    throw DimensionError("Mandel vector has wrong length");
  }
  v_ = mandel;
}

SymTensor2 SymTensor2::identity(int dim) {
  SymTensor2 t(dim);
  for (int i = 0; i < dim; ++i) t.v_[i] = 1.0;
  return t;
}

SymTensor2 SymTensor2::from_matrix(
    const Eigen::Ref<const Eigen::MatrixXd>& m) {
  if (m.rows() != m.cols()) throw DimensionError("matrix is not square");
  const int dim = static_cast<int>(m.rows());
  SymTensor2 t(dim);
  for (int k = 0; k < t.size(); ++k) {
    auto [i, j] = mandel_index(dim, k);
    t.v_[k] = i == j ? m(i, i) : kSqrt2 * 0.5 * (m(i, j) + m(j, i));
  }
  return t;
}

SymTensor2 SymTensor2::diag(std::span<const double> entries) {
  SymTensor2 t(static_cast<int>(entries.size()));
  for (std::size_t i = 0; i < entries.size(); ++i) t.v_[i] = entries[i];
  return t;
}

double SymTensor2::operator()(int i, int j) const {
  if (i == j) return v_[i];
  for (int k = dim_; k < size(); ++k) {
    auto [a, b] = mandel_index(dim_, k);
    if ((a == i && b == j) || (a == j && b == i)) return v_[k] / kSqrt2;
  }
  throw std::out_of_range("tensor index out of range");
}

double SymTensor2::trace() const {
  double tr = 0.0;
  for (int i = 0; i < dim_; ++i) tr += v_[i];
  return tr;
}

Eigen::MatrixXd SymTensor2::to_matrix() const {
  Eigen::MatrixXd m(dim_, dim_);
  for (int i = 0; i < dim_; ++i)
    for (int j = 0; j < dim_; ++j) m(i, j) = (*this)(i, j);
  return m;
}

SymTensor2& SymTensor2::operator+=(const SymTensor2& o) {
  require_same(dim_, o.dim_);
  v_ += o.v_;
  return *this;
}

SymTensor2& SymTensor2::operator-=(const SymTensor2& o) {
  require_same(dim_, o.dim_);
  v_ -= o.v_;
  return *this;
}

SymTensor2& SymTensor2::operator*=(double s) {
  v_ *= s;
  return *this;
}

SymTensor2& SymTensor2::operator/=(double s) {
  v_ /= s;
  return *this;
}

SymTensor2 operator+(SymTensor2 a, const SymTensor2& b) { return a += b; }
SymTensor2 operator-(SymTensor2 a, const SymTensor2& b) { return a -= b; }
SymTensor2 operator-(SymTensor2 a) { return a *= -1.0; }
SymTensor2 operator*(double s, SymTensor2 a) { return a *= s; }
SymTensor2 operator*(SymTensor2 a, double s) { return a *= s; }
SymTensor2 operator/(SymTensor2 a, double s) { return a /= s; }

double inner(const SymTensor2& s, const SymTensor2& t) {
  require_same(s.dim(), t.dim());
  return s.mandel().dot(t.mandel());
}

double norm(const SymTensor2& t) { return t.mandel().norm(); }

SymTensor2 dev(const SymTensor2& t) {
  SymTensor2 out = t;
  const double mean = t.trace() / t.dim();
  for (int i = 0; i < t.dim(); ++i) out[i] -= mean;
  return out;
}

MandelMatrix deviatoric_projector(int dim) {
  check_dim(dim);
  const int m = mandel_size(dim);
  MandelMatrix p = MandelMatrix::Identity(m, m);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) p(i, j) -= 1.0 / dim;
  return p;
}

Tensor4Sym Tensor4Sym::identity(int dim) { return isotropic(dim, 1.0, 1.0); }

Tensor4Sym Tensor4Sym::scaled_identity(int dim, double factor) {
  return isotropic(dim, factor, factor);
}

Tensor4Sym Tensor4Sym::isotropic(int dim, double c_dev, double c_vol) {
  check_dim(dim);
  const int m = mandel_size(dim);
  const MandelMatrix pdev = deviatoric_projector(dim);
  const MandelMatrix pvol = MandelMatrix::Identity(m, m) - pdev;
  return Tensor4Sym(dim, c_dev * pdev + c_vol * pvol,
                    IsotropicModuli{c_dev, c_vol});
}

Tensor4Sym Tensor4Sym::lame_compliance(int dim, double shear, double lambda) {
  // Stiffness 2G P_dev + (2G + d lambda) P_vol, inverted term by term.
  return isotropic(dim, 1.0 / (2.0 * shear),
                   1.0 / (2.0 * shear + dim * lambda));
}

Tensor4Sym Tensor4Sym::from_mandel(int dim, const MandelMatrix& m) {
  check_dim(dim);
  if (m.rows() != mandel_size(dim) || m.cols() != mandel_size(dim)) {
    throw DimensionError("Mandel matrix has wrong shape");
  }
  return Tensor4Sym(dim, m, std::nullopt);
}

SymTensor2 Tensor4Sym::apply(const SymTensor2& t) const {
  require_same(dim_, t.dim());
  if (!iso_) return apply_dense(t);
  const double mean = t.trace() / dim_;
  SymTensor2 out = iso_->dev * t;
  const double shift = (iso_->vol - iso_->dev) * mean;
  for (int i = 0; i < dim_; ++i) out[i] += shift;
  return out;
}

SymTensor2 Tensor4Sym::apply_dense(const SymTensor2& t) const {
  require_same(dim_, t.dim());
  return SymTensor2(dim_, m_ * t.mandel());
}

Tensor4Sym Tensor4Sym::inverse() const {
  if (iso_) return isotropic(dim_, 1.0 / iso_->dev, 1.0 / iso_->vol);
  return Tensor4Sym(dim_, m_.inverse(), std::nullopt);
}

EllipticityReport check_ellipticity(const Tensor4Sym& c, double c1) {
  if (!(c1 > 0.0)) throw std::invalid_argument("C1 must be positive");
  const MandelMatrix& m = c.matrix();
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw std::invalid_argument(
        "fourth-order tensor violates major symmetry");
  }
  Eigen::SelfAdjointEigenSolver<MandelMatrix> eig(m, Eigen::EigenvaluesOnly);
  EllipticityReport r;
  r.lambda_min = eig.eigenvalues().minCoeff();
  r.lambda_max = eig.eigenvalues().maxCoeff();
  r.pass = c1 <= r.lambda_min && r.lambda_max <= 1.0 / c1;
  return r;
}

SymTensor2 penalty(const SymTensor2& beta, double kappa, double mu) {
  const double len = norm(beta);
  if (len <= kappa) return SymTensor2::zero(beta.dim());
  return ((len - kappa) / (mu * len)) * beta;
}

}  // namespace hardening
