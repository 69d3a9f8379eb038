#include "hardening/data.hpp"

#include <cmath>
#include <stdexcept>

namespace hardening {

namespace {

using nlohmann::json;

Eigen::MatrixXd matrix_from_json(const json& j, int dim, const std::string& what) {
  if (!j.is_array() || static_cast<int>(j.size()) != dim) {
    throw std::invalid_argument(what + ": expected a " + std::to_string(dim) +
                                "x" + std::to_string(dim) + " matrix");
  }
  Eigen::MatrixXd m(dim, dim);
  for (int i = 0; i < dim; ++i) {
    if (!j[i].is_array() || static_cast<int>(j[i].size()) != dim) {
      throw std::invalid_argument(what + ": row " + std::to_string(i) +
                                  " has wrong length");
    }
    for (int k = 0; k < dim; ++k) m(i, k) = j[i][k].get<double>();
  }
  return m;
}

json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (int i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (int k = 0; k < m.cols(); ++k) row.push_back(m(i, k));
    rows.push_back(row);
  }
  return rows;
}

std::vector<Eigen::MatrixXd> matrices_from_json(const json& j, int dim,
                                                const std::string& what) {
  if (!j.is_array() || static_cast<int>(j.size()) != dim) {
    throw std::invalid_argument(what + ": expected " + std::to_string(dim) +
                                " matrices");
  }
  std::vector<Eigen::MatrixXd> out;
  for (int i = 0; i < dim; ++i) {
    out.push_back(matrix_from_json(j[i], dim, what));
  }
  return out;
}

int power_of(const json& term, const std::string& what) {
  const int p = term.value("power", 0);
  if (p < 0) throw std::invalid_argument(what + ": power must be >= 0");
  return p;
}

Eigen::MatrixXd sym(const Eigen::MatrixXd& m) {
  return 0.5 * (m + m.transpose());
}

}  // namespace

PolynomialGenerator::PolynomialGenerator(int dim, const Tensor4Sym& compliance,
                                         std::vector<StressTerm> stress,
                                         std::vector<DisplacementTerm> displacement,
                                         std::vector<ForceTerm> force,
                                         bool explicit_force)
    : dim_(dim),
      stress_(std::move(stress)),
      displacement_(std::move(displacement)),
      force_(std::move(force)),
      explicit_force_(explicit_force) {
  if (compliance.dim() != dim) {
    throw DimensionError("generator dimension differs from compliance");
  }
  for (auto& term : stress_) {
    term.value = sym(term.value);
    for (auto& g : term.gradient) g = sym(g);
  }
  // Affine initial strain A sigma0(0, x) = eps0 + sum_j x_j eps_j.
  Eigen::MatrixXd eps0 = Eigen::MatrixXd::Zero(dim, dim);
  std::vector<Eigen::MatrixXd> eps(dim, Eigen::MatrixXd::Zero(dim, dim));
  for (const auto& term : stress_) {
    if (term.power != 0) continue;
    eps0 += compliance.apply(SymTensor2::from_matrix(term.value)).to_matrix();
    for (int j = 0; j < static_cast<int>(term.gradient.size()); ++j) {
      eps[j] +=
          compliance.apply(SymTensor2::from_matrix(term.gradient[j])).to_matrix();
    }
  }
  base_linear_ = eps0;
  // a_ijk = e_ijk + e_ikj - e_jki with e_ilk = (eps_k)_il.
  base_quadratic_.assign(dim, Eigen::MatrixXd::Zero(dim, dim));
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j)
      for (int k = 0; k < dim; ++k) {
        base_quadratic_[i](j, k) = eps[k](i, j) + eps[j](i, k) - eps[i](j, k);
      }
}

std::unique_ptr<PolynomialGenerator> PolynomialGenerator::from_json(
    const json& spec, const Tensor4Sym& compliance) {
  const int dim = compliance.dim();
  std::vector<StressTerm> stress;
  for (const auto& t : spec.value("stress", json::array())) {
    StressTerm term;
    term.power = power_of(t, "data.stress");
    term.value = t.contains("value")
                     ? matrix_from_json(t["value"], dim, "data.stress.value")
                     : Eigen::MatrixXd::Zero(dim, dim);
    if (t.contains("gradient")) {
      term.gradient = matrices_from_json(t["gradient"], dim, "data.stress.gradient");
    }
    stress.push_back(std::move(term));
  }
  std::vector<DisplacementTerm> displacement;
  for (const auto& t : spec.value("displacement", json::array())) {
    DisplacementTerm term;
    term.power = power_of(t, "data.displacement");
    term.linear = t.contains("linear")
                      ? matrix_from_json(t["linear"], dim, "data.displacement.linear")
                      : Eigen::MatrixXd::Zero(dim, dim);
    if (t.contains("quadratic")) {
      term.quadratic =
          matrices_from_json(t["quadratic"], dim, "data.displacement.quadratic");
    }
    displacement.push_back(std::move(term));
  }
  std::vector<ForceTerm> force;
  const bool explicit_force = spec.contains("body_force");
  if (explicit_force) {
    for (const auto& t : spec["body_force"]) {
      ForceTerm term;
      term.power = power_of(t, "data.body_force");
      const auto& v = t.at("value");
      if (!v.is_array() || static_cast<int>(v.size()) != dim) {
        throw std::invalid_argument("data.body_force.value: expected a vector");
      }
      term.value.resize(dim);
      for (int i = 0; i < dim; ++i) term.value[i] = v[i].get<double>();
      force.push_back(std::move(term));
    }
  }
  return std::make_unique<PolynomialGenerator>(dim, compliance, std::move(stress),
                                               std::move(displacement),
                                               std::move(force), explicit_force);
}

Point PolynomialGenerator::displacement(double t, const Point& x) const {
  const Eigen::VectorXd xv = x.head(dim_);
  Eigen::VectorXd u = base_linear_ * xv;
  for (int i = 0; i < dim_; ++i) u[i] += 0.5 * xv.dot(base_quadratic_[i] * xv);
  for (const auto& term : displacement_) {
    const double tk = std::pow(t, term.power);
    u += tk * (term.linear * xv);
    for (int i = 0; i < static_cast<int>(term.quadratic.size()); ++i) {
      u[i] += tk * xv.dot(term.quadratic[i] * xv);
    }
  }
  return u;
}

SymTensor2 PolynomialGenerator::strain(double t, const Point& x) const {
  const Eigen::VectorXd xv = x.head(dim_);
  Eigen::MatrixXd grad = base_linear_;
  for (int i = 0; i < dim_; ++i) {
    grad.row(i) += (base_quadratic_[i] * xv).transpose();
  }
  for (const auto& term : displacement_) {
    const double tk = std::pow(t, term.power);
    grad += tk * term.linear;
    for (int i = 0; i < static_cast<int>(term.quadratic.size()); ++i) {
      const Eigen::MatrixXd& q = term.quadratic[i];
      grad.row(i) += tk * ((q + q.transpose()) * xv).transpose();
    }
  }
  return SymTensor2::from_matrix(grad);
}

SymTensor2 PolynomialGenerator::stress(double t, const Point& x) const {
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(dim_, dim_);
  for (const auto& term : stress_) {
    Eigen::MatrixXd v = term.value;
    for (int j = 0; j < static_cast<int>(term.gradient.size()); ++j) {
      v += x[j] * term.gradient[j];
    }
    s += std::pow(t, term.power) * v;
  }
  return SymTensor2::from_matrix(s);
}

Point PolynomialGenerator::body_force(double t, const Point& x) const {
  (void)x;
  Point f = Point::Zero(dim_);
  if (explicit_force_) {
    for (const auto& term : force_) f += std::pow(t, term.power) * term.value;
    return f;
  }
  // f_i = -sum_j d sigma_ij / d x_j
  for (const auto& term : stress_) {
    const double tk = std::pow(t, term.power);
    for (int j = 0; j < static_cast<int>(term.gradient.size()); ++j) {
      for (int i = 0; i < dim_; ++i) f[i] -= tk * term.gradient[j](i, j);
    }
  }
  return f;
}

nlohmann::json PolynomialGenerator::to_json() const {
  json out;
  out["generator"] = "polynomial";
  json stress = json::array();
  for (const auto& term : stress_) {
    json t{{"power", term.power}, {"value", matrix_to_json(term.value)}};
    if (!term.gradient.empty()) {
      json g = json::array();
      for (const auto& m : term.gradient) g.push_back(matrix_to_json(m));
      t["gradient"] = g;
    }
    stress.push_back(t);
  }
  out["stress"] = stress;
  json disp = json::array();
  for (const auto& term : displacement_) {
    json t{{"power", term.power}, {"linear", matrix_to_json(term.linear)}};
    if (!term.quadratic.empty()) {
      json q = json::array();
      for (const auto& m : term.quadratic) q.push_back(matrix_to_json(m));
      t["quadratic"] = q;
    }
    disp.push_back(t);
  }
  out["displacement"] = disp;
  if (explicit_force_) {
    json force = json::array();
    for (const auto& term : force_) {
      json v = json::array();
      for (int i = 0; i < term.value.size(); ++i) v.push_back(term.value[i]);
      force.push_back({{"power", term.power}, {"value", v}});
    }
    out["body_force"] = force;
  }
  return out;
}

std::shared_ptr<const DataGenerator> make_generator(const nlohmann::json& spec,
                                                    int dim,
                                                    const Tensor4Sym& compliance) {
  if (compliance.dim() != dim) {
    throw DimensionError("generator dimension differs from compliance");
  }
  const std::string id = spec.value("generator", std::string{});
  if (id == "polynomial") return PolynomialGenerator::from_json(spec, compliance);
  throw std::invalid_argument("unknown data generator id '" + id + "'");
}

}  // namespace hardening
