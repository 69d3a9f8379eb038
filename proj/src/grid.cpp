#include "hardening/grid.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include <Eigen/IterativeLinearSolvers>

#include "hardening/errors.hpp"

namespace hardening {

namespace {

constexpr double kInvSqrt3 = 0.57735026918962576451;
constexpr double kInvSqrt2 = 0.70710678118654752440;

double smooth_ramp(double t) {
  if (t <= 0.0) return 0.0;
  if (t >= 1.0) return 1.0;
  return t * t * t * (10.0 + t * (-15.0 + 6.0 * t));
}

// 0 outside (lo, hi), ramps up on (lo, lo + w), 1 on [lo + w, hi - w].
double plateau(double x, double lo, double hi, double w) {
  return smooth_ramp((x - lo) / w) * smooth_ramp((hi - x) / w);
}

}  // namespace

const char* to_string(BoundaryMode mode) {
  switch (mode) {
    case BoundaryMode::mixed:
      return "mixed";
    case BoundaryMode::all_dirichlet:
      return "all-dirichlet";
    case BoundaryMode::all_neumann_bottom:
      return "all-neumann-bottom";
  }
  return "?";
}

BoundaryMode boundary_mode_from_string(const std::string& name) {
  if (name == "mixed") return BoundaryMode::mixed;
  if (name == "all-dirichlet") return BoundaryMode::all_dirichlet;
  if (name == "all-neumann-bottom") return BoundaryMode::all_neumann_bottom;
  throw std::invalid_argument("unknown boundary mode '" + name + "'");
}

const char* to_string(CutoffSide side) {
  return side == CutoffSide::neumann ? "neumann" : "dirichlet";
}

CutoffSide cutoff_side_from_string(const std::string& name) {
  if (name == "neumann") return CutoffSide::neumann;
  if (name == "dirichlet") return CutoffSide::dirichlet;
  throw std::invalid_argument("unknown cutoff side '" + name + "'");
}

Grid::Grid(Geometry geometry, int n) : geometry_(geometry), n_(n) {
  const int d = geometry.dim;
  if (d != 2 && d != 3) throw DimensionError("dimension must be 2 or 3");
  if (n < 2) throw std::invalid_argument("grid needs n >= 2");
  for (int j = 0; j < d; ++j) cells_[j] = j < d - 1 ? 2 * n : n;
  num_nodes_ = 1;
  num_cells_ = 1;
  for (int j = 0; j < d; ++j) {
    num_nodes_ *= cells_[j] + 1;
    num_cells_ *= cells_[j];
  }
  const double h = mesh_size();
  qp_weight_ = std::pow(0.5 * h, d);

  const int split = d - 2;  // axis x_{d-1}, zero-based
  const int normal = d - 1;
  dirichlet_.assign(num_nodes_, false);
  for (int node = 0; node < num_nodes_; ++node) {
    const auto idx = node_multi_index(node);
    bool lateral = false;
    for (int j = 0; j < d - 1; ++j) {
      lateral = lateral || idx[j] == 0 || idx[j] == cells_[j];
    }
    const bool top = idx[normal] == n;
    const bool bottom = idx[normal] == 0;
    bool dir = lateral || top;
    if (bottom) {
      switch (geometry.mode) {
        case BoundaryMode::all_dirichlet:
          dir = true;
          break;
        case BoundaryMode::mixed:
          dir = dir || idx[split] <= n;  // x_{d-1} <= 0
          break;
        case BoundaryMode::all_neumann_bottom:
          break;
      }
    }
    dirichlet_[node] = dir;
  }
  if (geometry.mode != BoundaryMode::all_dirichlet) {
    for (int cell = 0; cell < num_cells_; ++cell) {
      const auto idx = cell_multi_index(cell);
      if (idx[normal] != 0) continue;
      if (geometry.mode == BoundaryMode::mixed && idx[split] < n) continue;
      neumann_cells_.push_back(cell);
    }
  }

  const int nq = qp_per_cell();
  const int na = nodes_per_cell();
  const int m = mandel_size(d);
  shape_.resize(nq * na);
  grad_.resize(nq * na * d);
  bmat_.assign(nq, Eigen::MatrixXd::Zero(m, na * d));
  for (int q = 0; q < nq; ++q) {
    for (int a = 0; a < na; ++a) {
      double value = 1.0;
      for (int j = 0; j < d; ++j) {
        const double xi = ((q >> j) & 1 ? 1.0 : -1.0) * kInvSqrt3;
        const double s = (a >> j) & 1 ? 1.0 : -1.0;
        value *= 0.5 * (1.0 + s * xi);
      }
      shape_[q * na + a] = value;
      for (int j = 0; j < d; ++j) {
        double g = ((a >> j) & 1 ? 1.0 : -1.0) / h;
        for (int k = 0; k < d; ++k) {
          if (k == j) continue;
          const double xi = ((q >> k) & 1 ? 1.0 : -1.0) * kInvSqrt3;
          const double s = (a >> k) & 1 ? 1.0 : -1.0;
          g *= 0.5 * (1.0 + s * xi);
        }
        grad_[(q * na + a) * d + j] = g;
      }
      for (int k = 0; k < m; ++k) {
        auto [i, j] = mandel_index(d, k);
        if (i == j) {
          bmat_[q](k, a * d + i) = shape_grad(q, a, i);
        } else {
          bmat_[q](k, a * d + i) = kInvSqrt2 * shape_grad(q, a, j);
          bmat_[q](k, a * d + j) = kInvSqrt2 * shape_grad(q, a, i);
        }
      }
    }
  }
}

std::array<int, 3> Grid::cell_multi_index(int cell) const {
  std::array<int, 3> idx{0, 0, 0};
  for (int j = 0; j < dim(); ++j) {
    idx[j] = cell % cells_[j];
    cell /= cells_[j];
  }
  return idx;
}

int Grid::cell_index(const std::array<int, 3>& idx) const {
  int cell = 0;
  for (int j = dim() - 1; j >= 0; --j) cell = cell * cells_[j] + idx[j];
  return cell;
}

std::array<int, 3> Grid::node_multi_index(int node) const {
  std::array<int, 3> idx{0, 0, 0};
  for (int j = 0; j < dim(); ++j) {
    idx[j] = node % (cells_[j] + 1);
    node /= cells_[j] + 1;
  }
  return idx;
}

int Grid::node_index(const std::array<int, 3>& idx) const {
  int node = 0;
  for (int j = dim() - 1; j >= 0; --j) node = node * (cells_[j] + 1) + idx[j];
  return node;
}

int Grid::cell_node(int cell, int a) const {
  auto idx = cell_multi_index(cell);
  for (int j = 0; j < dim(); ++j) idx[j] += (a >> j) & 1;
  return node_index(idx);
}

Point Grid::node_coord(int node) const {
  const auto idx = node_multi_index(node);
  Point x(dim());
  for (int j = 0; j < dim(); ++j) {
    x[j] = (j < dim() - 1 ? -1.0 : 0.0) + idx[j] * mesh_size();
  }
  return x;
}

Point Grid::qp_coord(int qp) const {
  const auto idx = cell_multi_index(qp_cell(qp));
  const int q = qp_local(qp);
  Point x(dim());
  for (int j = 0; j < dim(); ++j) {
    const double xi = ((q >> j) & 1 ? 1.0 : -1.0) * kInvSqrt3;
    x[j] = (j < dim() - 1 ? -1.0 : 0.0) +
           (idx[j] + 0.5 * (1.0 + xi)) * mesh_size();
  }
  return x;
}

Grid build_grid(const Geometry& geometry, int n) { return Grid(geometry, n); }

void sym_gradient_into(std::span<const double> u, const Grid& grid,
                       std::span<double> out) {
  const int d = grid.dim();
  const int m = mandel_size(d);
  const int na = grid.nodes_per_cell();
  if (static_cast<int>(u.size()) != grid.num_dofs() ||
      static_cast<int>(out.size()) != grid.num_qp() * m) {
    throw DimensionError("field size does not match the grid");
  }
  Eigen::VectorXd ue(na * d);
  for (int cell = 0; cell < grid.num_cells(); ++cell) {
    for (int a = 0; a < na; ++a) {
      const int node = grid.cell_node(cell, a);
      for (int c = 0; c < d; ++c) ue[a * d + c] = u[node * d + c];
    }
    for (int q = 0; q < grid.qp_per_cell(); ++q) {
      const int qp = cell * grid.qp_per_cell() + q;
      Eigen::Map<Eigen::VectorXd>(out.data() + qp * m, m) =
          grid.strain_matrix(q) * ue;
    }
  }
}

std::vector<SymTensor2> sym_gradient(std::span<const double> u,
                                     const Grid& grid) {
  const int m = mandel_size(grid.dim());
  std::vector<double> flat(grid.num_qp() * m);
  sym_gradient_into(u, grid, flat);
  std::vector<SymTensor2> out;
  out.reserve(grid.num_qp());
  for (int qp = 0; qp < grid.num_qp(); ++qp) {
    out.emplace_back(grid.dim(),
                     Eigen::Map<const Eigen::VectorXd>(flat.data() + qp * m, m));
  }
  return out;
}

std::vector<double> displacement_gradient(std::span<const double> u,
                                          const Grid& grid) {
  const int d = grid.dim();
  if (static_cast<int>(u.size()) != grid.num_dofs()) {
    throw DimensionError("field size does not match the grid");
  }
  std::vector<double> out(static_cast<std::size_t>(grid.num_qp()) * d * d, 0.0);
  for (int cell = 0; cell < grid.num_cells(); ++cell) {
    for (int q = 0; q < grid.qp_per_cell(); ++q) {
      double* g = out.data() + (cell * grid.qp_per_cell() + q) * d * d;
      for (int a = 0; a < grid.nodes_per_cell(); ++a) {
        const int node = grid.cell_node(cell, a);
        for (int i = 0; i < d; ++i)
          for (int j = 0; j < d; ++j)
            g[i * d + j] += u[node * d + i] * grid.shape_grad(q, a, j);
      }
    }
  }
  return out;
}

Cutoff::Cutoff(int dim, double eps0, double h0, CutoffSide side)
    : dim_(dim), eps0_(eps0), h0_(h0), side_(side) {
  if (!(eps0 > 0.0 && eps0 < 0.5) || !(h0 > 0.0 && h0 < 0.5)) {
    throw std::invalid_argument("cutoff needs 0 < eps0 < 1/2, 0 < h0 < 1/2");
  }
  if (eps0 >= 0.25) {
    throw std::invalid_argument(
        "cutoff margins leave an empty core region (eps0 must be < 1/4)");
  }
}

double Cutoff::operator()(const Point& x) const {
  const double e = eps0_;
  double value = 1.0;
  for (int j = 0; j < dim_ - 2; ++j) {
    value *= plateau(x[j], -1.0 + e, 1.0 - e, e);
  }
  const double s = x[dim_ - 2];
  value *= side_ == CutoffSide::neumann ? plateau(s, e, 1.0 - e, e)
                                        : plateau(s, -1.0 + e, -e, e);
  const double z = x[dim_ - 1];
  value *= z <= 0.5 ? 1.0 : smooth_ramp((1.0 - e - z) / (0.5 - e));
  return value;
}

void Cutoff::sample(const Grid& grid) {
  qp_values_.resize(grid.num_qp());
  for (int qp = 0; qp < grid.num_qp(); ++qp) {
    qp_values_[qp] = (*this)(grid.qp_coord(qp));
  }
  node_values_.resize(grid.num_nodes());
  for (int node = 0; node < grid.num_nodes(); ++node) {
    node_values_[node] = (*this)(grid.node_coord(node));
  }
}

Cutoff make_cutoff(const Grid& grid, double eps0, double h0, CutoffSide side) {
  Cutoff cutoff(grid.dim(), eps0, h0, side);
  cutoff.sample(grid);
  return cutoff;
}

DofMap::DofMap(const Grid& grid) : free_(grid.num_dofs(), -1) {
  const int d = grid.dim();
  for (int node = 0; node < grid.num_nodes(); ++node) {
    if (grid.node_is_dirichlet(node)) continue;
    for (int c = 0; c < d; ++c) free_[node * d + c] = num_free_++;
  }
}

Eigen::VectorXd DofMap::restrict(const Eigen::VectorXd& full) const {
  Eigen::VectorXd out(num_free_);
  for (int i = 0; i < static_cast<int>(free_.size()); ++i) {
    if (free_[i] >= 0) out[free_[i]] = full[i];
  }
  return out;
}

Assembler::Assembler(const Grid& grid) : grid_(&grid), dofs_(grid) {
  const int d = grid.dim();
  const int nd = grid.nodes_per_cell() * d;
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(static_cast<std::size_t>(grid.num_cells()) * nd * nd);
  std::vector<int> cell_dofs(nd);
  auto gather = [&](int cell) {
    for (int a = 0; a < grid.nodes_per_cell(); ++a) {
      const int node = grid.cell_node(cell, a);
      for (int c = 0; c < d; ++c) {
        cell_dofs[a * d + c] = dofs_.free_index(node * d + c);
      }
    }
  };
  for (int cell = 0; cell < grid.num_cells(); ++cell) {
    gather(cell);
    for (int r : cell_dofs) {
      if (r < 0) continue;
      for (int c : cell_dofs) {
        if (c >= 0) triplets.emplace_back(r, c, 0.0);
      }
    }
  }
  matrix_.resize(dofs_.num_free(), dofs_.num_free());
  matrix_.setFromTriplets(triplets.begin(), triplets.end());
  matrix_.makeCompressed();

  scatter_.assign(static_cast<std::size_t>(grid.num_cells()) * nd * nd, -1);
  const int* outer = matrix_.outerIndexPtr();
  const int* inner = matrix_.innerIndexPtr();
  for (int cell = 0; cell < grid.num_cells(); ++cell) {
    gather(cell);
    for (int i = 0; i < nd; ++i) {
      const int r = cell_dofs[i];
      if (r < 0) continue;
      for (int j = 0; j < nd; ++j) {
        const int c = cell_dofs[j];
        if (c < 0) continue;
        const int* begin = inner + outer[c];
        const int* end = inner + outer[c + 1];
        const int* pos = std::lower_bound(begin, end, r);
        scatter_[(static_cast<std::size_t>(cell) * nd + i) * nd + j] =
            static_cast<int>(pos - inner);
      }
    }
  }
}

Eigen::VectorXd Assembler::internal_force(
    std::span<const double> stress) const {
  const Grid& grid = *grid_;
  const int d = grid.dim();
  const int m = mandel_size(d);
  if (static_cast<int>(stress.size()) != grid.num_qp() * m) {
    throw DimensionError("stress field size does not match the grid");
  }
  Eigen::VectorXd force = Eigen::VectorXd::Zero(grid.num_dofs());
  Eigen::VectorXd fe(grid.nodes_per_cell() * d);
  for (int cell = 0; cell < grid.num_cells(); ++cell) {
    fe.setZero();
    for (int q = 0; q < grid.qp_per_cell(); ++q) {
      const int qp = cell * grid.qp_per_cell() + q;
      fe.noalias() += grid.strain_matrix(q).transpose() *
                      Eigen::Map<const Eigen::VectorXd>(stress.data() + qp * m, m);
    }
    fe *= grid.qp_weight();
    for (int a = 0; a < grid.nodes_per_cell(); ++a) {
      const int node = grid.cell_node(cell, a);
      for (int c = 0; c < d; ++c) force[node * d + c] += fe[a * d + c];
    }
  }
  return force;
}

Eigen::VectorXd Assembler::external_force(
    const std::function<Point(const Point&)>& body_force,
    const std::function<SymTensor2(const Point&)>& boundary_stress) const {
  const Grid& grid = *grid_;
  const int d = grid.dim();
  const double h = grid.mesh_size();
  Eigen::VectorXd force = Eigen::VectorXd::Zero(grid.num_dofs());
  if (body_force) {
    for (int cell = 0; cell < grid.num_cells(); ++cell) {
      for (int q = 0; q < grid.qp_per_cell(); ++q) {
        const Point f = body_force(grid.qp_coord(cell * grid.qp_per_cell() + q));
        for (int a = 0; a < grid.nodes_per_cell(); ++a) {
          const int node = grid.cell_node(cell, a);
          const double w = grid.qp_weight() * grid.shape(q, a);
          for (int c = 0; c < d; ++c) force[node * d + c] += w * f[c];
        }
      }
    }
  }
  if (boundary_stress) {
    // Bottom faces: outward normal -e_d, Gauss rule on the face.
    const int nf = 1 << (d - 1);
    const double wf = std::pow(0.5 * h, d - 1);
    for (int cell : grid.neumann_cells()) {
      const Point origin = grid.node_coord(grid.cell_node(cell, 0));
      for (int q = 0; q < nf; ++q) {
        Point x = origin;
        std::array<double, 2> xi{};
        for (int j = 0; j < d - 1; ++j) {
          xi[j] = ((q >> j) & 1 ? 1.0 : -1.0) * kInvSqrt3;
          x[j] += 0.5 * (1.0 + xi[j]) * h;
        }
        const SymTensor2 s = boundary_stress(x);
        for (int a = 0; a < nf; ++a) {
          double shape = 1.0;
          for (int j = 0; j < d - 1; ++j) {
            shape *= 0.5 * (1.0 + ((a >> j) & 1 ? 1.0 : -1.0) * xi[j]);
          }
          const int node = grid.cell_node(cell, a);
          for (int c = 0; c < d; ++c) {
            force[node * d + c] -= wf * shape * s(c, d - 1);
          }
        }
      }
    }
  }
  return force;
}

const SparseMatrix& Assembler::assemble_tangent(
    std::span<const MandelMatrix> tangent) {
  const Grid& grid = *grid_;
  const int d = grid.dim();
  const int nd = grid.nodes_per_cell() * d;
  const bool uniform = tangent.size() == 1;
  if (!uniform && static_cast<int>(tangent.size()) != grid.num_qp()) {
    throw DimensionError("tangent field size does not match the grid");
  }
  double* values = matrix_.valuePtr();
  std::fill(values, values + matrix_.nonZeros(), 0.0);
  Eigen::MatrixXd ke(nd, nd);
  for (int cell = 0; cell < grid.num_cells(); ++cell) {
    ke.setZero();
    for (int q = 0; q < grid.qp_per_cell(); ++q) {
      const int qp = cell * grid.qp_per_cell() + q;
      const MandelMatrix& c = tangent[uniform ? 0 : qp];
      const Eigen::MatrixXd& b = grid.strain_matrix(q);
      ke.noalias() += b.transpose() * (c * b);
    }
    ke *= grid.qp_weight();
    const int* scatter = scatter_.data() + static_cast<std::size_t>(cell) * nd * nd;
    for (int j = 0; j < nd; ++j)
      for (int i = 0; i < nd; ++i) {
        const int pos = scatter[i * nd + j];
        if (pos >= 0) values[pos] += ke(i, j);
      }
  }
  return matrix_;
}

Eigen::VectorXd assemble_residual(
    const Assembler& assembler, std::span<const double> stress,
    const std::function<Point(const Point&)>& body_force,
    const std::function<SymTensor2(const Point&)>& boundary_stress) {
  return assembler.internal_force(stress) -
         assembler.external_force(body_force, boundary_stress);
}

LinearSolver::LinearSolver(Kind kind, double cg_tolerance)
    : kind_(kind), cg_tolerance_(cg_tolerance) {}

LinearSolver::Kind LinearSolver::choose(const Grid& grid) {
  return grid.dim() == 2 || grid.n() <= 32 ? Kind::direct : Kind::cg;
}

Eigen::VectorXd LinearSolver::solve(const SparseMatrix& matrix,
                                    const Eigen::VectorXd& rhs) {
  if (matrix.rows() == 0) return Eigen::VectorXd();
  if (kind_ == Kind::direct) {
    if (!analyzed_) {
      ldlt_.analyzePattern(matrix);
      analyzed_ = true;
    }
    ldlt_.factorize(matrix);
    if (ldlt_.info() != Eigen::Success ||
        !(ldlt_.vectorD().minCoeff() > 0.0)) {
      throw SolverError(
          "singular tangent: the free block is not positive definite "
          "(missing Dirichlet constraints?)");
    }
    return ldlt_.solve(rhs);
  }
  Eigen::ConjugateGradient<SparseMatrix, Eigen::Lower | Eigen::Upper,
                           Eigen::DiagonalPreconditioner<double>>
      cg;
  cg.setTolerance(cg_tolerance_);
  cg.setMaxIterations(std::max<Eigen::Index>(1000, 10 * matrix.rows()));
  cg.compute(matrix);
  Eigen::VectorXd x = cg.solve(rhs);
  if (cg.info() != Eigen::Success) {
    throw SolverError("conjugate gradients did not converge (error " +
                      std::to_string(cg.error()) + ")");
  }
  return x;
}

}  // namespace hardening
