#pragma once

#include <array>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include <Eigen/Sparse>

#include "hardening/tensor.hpp"

namespace hardening {

/// Spatial point; only the first `dim` entries are meaningful.
using Point = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, 3, 1>;

/// Which faces carry traction data.
///
/// The domain is (-1,1)^{d-1} x (0,1). In `mixed` mode the bottom face
/// x_d = 0 is Dirichlet where x_{d-1} <= 0 and Neumann where x_{d-1} > 0;
/// `all_neumann_bottom` makes the whole bottom face Neumann. All other faces
/// are always Dirichlet.
enum class BoundaryMode { mixed, all_dirichlet, all_neumann_bottom };

const char* to_string(BoundaryMode mode);
BoundaryMode boundary_mode_from_string(const std::string& name);

struct Geometry {
  int dim = 2;
  BoundaryMode mode = BoundaryMode::mixed;
};

/// Uniform Q1 grid with n cells per unit length and 2^d Gauss points per cell.
class Grid {
 public:
  Grid(Geometry geometry, int n);

  const Geometry& geometry() const { return geometry_; }
  int dim() const { return geometry_.dim; }
  int n() const { return n_; }
  double mesh_size() const { return 1.0 / n_; }

  /// Cells along axis j: 2n for tangential axes, n for the normal axis.
  int cells_along(int axis) const { return cells_[axis]; }
  int nodes_along(int axis) const { return cells_[axis] + 1; }
  int num_nodes() const { return num_nodes_; }
  int num_cells() const { return num_cells_; }
  int nodes_per_cell() const { return 1 << dim(); }
  int qp_per_cell() const { return 1 << dim(); }
  int num_qp() const { return num_cells_ * qp_per_cell(); }
  int num_dofs() const { return num_nodes_ * dim(); }

  std::array<int, 3> cell_multi_index(int cell) const;
  int cell_index(const std::array<int, 3>& idx) const;
  std::array<int, 3> node_multi_index(int node) const;
  int node_index(const std::array<int, 3>& idx) const;

  /// Global node of local node `a` (bit j of a = offset along axis j).
  int cell_node(int cell, int a) const;
  Point node_coord(int node) const;
  Point qp_coord(int qp) const;
  /// Quadrature weight, identical for every point of the uniform grid.
  double qp_weight() const { return qp_weight_; }
  int qp_cell(int qp) const { return qp / qp_per_cell(); }
  int qp_local(int qp) const { return qp % qp_per_cell(); }

  bool node_is_dirichlet(int node) const { return dirichlet_[node]; }
  /// Cells whose bottom face is a Neumann face.
  const std::vector<int>& neumann_cells() const { return neumann_cells_; }

  /// Shape function value N_a at local quadrature point q.
  double shape(int q, int a) const { return shape_[q * nodes_per_cell() + a]; }
  /// Strain-displacement matrix (Mandel rows, cell dofs a*d + c) at local q.
  const Eigen::MatrixXd& strain_matrix(int q) const { return bmat_[q]; }
  /// Gradient of N_a at local quadrature point q along axis j.
  double shape_grad(int q, int a, int j) const {
    return grad_[(q * nodes_per_cell() + a) * dim() + j];
  }

 private:
  Geometry geometry_;
  int n_;
  std::array<int, 3> cells_{1, 1, 1};
  int num_nodes_ = 0;
  int num_cells_ = 0;
  double qp_weight_ = 0.0;
  std::vector<bool> dirichlet_;
  std::vector<int> neumann_cells_;
  std::vector<double> shape_;
  std::vector<double> grad_;
  std::vector<Eigen::MatrixXd> bmat_;
};

Grid build_grid(const Geometry& geometry, int n);

/// Symmetric gradient of a nodal displacement field (length num_dofs,
/// node-major) at every quadrature point.
std::vector<SymTensor2> sym_gradient(std::span<const double> u,
                                     const Grid& grid);
/// Same, written into Mandel-flat storage (num_qp * m doubles).
void sym_gradient_into(std::span<const double> u, const Grid& grid,
                       std::span<double> out);
/// Full displacement gradient du_i/dx_j at every quadrature point,
/// row-major d*d doubles per point.
std::vector<double> displacement_gradient(std::span<const double> u,
                                          const Grid& grid);

/// Smooth localization weight in [0, 1].
enum class CutoffSide { neumann, dirichlet };
const char* to_string(CutoffSide side);
CutoffSide cutoff_side_from_string(const std::string& name);

class Cutoff {
 public:
  Cutoff(int dim, double eps0, double h0, CutoffSide side);

  double operator()(const Point& x) const;
  double eps0() const { return eps0_; }
  double h0() const { return h0_; }
  CutoffSide side() const { return side_; }
  int dim() const { return dim_; }

  const std::vector<double>& qp_values() const { return qp_values_; }
  const std::vector<double>& node_values() const { return node_values_; }
  void sample(const Grid& grid);

 private:
  int dim_;
  double eps0_;
  double h0_;
  CutoffSide side_;
  std::vector<double> qp_values_;
  std::vector<double> node_values_;
};

/// Tensor product of C^2 quintic ramps. Equal to 1 on the core region,
/// 0 within eps0 of the Dirichlet/Neumann interface and of every face but the
/// bottom, and independent of x_d for x_d <= 1/2 (hence on [0, h0]).
Cutoff make_cutoff(const Grid& grid, double eps0, double h0,
                   CutoffSide side = CutoffSide::neumann);

/// Degree-of-freedom bookkeeping: free unknowns vs Dirichlet-prescribed.
class DofMap {
 public:
  explicit DofMap(const Grid& grid);
  int num_free() const { return num_free_; }
  /// Free index of a global dof, -1 when prescribed.
  int free_index(int dof) const { return free_[dof]; }
  bool is_free(int dof) const { return free_[dof] >= 0; }
  Eigen::VectorXd restrict(const Eigen::VectorXd& full) const;

 private:
  std::vector<int> free_;
  int num_free_ = 0;
};

using SparseMatrix = Eigen::SparseMatrix<double>;

/// Element loops over a Grid with a fixed free-dof sparsity pattern.
class Assembler {
 public:
  explicit Assembler(const Grid& grid);

  const Grid& grid() const { return *grid_; }
  const DofMap& dofs() const { return dofs_; }

  /// int sigma : E(v_i) dx for every global dof i; `stress` is Mandel-flat.
  Eigen::VectorXd internal_force(std::span<const double> stress) const;

  /// int f . v_i dx + int_{Neumann} (sigma0 n) . v_i ds.
  Eigen::VectorXd external_force(
      const std::function<Point(const Point&)>& body_force,
      const std::function<SymTensor2(const Point&)>& boundary_stress) const;

  /// Free block of sum_qp w B^T C B; `tangent` holds one Mandel matrix per
  /// quadrature point (or a single one applied everywhere).
  const SparseMatrix& assemble_tangent(std::span<const MandelMatrix> tangent);

  const SparseMatrix& matrix() const { return matrix_; }

 private:
  const Grid* grid_;
  DofMap dofs_;
  SparseMatrix matrix_;
  // Per cell, for each (row, col) pair of cell dofs: index into valuePtr.
  std::vector<int> scatter_;
};

/// Residual int sigma:E(v) - int f.v - int_N (sigma0 n).v on every dof.
Eigen::VectorXd assemble_residual(
    const Assembler& assembler, std::span<const double> stress,
    const std::function<Point(const Point&)>& body_force,
    const std::function<SymTensor2(const Point&)>& boundary_stress);

/// Sparse SPD solve on the free block: LDL^T or diagonally preconditioned CG.
class LinearSolver {
 public:
  enum class Kind { direct, cg };

  explicit LinearSolver(Kind kind, double cg_tolerance = 1e-11);
  /// Direct for 2-D grids and for n <= 32, CG otherwise.
  static Kind choose(const Grid& grid);

  Kind kind() const { return kind_; }
  /// Throws SolverError when the matrix is singular / not SPD.
  Eigen::VectorXd solve(const SparseMatrix& matrix, const Eigen::VectorXd& rhs);

 private:
  Kind kind_;
  double cg_tolerance_;
  bool analyzed_ = false;
  Eigen::SimplicialLDLT<SparseMatrix> ldlt_;
};

}  // namespace hardening
