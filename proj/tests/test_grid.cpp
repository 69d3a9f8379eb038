#include <doctest.h>

#include "hardening/grid.hpp"
#include "hardening/probe.hpp"
#include "support/oracles.hpp"

using namespace hardening;

namespace {

Eigen::VectorXd nodal(const Grid& grid, const std::function<Point(const Point&)>& u) {
  Eigen::VectorXd out(grid.num_dofs());
  for (int a = 0; a < grid.num_nodes(); ++a) {
    const Point v = u(grid.node_coord(a));
    for (int c = 0; c < grid.dim(); ++c) out[a * grid.dim() + c] = v[c];
  }
  return out;
}

}  // namespace

TEST_CASE("grid sizes and quadrature weights") {
  for (int dim : {2, 3}) {
    const Grid g = build_grid({dim, BoundaryMode::mixed}, 4);
    const int tangential = dim == 2 ? 8 : 64;
    CHECK(g.num_cells() == tangential * 4);
    CHECK(g.cells_along(0) == 8);
    CHECK(g.cells_along(dim - 1) == 4);
    CHECK(g.num_qp() == g.num_cells() * (1 << dim));
    CHECK(g.qp_weight() * g.num_qp() == doctest::Approx(std::pow(2.0, dim - 1)));
  }
}

TEST_CASE("dirichlet faces follow the boundary mode") {
  const Grid mixed = build_grid({2, BoundaryMode::mixed}, 4);
  const Grid neumann = build_grid({2, BoundaryMode::all_neumann_bottom}, 4);
  const Grid dirichlet = build_grid({2, BoundaryMode::all_dirichlet}, 4);
  for (int a = 0; a < mixed.num_nodes(); ++a) {
    const Point x = mixed.node_coord(a);
    const bool side = std::abs(std::abs(x[0]) - 1.0) < 1e-12 || std::abs(x[1] - 1.0) < 1e-12;
    const bool bottom = std::abs(x[1]) < 1e-12;
    CHECK(dirichlet.node_is_dirichlet(a) == (side || bottom));
    CHECK(neumann.node_is_dirichlet(a) == side);
    CHECK(mixed.node_is_dirichlet(a) == (side || (bottom && x[0] <= 1e-12)));
  }
  CHECK(mixed.neumann_cells().size() == 4);
  CHECK(neumann.neumann_cells().size() == 8);
  CHECK(dirichlet.neumann_cells().empty());
}

TEST_CASE("patch test: linear displacement has exact constant strain") {
  oracle::Rng rng(21);
  for (int dim : {2, 3}) {
    const Grid g = build_grid({dim, BoundaryMode::mixed}, 2);
    Eigen::MatrixXd l = Eigen::MatrixXd::Random(dim, dim);
    const Eigen::VectorXd u = nodal(g, [&](const Point& x) -> Point { return l * x.head(dim); });
    const SymTensor2 expected = SymTensor2::from_matrix(l);
    for (const SymTensor2& e : sym_gradient(std::span<const double>(u.data(), u.size()), g)) CHECK(norm(e - expected) < 1e-13);
    const std::vector<double> grad = displacement_gradient(std::span<const double>(u.data(), u.size()), g);
    for (int qp = 0; qp < g.num_qp(); ++qp)
      for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j)
          CHECK(grad[qp * dim * dim + i * dim + j] == doctest::Approx(l(i, j)).epsilon(1e-12));
  }
}

TEST_CASE("affine equilibrated stress has zero weak residual") {
  for (int dim : {2, 3}) {
    for (auto mode : {BoundaryMode::mixed, BoundaryMode::all_neumann_bottom}) {
      const Grid g = build_grid({dim, mode}, 2);
      Assembler assembler(g);
      const int m = mandel_size(dim);
      Eigen::MatrixXd s0 = Eigen::MatrixXd::Random(dim, dim);
      s0 = (s0 + s0.transpose()).eval();
      Eigen::MatrixXd grad = Eigen::MatrixXd::Zero(dim, dim);
      grad(0, dim - 1) = grad(dim - 1, 0) = 0.7;
      auto stress = [&](const Point& x) {
        return SymTensor2::from_matrix(s0 + x[dim - 1] * grad);
      };
      // div sigma = d/dx_d of column d-1 of grad: (0.7, 0, ...) in component 0.
      auto force = [&](const Point&) {
        Point f = Point::Zero(dim);
        f[0] = -0.7;
        return f;
      };
      std::vector<double> flat(static_cast<std::size_t>(g.num_qp()) * m);
      for (int qp = 0; qp < g.num_qp(); ++qp) {
        const SymTensor2 s = stress(g.qp_coord(qp));
        for (int k = 0; k < m; ++k) flat[qp * m + k] = s[k];
      }
      const Eigen::VectorXd r =
          assembler.dofs().restrict(assemble_residual(assembler, flat, force, stress));
      CHECK(r.norm() < 1e-13);
    }
  }
}

TEST_CASE("assembled stiffness is symmetric positive definite") {
  const Grid g = build_grid({2, BoundaryMode::mixed}, 3);
  Assembler assembler(g);
  const MandelMatrix c = Tensor4Sym::lame_compliance(2, 1.0, 1.0).inverse().matrix();
  const SparseMatrix& k = assembler.assemble_tangent(std::span<const MandelMatrix>(&c, 1));
  const Eigen::MatrixXd dense(k);
  CHECK((dense - dense.transpose()).norm() < 1e-12 * dense.norm());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(dense);
  CHECK(eig.eigenvalues().minCoeff() > 0.0);
}

TEST_CASE("direct and cg solvers agree") {
  const Grid g = build_grid({3, BoundaryMode::mixed}, 2);
  Assembler assembler(g);
  const MandelMatrix c = Tensor4Sym::identity(3).matrix();
  const SparseMatrix k = assembler.assemble_tangent(std::span<const MandelMatrix>(&c, 1));
  const Eigen::VectorXd rhs = Eigen::VectorXd::Ones(k.rows());
  LinearSolver direct(LinearSolver::Kind::direct), cg(LinearSolver::Kind::cg, 1e-13);
  const Eigen::VectorXd a = direct.solve(k, rhs);
  const Eigen::VectorXd b = cg.solve(k, rhs);
  CHECK((a - b).norm() < 1e-9 * a.norm());
  CHECK(LinearSolver::choose(build_grid({2, BoundaryMode::mixed}, 64)) == LinearSolver::Kind::direct);
  CHECK(LinearSolver::choose(build_grid({3, BoundaryMode::mixed}, 2)) == LinearSolver::Kind::direct);
}

TEST_CASE("integer cell shifts map gauss points to gauss points") {
  for (int dim : {2, 3}) {
    const Grid g = build_grid({dim, BoundaryMode::mixed}, 4);
    for (int axis = 0; axis < dim; ++axis) {
      for (int k : {1, 2, 3}) {
        int hits = 0;
        for (int qp = 0; qp < g.num_qp(); ++qp) {
          const int to = shifted_point(g, qp, axis, k);
          if (to < 0) continue;
          ++hits;
          Point expected = g.qp_coord(qp);
          expected[axis] += k * g.mesh_size();
          CHECK((g.qp_coord(to) - expected).norm() < 1e-13);
        }
        CHECK(hits == g.num_qp() / g.cells_along(axis) * (g.cells_along(axis) - k));
      }
    }
  }
}

TEST_CASE("cutoff is a localization weight") {
  for (int dim : {2, 3}) {
    for (auto side : {CutoffSide::neumann, CutoffSide::dirichlet}) {
      const Grid g = build_grid({dim, BoundaryMode::mixed}, 8);
      const Cutoff phi = make_cutoff(g, 0.1, 0.25, side);
      REQUIRE(static_cast<int>(phi.qp_values().size()) == g.num_qp());
      double max = 0.0;
      for (int qp = 0; qp < g.num_qp(); ++qp) {
        const double v = phi.qp_values()[qp];
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
        max = std::max(max, v);
        const Point x = g.qp_coord(qp);
        if (x[dim - 1] > 0.9 || std::abs(x[0]) > 0.95) CHECK(v == 0.0);
        if (x[dim - 1] <= 0.5) {
          Point y = x;
          y[dim - 1] = 0.01;
          CHECK(phi(y) == doctest::Approx(v).epsilon(1e-14));
        }
      }
      CHECK(max == doctest::Approx(1.0));
    }
  }
}

TEST_CASE("neumann and dirichlet cutoffs live on their own side") {
  const Grid g = build_grid({2, BoundaryMode::mixed}, 8);
  const Cutoff n = make_cutoff(g, 0.1, 0.25, CutoffSide::neumann);
  const Cutoff d = make_cutoff(g, 0.1, 0.25, CutoffSide::dirichlet);
  Point x(2);
  x << 0.5, 0.05;
  CHECK(n(x) > 0.0);
  CHECK(d(x) == 0.0);
  x << -0.5, 0.05;
  CHECK(n(x) == 0.0);
  CHECK(d(x) > 0.0);
}
