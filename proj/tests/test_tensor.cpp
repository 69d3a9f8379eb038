#include <doctest.h>

#include "hardening/tensor.hpp"
#include "support/oracles.hpp"

using namespace hardening;

TEST_CASE("mandel storage preserves the Frobenius product") {
  oracle::Rng rng(1);
  for (int dim : {2, 3}) {
    for (int trial = 0; trial < 50; ++trial) {
      Eigen::MatrixXd a = Eigen::MatrixXd::Random(dim, dim);
      Eigen::MatrixXd b = Eigen::MatrixXd::Random(dim, dim);
      a = 0.5 * (a + a.transpose()).eval();
      b = 0.5 * (b + b.transpose()).eval();
      const SymTensor2 sa = SymTensor2::from_matrix(a);
      const SymTensor2 sb = SymTensor2::from_matrix(b);
      CHECK(inner(sa, sb) == doctest::Approx((a.array() * b.array()).sum()).epsilon(1e-14));
      CHECK((sa.to_matrix() - a).norm() < 1e-14);
    }
  }
}

TEST_CASE("mandel ordering") {
  CHECK(mandel_index(2, 2) == std::pair<int, int>{0, 1});
  CHECK(mandel_index(3, 3) == std::pair<int, int>{1, 2});
  CHECK(mandel_index(3, 4) == std::pair<int, int>{0, 2});
  CHECK(mandel_index(3, 5) == std::pair<int, int>{0, 1});
}

TEST_CASE("deviator is trace free and idempotent") {
  oracle::Rng rng(2);
  for (int dim : {2, 3}) {
    const SymTensor2 t = rng.tensor(dim, 3.0);
    const SymTensor2 d = dev(t);
    CHECK(std::abs(d.trace()) < 1e-14);
    CHECK(norm(dev(d) - d) < 1e-14);
    const MandelMatrix p = deviatoric_projector(dim);
    CHECK((p * t.mandel() - d.mandel()).norm() < 1e-14);
  }
}

TEST_CASE("lame compliance inverts the Lame stiffness") {
  for (int dim : {2, 3}) {
    const double g = 1.3, l = 0.7;
    const Tensor4Sym a = Tensor4Sym::lame_compliance(dim, g, l);
    oracle::Rng rng(3);
    const SymTensor2 eps = rng.tensor(dim, 1.0);
    const SymTensor2 sigma = 2.0 * g * eps + l * eps.trace() * SymTensor2::identity(dim);
    CHECK(norm(a.apply(sigma) - eps) < 1e-13);
    CHECK(norm(a.apply_dense(sigma) - eps) < 1e-13);
    CHECK(norm(a.inverse().apply(eps) - sigma) < 1e-13);
  }
}

TEST_CASE("isotropic fast path agrees with the dense product") {
  oracle::Rng rng(4);
  for (int dim : {2, 3}) {
    const Tensor4Sym c = Tensor4Sym::isotropic(dim, 0.8, 2.1);
    REQUIRE(c.is_isotropic());
    for (int k = 0; k < 20; ++k) {
      const SymTensor2 t = rng.tensor(dim, 1.0);
      CHECK(norm(c.apply(t) - c.apply_dense(t)) < 1e-14);
    }
    const Tensor4Sym ci = c.inverse();
    CHECK(ci.is_isotropic());
    CHECK(ci.isotropic_moduli()->dev == doctest::Approx(1.0 / 0.8));
  }
}

TEST_CASE("ellipticity check") {
  CHECK(check_ellipticity(Tensor4Sym::identity(2), 1.0).pass);
  const auto r = check_ellipticity(Tensor4Sym::scaled_identity(3, 2.0), 0.6);
  CHECK_FALSE(r.pass);
  CHECK(r.lambda_max == doctest::Approx(2.0));
  CHECK(check_ellipticity(Tensor4Sym::scaled_identity(3, 2.0), 0.5).pass);
  CHECK_THROWS_AS(check_ellipticity(Tensor4Sym::identity(2), 0.0), std::invalid_argument);
  MandelMatrix m = MandelMatrix::Identity(3, 3);
  m(0, 1) = 0.5;
  CHECK_THROWS_AS(check_ellipticity(Tensor4Sym::from_mandel(2, m), 0.1),
                  std::invalid_argument);
}

TEST_CASE("penalty vanishes inside the ball") {
  oracle::Rng rng(5);
  for (int k = 0; k < 100; ++k) {
    SymTensor2 b = rng.tensor(3, 1.0);
    b = (0.99 * rng.uniform(0.0, 1.0) / norm(b)) * b;
    CHECK(norm(penalty(b, 1.0, 1e-3)) == 0.0);
  }
}

TEST_CASE("penalty is the gradient of the penalty potential") {
  oracle::Rng rng(6);
  const double kappa = 0.8, mu = 0.05;
  auto potential = [&](const SymTensor2& b) {
    const double o = std::max(0.0, norm(b) - kappa);
    return 0.5 * o * o / mu;
  };
  for (int dim : {2, 3}) {
    for (int trial = 0; trial < 100; ++trial) {
      const SymTensor2 b = rng.tensor(dim, 1.0);
      const SymTensor2 g = penalty(b, kappa, mu);
      for (int k = 0; k < b.size(); ++k) {
        const double h = 1e-6;
        SymTensor2 bp = b, bm = b;
        bp[k] += h;
        bm[k] -= h;
        const double fd = (potential(bp) - potential(bm)) / (2.0 * h);
        CHECK(std::abs(fd - g[k]) < 1e-6 * std::max(1.0, std::abs(g[k])));
      }
    }
  }
}
