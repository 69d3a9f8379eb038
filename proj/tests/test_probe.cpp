#include <doctest.h>

#include "hardening/probe.hpp"
#include "support/scenarios.hpp"

using namespace hardening;

namespace {

FieldSeries scalar_series(const Grid& g, int frames, double tau,
                          const std::function<double(double, const Point&)>& f) {
  FieldSeries s(g, 1, tau);
  for (int i = 0; i < frames; ++i) {
    std::vector<double> v(g.num_qp());
    for (int qp = 0; qp < g.num_qp(); ++qp) v[qp] = f(i * tau, g.qp_coord(qp));
    s.add(i * tau, std::move(v));
  }
  return s;
}

SeminormTable synthetic_table(double s, double c, const std::vector<double>& h) {
  SeminormTable t;
  for (std::size_t i = 0; i < h.size(); ++i) {
    t.rows.push_back({static_cast<int>(i + 1), h[i], c * std::pow(h[i], 2.0 * s)});
  }
  return t;
}

const AxisSpec kNormal{AxisKind::normal, 0};
const AxisSpec kTangential{AxisKind::tangential, 0};
const AxisSpec kTime{AxisKind::time, 0};

}  // namespace

TEST_CASE("half-octave ladder") {
  CHECK(half_octave_ladder(16) == std::vector<int>{1, 2, 3, 4, 6, 8, 11, 16});
  CHECK(half_octave_ladder(1) == std::vector<int>{1});
  CHECK(half_octave_ladder(0).empty());
}

TEST_CASE("axis names round trip") {
  for (const char* name : {"time", "normal", "tangential-0", "tangential-1"}) {
    CHECK(AxisSpec::parse(name).name() == name);
  }
  CHECK_THROWS_AS(AxisSpec::parse("sideways"), std::invalid_argument);
}

TEST_CASE("tangential seminorm of a field depending only on x_d vanishes") {
  for (int dim : {2, 3}) {
    const Grid g = build_grid({dim, BoundaryMode::mixed}, 4);
    const FieldSeries s = scalar_series(g, 3, 0.1, [dim](double t, const Point& x) {
      return std::sin(3.0 * x[dim - 1]) + t;
    });
    for (int j = 0; j < dim - 1; ++j) {
      const SeminormTable t = seminorm_table(s, {AxisKind::tangential, j}, {}, Aggregation::sup);
      for (const auto& row : t.rows) CHECK(row.value == 0.0);
    }
  }
}

TEST_CASE("normal seminorm of a step is linear in h") {
  for (int dim : {2, 3}) {
    const Grid g = build_grid({dim, BoundaryMode::mixed}, 8);
    const FieldSeries s = scalar_series(g, 1, 1.0, [dim](double, const Point& x) {
      return x[dim - 1] > 0.5 ? 1.0 : 0.0;
    });
    const SeminormTable t = seminorm_table(s, kNormal, {}, Aggregation::sup);
    for (const auto& row : t.rows) {
      CHECK(row.value == doctest::Approx(std::pow(2.0, dim - 1) * row.h).epsilon(1e-12));
    }
  }
}

TEST_CASE("time seminorm of f = t in integral mode") {
  const Grid g = build_grid({2, BoundaryMode::mixed}, 2);
  const double tau = 0.01;
  const int frames = 101;
  const FieldSeries s = scalar_series(g, frames, tau, [](double t, const Point&) { return t; });
  const double T = (frames - 1) * tau;
  const SeminormTable t = seminorm_table(s, kTime, {}, Aggregation::integral);
  for (const auto& row : t.rows) {
    CHECK(row.value == doctest::Approx(row.h * row.h * (T - row.h) * 2.0).epsilon(1e-10));
  }
  const SeminormTable sup = seminorm_table(s, kTime, {}, Aggregation::sup);
  for (const auto& row : sup.rows) CHECK(row.value == doctest::Approx(2.0 * row.h * row.h));
}

TEST_CASE("difference quotients telescope") {
  oracle::Rng rng(31);
  for (int dim : {2, 3}) {
    const Grid g = build_grid({dim, BoundaryMode::mixed}, 8);
    FieldSeries s(g, 2, 1.0);
    std::vector<double> v(2 * g.num_qp());
    for (double& x : v) x = rng.normal();
    s.add(0.0, v);
    for (int axis = 0; axis < dim; ++axis) {
      const AxisSpec spec = axis == dim - 1 ? kNormal : AxisSpec{AxisKind::tangential, axis};
      for (int k : {1, 2}) {
        const ShiftedDifference d1 = diff_quotient(s, 0, spec, k);
        const ShiftedDifference d2 = diff_quotient(s, 0, spec, 2 * k);
        std::map<int, std::size_t> at;
        for (std::size_t i = 0; i < d1.points.size(); ++i) at[d1.points[i]] = i;
        for (std::size_t i = 0; i < d2.points.size(); ++i) {
          const int p = d2.points[i];
          const int q = shifted_point(g, p, axis, k);
          REQUIRE(at.count(p));
          REQUIRE(at.count(q));
          for (int c = 0; c < 2; ++c) {
            const double lhs = d2.values[i * 2 + c];
            const double rhs = d1.values[at[p] * 2 + c] + d1.values[at[q] * 2 + c];
            CHECK(lhs == doctest::Approx(rhs).epsilon(1e-14));
          }
        }
      }
    }
  }
}

TEST_CASE("time integral mode is bounded by T times the sup mode") {
  oracle::Rng rng(32);
  const Grid g = build_grid({2, BoundaryMode::mixed}, 4);
  FieldSeries s(g, 1, 0.05);
  for (int i = 0; i < 21; ++i) {
    std::vector<double> v(g.num_qp());
    for (double& x : v) x = rng.normal();
    s.add(i * 0.05, std::move(v));
  }
  const Cutoff phi = make_cutoff(g, 0.1, 0.25);
  for (AxisSpec axis : {kNormal, kTangential, kTime}) {
    const SeminormTable sup = seminorm_table(s, axis, phi.qp_values(), Aggregation::sup);
    const SeminormTable integral =
        seminorm_table(s, axis, phi.qp_values(), Aggregation::integral);
    REQUIRE(sup.rows.size() == integral.rows.size());
    for (std::size_t i = 0; i < sup.rows.size(); ++i) {
      CHECK(integral.rows[i].value <= s.final_time() * sup.rows[i].value * (1.0 + 1e-14));
    }
  }
}

TEST_CASE("weight is applied at the unshifted point") {
  const Grid g = build_grid({2, BoundaryMode::mixed}, 4);
  const FieldSeries s = scalar_series(g, 1, 1.0, [](double, const Point& x) { return x[0]; });
  std::vector<double> w(g.num_qp());
  for (int qp = 0; qp < g.num_qp(); ++qp) w[qp] = 1.0 + g.qp_coord(qp)[0];
  const ShiftedDifference d = diff_quotient(s, 0, kTangential, 1, w);
  for (std::size_t i = 0; i < d.points.size(); ++i) {
    CHECK(d.values[i] == doctest::Approx(w[d.points[i]] * g.mesh_size()));
  }
}

TEST_CASE("shifts outside the domain are rejected") {
  const Grid g = build_grid({2, BoundaryMode::mixed}, 4);
  const FieldSeries s = scalar_series(g, 2, 1.0, [](double, const Point&) { return 1.0; });
  CHECK_THROWS_AS(diff_quotient(s, 0, kNormal, 4), std::invalid_argument);
  CHECK_THROWS_AS(diff_quotient(s, 5, kNormal, 1), std::out_of_range);
  CHECK_THROWS_AS(seminorm_table(s, kTime, {}, Aggregation::sup, "", {2}),
                  std::invalid_argument);
}

TEST_CASE("fit recovers synthetic power laws") {
  std::vector<double> h;
  for (int k : half_octave_ladder(16)) h.push_back(k / 32.0);
  for (double s : {0.2, 0.5, 0.6, 1.0}) {
    const FitResult f = fit_exponent(synthetic_table(s, 3.7, h), 2.0 / 32.0, 0.25);
    CHECK(f.s_hat == doctest::Approx(s).epsilon(1e-12));
    CHECK(f.r2 == doctest::Approx(1.0));
    CHECK(f.rows_used == 5);
    oracle::Rng rng(static_cast<std::uint64_t>(s * 100));
    SeminormTable noisy = synthetic_table(s, 0.2, h);
    for (auto& row : noisy.rows) row.value *= 1.0 + 0.01 * rng.uniform(-1.0, 1.0);
    CHECK(std::abs(fit_exponent(noisy, 2.0 / 32.0, 0.25).s_hat - s) < 0.02);
  }
}

TEST_CASE("fit edge cases") {
  std::vector<double> h{0.1, 0.2, 0.3, 0.4, 0.5};
  SeminormTable zero = synthetic_table(0.5, 0.0, h);
  CHECK(fit_exponent(zero).status == FitResult::Status::identically_regular);
  CHECK_THROWS_AS(fit_exponent(synthetic_table(0.5, 1.0, {0.1, 0.2, 0.3})), FitError);
  CHECK_THROWS_AS(fit_exponent(synthetic_table(0.5, 1.0, h), 1.0, 2.0), FitError);
  SeminormTable roundoff = synthetic_table(0.5, 1e-30, h);
  roundoff.reference = 1.0;
  CHECK(fit_exponent(roundoff).status == FitResult::Status::identically_regular);
  CHECK(lipschitz_spread(synthetic_table(1.0, 2.0, h), 0.0, 1.0) == doctest::Approx(1.0));
}

TEST_CASE("exponent targets") {
  CHECK(alpha_exponent(2) == doctest::Approx((-3.0 + std::sqrt(57.0)) / 8.0));
  CHECK(alpha_exponent(2) == doctest::Approx(0.5687).epsilon(1e-3));
  for (int d : {2, 3}) {
    const ExponentTargets k = target_exponents(d, HardeningModel::kinematic, CutoffSide::neumann);
    CHECK(k.stress_normal == doctest::Approx(0.6));
    CHECK(k.rate_time == doctest::Approx(0.5));
    CHECK(k.rate_tangential == doctest::Approx(0.5));
    CHECK(k.rate_normal == doctest::Approx(0.2));
    const ExponentTargets i = target_exponents(d, HardeningModel::isotropic, CutoffSide::neumann);
    CHECK(i.stress_normal == doctest::Approx(alpha_exponent(d)));
    CHECK(i.rate_normal == doctest::Approx(alpha_exponent(d) / 3.0));
    const ExponentTargets dir = target_exponents(d, HardeningModel::isotropic, CutoffSide::dirichlet);
    CHECK(dir.stress_normal == doctest::Approx(0.6));
    CHECK(dir.rate_normal == doctest::Approx(0.2));
  }
  CHECK(beta_exponent(3.0, 2).degenerate);
  const BetaExponent b = beta_exponent(3.0, 3);
  CHECK_FALSE(b.degenerate);
  CHECK(b.value == doctest::Approx(0.5));
  CHECK(lambda_exponent(0.5, 3) == doctest::Approx(1.0 / 3.0));
  CHECK_THROWS(beta_exponent(5.0, 3));
}

TEST_CASE("strip norm of a linear velocity") {
  const Grid g0 = build_grid({2, BoundaryMode::mixed}, 8);
  auto grid = std::make_shared<const Grid>(g0);
  const Cutoff phi = make_cutoff(*grid, 0.1, 0.25);
  const double c = 1.5;
  FieldHistory h(grid, HardeningModel::kinematic, 0.1, 1);
  for (int i = 0; i < 3; ++i) {
    Frame f;
    f.step = i;
    f.time = 0.1 * i;
    f.velocity.assign(grid->num_dofs(), 0.0);
    for (int a = 0; a < grid->num_nodes(); ++a) {
      f.velocity[2 * a] = c * grid->node_coord(a)[1];
    }
    if (i > 0) f.stress_rate.assign(grid->num_qp() * 3, 0.0);
    h.add_frame(f);
  }
  const StripReport r = strip_gradient_norm(h, 1, phi);
  double weighted_area = 0.0;
  for (int qp = 0; qp < grid->num_qp(); ++qp) {
    if (grid->qp_coord(qp)[1] < r.h) {
      weighted_area += grid->qp_weight() * phi.qp_values()[qp] * phi.qp_values()[qp];
    }
  }
  REQUIRE(r.normal_gradient.size() == 2);
  CHECK(r.normal_gradient[0] == doctest::Approx(c * c * weighted_area));
  CHECK(r.sym_gradient[0] == doctest::Approx(0.5 * c * c * weighted_area));
  CHECK(r.normal_gradient_integral == doctest::Approx(0.2 * c * c * weighted_area));
  CHECK_THROWS_AS(strip_gradient_norm(h, 1, make_cutoff(*grid, 0.1, 0.1)), std::invalid_argument);

  for (auto& f : const_cast<std::vector<Frame>&>(h.frames())) {
    for (int a = 0; a < grid->num_nodes(); ++a) {
      const Point x = grid->node_coord(a);
      f.velocity[2 * a] = 0.3 - 0.7 * x[1];
      f.velocity[2 * a + 1] = 0.2 + 0.7 * x[0];
    }
  }
  const StripReport rigid = strip_gradient_norm(h, 1, phi);
  CHECK(rigid.sym_gradient[0] < 1e-28);
}

TEST_CASE("interpolation check rejects out-of-range delta") {
  const ScenarioConfig c = oracle::load_benchmark("elastic-only");
  Scenario s = build_scenario(c, 0.1);
  s.n = 4;
  s.steps = 10;
  const FieldHistory h = run(s);
  const Cutoff phi = make_cutoff(h.grid(), 0.1, 0.25);
  CHECK_THROWS_AS(interpolation_check(h, phi.qp_values(), 0.4), std::invalid_argument);
  const InterpolationReport r = interpolation_check(h, phi.qp_values(), 0.05);
  CHECK(r.degenerate);
}

TEST_CASE("mu sweep of an elastic scenario has unit spreads") {
  const ScenarioConfig c = oracle::load_benchmark("elastic-only");
  Scenario s = build_scenario(c, 0.1);
  s.n = 4;
  s.steps = 20;
  const UniformityReport r = mu_sweep(s, {1.0, 0.1, 0.01}, probe_config(c));
  REQUIRE(r.runs.size() == 3);
  for (const auto& run : r.runs) CHECK(run.ok);
  for (const auto& [name, value] : r.spreads) {
    CAPTURE(name);
    CHECK(value == 1.0);
  }
  CHECK_FALSE(r.overshoot_l2_slope.has_value());
  CHECK_THROWS_AS(mu_sweep(s, {0.1, 1.0}, probe_config(c)), std::invalid_argument);
  CHECK(spread_ratio(std::vector<double>{2.0, 1.0, 4.0}) == 4.0);
  CHECK(spread_ratio(std::vector<double>{0.0, 0.0}) == 1.0);
}
