#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <memory>

#include "pamlab/error.hpp"
#include "pamlab/pam.hpp"
#include "pamlab/walkers.hpp"

using namespace pamlab;

namespace {

std::shared_ptr<const Space> shared(Space s) { return std::make_shared<const Space>(std::move(s)); }

Errc code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return Errc::numerical_failure;
}

/// Pearson statistic of the walk law against p_t(x0, .) mu over vertices
/// with expected count >= 5; returns (chi2, dof).
std::pair<double, double> law_chi2(std::shared_ptr<const Space> space, BoundaryCondition bc, std::size_t x0,
                                   double t, std::size_t walks) {
  const auto spec = eigendecompose(assemble_laplacian(space, bc));
  const auto occ = walk_occupation(*space, bc, x0, t, walks, 77);
  const auto p = heat_kernel(spec, t).values;
  const auto r0 = static_cast<Eigen::Index>(*spec.row_of(x0));
  double chi2 = 0.0, dof = -1.0;
  for (std::size_t r = 0; r < spec.size(); ++r) {
    const double expected = p(r0, static_cast<Eigen::Index>(r)) * spec.mu(static_cast<Eigen::Index>(r)) * walks;
    if (expected < 5.0) continue;
    const double observed = occ.probability[spec.active[r]] * walks;
    chi2 += (observed - expected) * (observed - expected) / expected;
    dof += 1.0;
  }
  const Eigen::VectorXd surv = apply_semigroup(spec, t, Eigen::VectorXd::Ones(static_cast<Eigen::Index>(spec.size())));
  if (bc == BoundaryCondition::dirichlet) {
    CHECK(std::abs(occ.survival - surv(r0)) <= 3.0 * occ.survival_stderr);
  } else {
    CHECK(occ.survival == 1.0);
  }
  return {chi2, dof};
}

}  // namespace

TEST_CASE("jump rates are the generator diagonal") {
  const auto g = build_gasket(2);
  const auto gen = WalkGenerator::for_boundary(g, BoundaryCondition::dirichlet);
  for (std::size_t v = 0; v < g.size(); ++v) {
    if (!g.is_boundary(v)) CHECK(gen.rate(v) == doctest::Approx(6.0 * 25.0));
    CHECK(gen.alive(v) == !g.is_boundary(v));
  }
  const auto path = simulate_walk(g, BoundaryCondition::dirichlet, 4, 1e-12, 1, {StreamDomain::walk, 0, 0});
  CHECK(path.positions == std::vector<std::size_t>{4});
  CHECK(!path.killed_at);
}

TEST_CASE("paths move along edges and freeze when killed") {
  const auto s = build_interval(10);
  for (std::uint32_t i = 0; i < 50; ++i) {
    const auto path = simulate_walk(s, BoundaryCondition::dirichlet, 5, 2.0, 3, {StreamDomain::walk, i, 0});
    for (std::size_t k = 1; k < path.positions.size(); ++k) {
      CHECK(path.jump_times[k] > path.jump_times[k - 1]);
      const auto a = path.positions[k - 1], b = path.positions[k];
      CHECK((a > b ? a - b : b - a) == 1);
    }
    if (path.killed_at) {
      CHECK(s.is_boundary(path.positions.back()));
      CHECK(*path.killed_at == path.jump_times.back());
      CHECK(path.position_at(10.0) == path.positions.back());
    }
  }
  CHECK(code_of([&] { simulate_walk(s, BoundaryCondition::dirichlet, 0, 1.0, 3, {}); }) == Errc::invalid_region);
}

TEST_CASE("walk law matches the heat kernel on all three families") {
  MetricGraphSpec star{4, {{0, 1, 1.0}, {0, 2, 1.0}, {0, 3, 1.0}}, {1, 2, 3}, {}};
  const std::vector<std::tuple<std::shared_ptr<const Space>, std::size_t, double>> cases{
      {shared(build_interval(50)), 20, 0.01}, {shared(build_gasket(3)), 10, 0.01},
      {shared(build_metric_graph(star, 0.2)), 0, 0.05}};
  for (const auto& [space, x0, t] : cases) {
    for (auto bc : {BoundaryCondition::dirichlet, BoundaryCondition::neumann}) {
      const auto [chi2, dof] = law_chi2(space, bc, x0, t, 100000);
      CHECK(dof > 3.0);
      CHECK(chi2 <= dof + 5.0 * std::sqrt(2.0 * dof));
    }
  }
}

TEST_CASE("Feynman-Kac sanity checks") {
  auto space = shared(build_gasket(2));
  for (auto bc : {BoundaryCondition::dirichlet, BoundaryCondition::neumann}) {
    const auto spec = eigendecompose(assemble_laplacian(space, bc));
    const Eigen::VectorXd u0 = Eigen::VectorXd::LinSpaced(static_cast<Eigen::Index>(spec.size()), 0.5, 1.5);
    const std::size_t x = spec.active[3];
    const double t = 0.02;

    const auto flat = fk_moment(spec, make_noise_model(spec, 0.3, 0.0, 9), u0, 2, t, x, 20000);
    const double j = apply_semigroup(spec, t, u0)(3);
    CHECK(std::abs(flat.value - j * j) <= 3.0 * flat.stderr);

    const double g = 0.7, c = 2.0;
    const Eigen::VectorXd cu0 = Eigen::VectorXd::Constant(u0.size(), c);
    const Eigen::MatrixXd kernel = Eigen::MatrixXd::Constant(u0.size(), u0.size(), g);
    const auto model = make_noise_model(spec, 0.3, 1.2, 9);
    const auto constant = fk_moment(spec, model, cu0, 2, t, x, 20000, kernel);
    const double surv = apply_semigroup(spec, t, Eigen::VectorXd::Ones(u0.size()))(3);
    const double closed = c * c * std::exp(1.2 * 1.2 * g * t) * surv * surv;
    if (bc == BoundaryCondition::neumann) {
      CHECK(constant.value == doctest::Approx(closed).epsilon(1e-12));
    } else {
      CHECK(std::abs(constant.value - closed) <= 3.0 * constant.stderr);
    }

    CHECK(code_of([&] { fk_moment(spec, make_noise_model(spec, 0.0, 1.0, 9), u0, 2, t, x, 100); }) ==
          Errc::unsupported_regime);
  }
}

TEST_CASE("Feynman-Kac agrees with the Volterra oracle and is monotone in beta") {
  auto space = shared(build_gasket(2));
  const auto spec = eigendecompose(assemble_laplacian(space, BoundaryCondition::dirichlet));
  const Eigen::VectorXd u0 = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(spec.size()));
  const double t = 0.05;
  const auto model = make_noise_model(spec, 0.3, 2.0, 31);
  const auto field = second_moment_volterra(spec, model, u0, t, 5e-5, 1000);
  for (std::size_t r : {0, 4, 8}) {
    const auto est = fk_moment(spec, model, u0, 2, t, spec.active[r], 10000);
    CHECK(std::abs(est.value - field.values.back()(r, r)) <= 3.0 * est.stderr);
  }
  double previous = 0.0;
  for (double beta : {0.0, 0.5, 1.0, 2.0, 4.0}) {
    const auto est = fk_moment(spec, make_noise_model(spec, 0.3, beta, 31), u0, 3, t, spec.active[4], 2000);
    CHECK(est.value >= previous);
    previous = est.value;
  }
}

TEST_CASE("exit times") {
  auto space = shared(build_interval(20));
  std::vector<std::size_t> all(21);
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  const auto tail = exit_time_tail(space, all, 10, {0.02, 0.05, 0.1}, 20000, 5);
  const auto spec = eigendecompose(assemble_laplacian(space, BoundaryCondition::dirichlet));
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(spec.size()));
  for (std::size_t k = 0; k < tail.times.size(); ++k) {
    const double exact = apply_semigroup(spec, tail.times[k], ones)(9);
    CHECK(std::abs(tail.survival[k] - exact) <= 3.0 * tail.stderr[k]);
  }
  CHECK(tail.lambda1 == doctest::Approx(spec.lambda1()));

  CHECK(code_of([&] { exit_time_tail(space, {}, 10, {0.1}, 100, 1); }) == Errc::invalid_region);
  CHECK(code_of([&] { exit_time_tail(space, {3, 4, 5}, 10, {0.1}, 100, 1); }) == Errc::invalid_region);

  const auto g = build_gasket(4);
  const auto ball = ball_region(g, 8, 0.2);
  for (std::size_t v : ball) {
    CHECK(g.distance(8, v) < 0.2);
    CHECK(!g.is_boundary(v));
  }
}
