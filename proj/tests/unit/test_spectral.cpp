#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <memory>
#include <numbers>

#include "pamlab/error.hpp"
#include "pamlab/spectral.hpp"

using namespace pamlab;

namespace {

SpectralData decompose(Space space, BoundaryCondition bc) {
  return eigendecompose(assemble_laplacian(std::make_shared<const Space>(std::move(space)), bc));
}

/// (1/Gamma(a)) int_0^inf t^(a-1) (p_t - constant mode) dt by Simpson's rule
/// in s = ln t on [ln 1e-8, ln 5]; the head below 1e-8 uses p_t ~ diag(1/mu).
Eigen::MatrixXd riesz_by_quadrature(const SpectralData& spec, double alpha) {
  const double s0 = std::log(1e-8), s1 = std::log(5.0);
  const int n = 4000;
  const double h = (s1 - s0) / n;
  const double mass = spec.total_mass();
  const auto size = static_cast<Eigen::Index>(spec.size());
  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(size, size);
  for (int k = 0; k <= n; ++k) {
    const double t = std::exp(s0 + k * h);
    Eigen::MatrixXd p = heat_kernel(spec, t).values;
    if (spec.bc == BoundaryCondition::neumann) p.array() -= 1.0 / mass;
    const double w = (k == 0 || k == n) ? 1.0 : (k % 2 ? 4.0 : 2.0);
    sum += (w * std::pow(t, alpha)) * p;
  }
  sum *= h / 3.0;
  Eigen::MatrixXd head = spec.mu.cwiseInverse().asDiagonal();
  if (spec.bc == BoundaryCondition::neumann) head.array() -= 1.0 / mass;
  sum += std::pow(1e-8, alpha) / alpha * head;
  return sum / std::tgamma(alpha);
}

}  // namespace

TEST_CASE("interval Dirichlet eigenvalues match the closed form") {
  const int n = 50;
  const double h = 1.0 / n;
  const auto spec = decompose(build_interval(n), BoundaryCondition::dirichlet);
  REQUIRE(spec.modes() == static_cast<std::size_t>(n - 1));
  for (int j = 1; j < n; ++j) {
    const double s = std::sin(j * std::numbers::pi * h / 2.0);
    CHECK(spec.lambdas(j - 1) == doctest::Approx(4.0 / (h * h) * s * s).epsilon(1e-10));
  }
  CHECK(spec.max_residual <= 1e-8);
  const auto tiny = decompose(build_interval(2), BoundaryCondition::dirichlet);
  REQUIRE(tiny.modes() == 1);
  CHECK(tiny.lambdas(0) == doctest::Approx(8.0));
}

TEST_CASE("gasket level 1 generator row") {
  auto space = std::make_shared<const Space>(build_gasket(1));
  const auto lap = assemble_laplacian(space, BoundaryCondition::neumann);
  for (Eigen::Index i = 0; i < lap.mass.size(); ++i) {
    if (space->is_boundary(lap.active[i])) continue;
    const Eigen::RowVectorXd row = lap.stiffness.row(i) / lap.mass(i);
    CHECK(row(i) == doctest::Approx(30.0));
    int neighbours = 0;
    for (Eigen::Index j = 0; j < row.size(); ++j) {
      if (j != i && row(j) != 0.0) {
        CHECK(row(j) == doctest::Approx(-7.5));
        ++neighbours;
      }
    }
    CHECK(neighbours == 4);
  }
  CHECK((lap.stiffness * Eigen::VectorXd::Ones(lap.mass.size())).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("eigenvectors are mu-orthonormal with the Neumann constant mode") {
  for (auto bc : {BoundaryCondition::dirichlet, BoundaryCondition::neumann}) {
    for (auto* make : {+[] { return build_gasket(3); }, +[] { return build_interval(30); }}) {
      const auto spec = decompose(make(), bc);
      const Eigen::MatrixXd gram = spec.phis.transpose() * spec.mu.asDiagonal() * spec.phis;
      CHECK((gram - Eigen::MatrixXd::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff() < 1e-10);
      CHECK(spec.max_residual <= 1e-8);
      CHECK(spec.lambda1() > 0.0);
      if (bc == BoundaryCondition::neumann) {
        CHECK(spec.lambdas(0) == 0.0);
        CHECK(spec.phis.col(0).minCoeff() == doctest::Approx(1.0 / std::sqrt(spec.total_mass())));
        CHECK(spec.phis.col(0).maxCoeff() == doctest::Approx(1.0 / std::sqrt(spec.total_mass())));
      }
    }
  }
  CHECK_THROWS_AS(assemble_laplacian(std::make_shared<const Space>(build_metric_graph(
                                         {3, {{0, 1, 1.0}, {1, 2, 1.0}, {2, 0, 1.0}}, {}, {}}, 0.25)),
                                     BoundaryCondition::dirichlet),
                  Error);
}

TEST_CASE("heat kernel identities on all three families") {
  MetricGraphSpec star{4, {{0, 1, 1.0}, {0, 2, 1.0}, {0, 3, 1.0}}, {1, 2, 3}, {}};
  for (auto bc : {BoundaryCondition::dirichlet, BoundaryCondition::neumann}) {
    for (auto space : {build_interval(40), build_gasket(3), build_metric_graph(star, 0.1)}) {
      const auto spec = decompose(space, bc);
      const auto h = heat_check(spec, 0.01, 0.02);
      CHECK(h.symmetry_residual <= 1e-8);
      CHECK(h.semigroup_residual <= 1e-8);
      CHECK(h.l2_identity_residual <= 1e-12);
      CHECK(h.min_entry >= -1e-12);
      if (bc == BoundaryCondition::neumann) {
        CHECK(h.conservation_error <= 1e-10);
      } else {
        CHECK(h.decay_slope == doctest::Approx(-spec.lambda1()).epsilon(0.01));
      }
    }
  }
  CHECK_THROWS_AS(heat_kernel(decompose(build_interval(4), BoundaryCondition::dirichlet), 0.0), Error);
}

TEST_CASE("Dirichlet kernel is dominated by the Neumann kernel") {
  const auto d = decompose(build_gasket(3), BoundaryCondition::dirichlet);
  const auto n = decompose(build_gasket(3), BoundaryCondition::neumann);
  for (double t : {0.001, 0.01, 0.1}) {
    const auto pd = heat_kernel(d, t).values;
    const auto pn = heat_kernel(n, t).values;
    for (Eigen::Index i = 0; i < pd.rows(); ++i) {
      for (Eigen::Index j = 0; j < pd.cols(); ++j)
        CHECK(pd(i, j) <= pn(*n.row_of(d.active[i]), *n.row_of(d.active[j])) + 1e-10);
    }
  }
}

TEST_CASE("semigroup action") {
  const auto spec = decompose(build_interval(20), BoundaryCondition::neumann);
  const Eigen::VectorXd f = Eigen::VectorXd::LinSpaced(21, -1.0, 2.0);
  CHECK(apply_semigroup(spec, 0.0, f) == f);
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(21);
  CHECK((apply_semigroup(spec, 3.0, ones) - ones).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(apply_semigroup(spec, 0.05, f).cwiseAbs().maxCoeff() <= f.cwiseAbs().maxCoeff() + 1e-12);
  CHECK_THROWS_AS(apply_semigroup(spec, 0.1, Eigen::VectorXd::Ones(3)), Error);
  const Eigen::MatrixXd P = propagator(spec, 0.05);
  CHECK((P * f - apply_semigroup(spec, 0.05, f)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("Riesz kernel agrees with the time-integral quadrature") {
  for (auto bc : {BoundaryCondition::dirichlet, BoundaryCondition::neumann}) {
    const auto spec = decompose(build_gasket(3), bc);
    for (double alpha : {0.3, 0.6}) {
      const auto G = riesz_kernel(spec, alpha).values;
      const auto Q = riesz_by_quadrature(spec, alpha);
      CHECK((G - G.transpose()).cwiseAbs().maxCoeff() < 1e-12);
      const auto n = G.rows();
      for (int k = 0; k < 10; ++k) {
        const Eigen::Index i = (7 * k) % n, j = (11 * k + 3) % n;
        const double scale = std::max(std::abs(G(i, j)), 1e-3 * G.cwiseAbs().maxCoeff());
        CHECK(std::abs(G(i, j) - Q(i, j)) <= 5e-3 * scale);
      }
      if (bc == BoundaryCondition::dirichlet) {
        CHECK(G.minCoeff() >= 0.0);
      } else {
        CHECK((G * spec.mu).cwiseAbs().maxCoeff() < 1e-10);
      }
      // Operator norm on L2(mu) is lambda_1^-alpha.
      const Eigen::VectorXd s = spec.mu.cwiseSqrt();
      const Eigen::MatrixXd sym = s.asDiagonal() * G * s.asDiagonal();
      const double norm = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(sym).eigenvalues().cwiseAbs().maxCoeff();
      CHECK(norm <= std::pow(spec.lambda1(), -alpha) * (1.0 + 1e-10));
    }
  }
  CHECK_THROWS_AS(riesz_kernel(decompose(build_interval(4), BoundaryCondition::dirichlet), 0.0), Error);
}

TEST_CASE("Weyl fits") {
  const auto interval = decompose(build_interval(400), BoundaryCondition::dirichlet);
  CHECK(weyl_fit(interval).spectral_dimension == doctest::Approx(1.0).epsilon(0.05));
  const auto g0 = decompose(build_gasket(0), BoundaryCondition::neumann);
  try {
    weyl_fit(g0);
    FAIL("expected insufficient-spectrum");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::insufficient_spectrum);
  }
}

TEST_CASE("on-diagonal decay on the gasket") {
  const auto spec = decompose(build_gasket(6), BoundaryCondition::neumann);
  const auto row = *spec.row_of(spec.space->find_lattice({32, 0}).value());
  // Between the mesh time scale 1/lambda_max and the global one 1/lambda_1.
  const double t_lo = 30.0 / spec.lambda_max(), t_hi = 0.1 / spec.lambda1();
  const double slope = return_probability_exponent(spec, row, t_lo, t_hi);
  const double target = -std::log(3.0) / std::log(5.0);
  CHECK(slope == doctest::Approx(target).epsilon(0.15));
}

TEST_CASE("least squares") {
  const auto fit = least_squares({0, 1, 2, 3}, {1, 3, 5, 7});
  CHECK(fit.slope == doctest::Approx(2.0));
  CHECK(fit.intercept == doctest::Approx(1.0));
  CHECK(fit.stderr_slope == doctest::Approx(0.0));
  CHECK_THROWS_AS(least_squares({1.0}, {1.0}), Error);
  CHECK_THROWS_AS(least_squares({1.0, 1.0}, {1.0, 2.0}), Error);
}
