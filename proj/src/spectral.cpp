#include "pamlab/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "pamlab/error.hpp"

namespace pamlab {

namespace {

Laplacian assemble_on(std::shared_ptr<const Space> space, BoundaryCondition bc,
                      const std::vector<bool>& is_active) {
  Laplacian lap;
  const std::size_t n = space->size();
  std::vector<long> row(n, -1);
  for (std::size_t v = 0; v < n; ++v) {
    if (is_active[v]) {
      row[v] = static_cast<long>(lap.active.size());
      lap.active.push_back(v);
    }
  }
  const auto k = static_cast<Eigen::Index>(lap.active.size());
  lap.stiffness = Eigen::MatrixXd::Zero(k, k);
  lap.mass.resize(k);
  for (Eigen::Index i = 0; i < k; ++i) lap.mass(i) = space->mu()[lap.active[i]];
  for (const auto& e : space->edges()) {
    const long ra = row[e.a];
    const long rb = row[e.b];
    if (ra >= 0) lap.stiffness(ra, ra) += e.conductance;
    if (rb >= 0) lap.stiffness(rb, rb) += e.conductance;
    if (ra >= 0 && rb >= 0) {
      lap.stiffness(ra, rb) -= e.conductance;
      lap.stiffness(rb, ra) -= e.conductance;
    }
  }
  lap.space = std::move(space);
  lap.bc = bc;
  return lap;
}

}  // namespace

std::string_view to_string(BoundaryCondition bc) noexcept {
  return bc == BoundaryCondition::dirichlet ? "dirichlet" : "neumann";
}

Laplacian assemble_laplacian(std::shared_ptr<const Space> space, BoundaryCondition bc) {
  std::vector<bool> active(space->size(), true);
  if (bc == BoundaryCondition::dirichlet) {
    if (space->boundary().empty())
      throw Error(Errc::missing_boundary, "Dirichlet condition on a space without boundary");
    for (auto b : space->boundary()) active[b] = false;
  }
  return assemble_on(std::move(space), bc, active);
}

Laplacian assemble_region_laplacian(std::shared_ptr<const Space> space,
                                    const std::vector<std::size_t>& region) {
  std::vector<bool> active(space->size(), false);
  bool any = false;
  for (auto v : region) {
    if (v >= space->size()) throw Error(Errc::invalid_region, "region vertex out of range");
    if (!space->is_boundary(v)) {
      active[v] = true;
      any = true;
    }
  }
  if (!any) throw Error(Errc::invalid_region, "region has no interior vertex");
  return assemble_on(std::move(space), BoundaryCondition::dirichlet, active);
}

std::optional<std::size_t> SpectralData::row_of(std::size_t vertex) const {
  const auto it = std::lower_bound(active.begin(), active.end(), vertex);
  if (it == active.end() || *it != vertex) return std::nullopt;
  return static_cast<std::size_t>(it - active.begin());
}

SpectralData eigendecompose(const Laplacian& lap, std::optional<std::size_t> count) {
  const Eigen::Index n = lap.mass.size();
  if (n == 0) throw Error(Errc::invalid_region, "empty active set");
  const Eigen::VectorXd inv_sqrt = lap.mass.cwiseSqrt().cwiseInverse();
  const Eigen::MatrixXd sym = inv_sqrt.asDiagonal() * lap.stiffness * inv_sqrt.asDiagonal();

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sym);
  if (solver.info() != Eigen::Success)
    throw Error(Errc::numerical_failure, "symmetric eigensolver did not converge");

  const Eigen::Index keep = count ? std::min<Eigen::Index>(n, static_cast<Eigen::Index>(*count)) : n;
  SpectralData spec;
  spec.space = lap.space;
  spec.bc = lap.bc;
  spec.active = lap.active;
  spec.mu = lap.mass;
  spec.lambdas = solver.eigenvalues().head(keep);
  spec.phis = inv_sqrt.asDiagonal() * solver.eigenvectors().leftCols(keep);
  spec.stiffness_norm = lap.stiffness.cwiseAbs().rowwise().sum().maxCoeff();

  if (lap.bc == BoundaryCondition::neumann) {
    if (std::abs(spec.lambdas(0)) > 1e-8 * spec.stiffness_norm)
      throw Error(Errc::numerical_failure, "Neumann ground eigenvalue is not zero");
    if (keep > 1 && spec.lambdas(1) <= 1e-8 * spec.stiffness_norm)
      throw Error(Errc::numerical_failure, "Neumann spectrum has a repeated zero; space disconnected?");
    spec.lambdas(0) = 0.0;
    spec.phis.col(0).setConstant(1.0 / std::sqrt(spec.mu.sum()));
  }

  for (Eigen::Index j = 0; j < keep; ++j) {
    auto col = spec.phis.col(j);
    const double scale = col.cwiseAbs().maxCoeff();
    for (Eigen::Index i = 0; i < n; ++i) {
      if (std::abs(col(i)) > 1e-8 * scale) {
        if (col(i) < 0.0) col *= -1.0;
        break;
      }
    }
  }

  const Eigen::MatrixXd residual =
      lap.stiffness * spec.phis - lap.mass.asDiagonal() * spec.phis * spec.lambdas.asDiagonal();
  // Eigenvectors are mu-normalized; measure residuals against mu-unit vectors
  // mapped back to Euclidean scale so the bound is dimensionless.
  double worst = 0.0;
  for (Eigen::Index j = 0; j < keep; ++j) {
    const double norm = spec.phis.col(j).norm();
    worst = std::max(worst, residual.col(j).norm() / (norm * spec.stiffness_norm));
  }
  spec.max_residual = worst;
  if (!(worst <= 1e-8))
    throw Error(Errc::numerical_failure, "generalized eigen-residual " + std::to_string(worst));
  return spec;
}

HeatKernel heat_kernel(const SpectralData& spec, double t) {
  if (!(t > 0.0)) throw Error(Errc::invalid_time, "heat kernel needs t > 0");
  const Eigen::VectorXd decay = (-spec.lambdas.array() * t).exp();
  return {t, spec.phis * decay.asDiagonal() * spec.phis.transpose()};
}

Eigen::MatrixXd propagator(const SpectralData& spec, double t) {
  if (!(t >= 0.0)) throw Error(Errc::invalid_time, "propagator needs t >= 0");
  const Eigen::VectorXd decay = (-spec.lambdas.array() * t).exp();
  return spec.phis * decay.asDiagonal() * (spec.phis.transpose() * spec.mu.asDiagonal());
}

Eigen::VectorXd apply_semigroup(const SpectralData& spec, double t, const Eigen::VectorXd& f) {
  if (f.size() != static_cast<Eigen::Index>(spec.size()))
    throw Error(Errc::invalid_field, "field size differs from the active vertex count");
  if (!(t >= 0.0)) throw Error(Errc::invalid_time, "semigroup needs t >= 0");
  if (t == 0.0) return f;
  const Eigen::VectorXd coeff = spec.phis.transpose() * spec.mu.cwiseProduct(f);
  const Eigen::VectorXd decay = (-spec.lambdas.array() * t).exp();
  return spec.phis * decay.cwiseProduct(coeff);
}

RieszKernel riesz_kernel(const SpectralData& spec, double alpha) {
  if (!(alpha > 0.0)) throw Error(Errc::invalid_order, "Riesz kernel needs alpha > 0");
  const auto j0 = static_cast<Eigen::Index>(spec.first_positive());
  const Eigen::Index k = spec.lambdas.size() - j0;
  const Eigen::VectorXd weight = spec.lambdas.tail(k).array().pow(-alpha);
  const auto modes = spec.phis.rightCols(k);
  return {alpha, spec.bc, modes * weight.asDiagonal() * modes.transpose()};
}

SlopeFit least_squares(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  if (n < 2 || y.size() != n) throw Error(Errc::invalid_window, "least squares needs at least 2 points");
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (!(sxx > 0.0)) throw Error(Errc::invalid_window, "degenerate abscissae");
  SlopeFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.points = n;
  if (n > 2) {
    double rss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double r = y[i] - fit.intercept - fit.slope * x[i];
      rss += r * r;
    }
    fit.stderr_slope = std::sqrt(rss / static_cast<double>(n - 2) / sxx);
  }
  return fit;
}

WeylFit weyl_fit(const SpectralData& spec) {
  const std::size_t j0 = spec.first_positive();
  const std::size_t positive = spec.modes() > j0 ? spec.modes() - j0 : 0;
  const auto window = static_cast<std::size_t>(std::ceil(0.25 * static_cast<double>(positive)));
  if (window < 50)
    throw Error(Errc::insufficient_spectrum,
                "Weyl fit needs 50 eigenvalues in the trusted window, have " + std::to_string(window));
  std::vector<double> x, y;
  for (std::size_t j = 1; j <= window; ++j) {
    x.push_back(std::log(spec.lambdas(static_cast<Eigen::Index>(j0 + j - 1))));
    y.push_back(std::log(static_cast<double>(j)));
  }
  const auto fit = least_squares(x, y);
  return {2.0 * fit.slope, fit.slope, window};
}

DecayWindow default_decay_window(const SpectralData& spec) {
  const auto j0 = static_cast<Eigen::Index>(spec.first_positive());
  const double l1 = spec.lambdas(j0);
  double t_lo = 1.0 / l1;
  if (spec.lambdas.size() > j0 + 1) {
    const double gap = spec.lambdas(j0 + 1) - l1;
    if (gap > 1e-9 * l1) t_lo = std::max(t_lo, std::log(1e4) / gap);
  }
  return {t_lo, t_lo + 2.0 / l1};
}

double decay_slope(const SpectralData& spec, const Eigen::VectorXd& f, DecayWindow window,
                   std::size_t points) {
  std::vector<double> ts, ys;
  for (std::size_t k = 0; k < points; ++k) {
    const double t = window.t_lo + (window.t_hi - window.t_lo) * static_cast<double>(k) / (points - 1);
    const double sup = apply_semigroup(spec, t, f).cwiseAbs().maxCoeff();
    ts.push_back(t);
    ys.push_back(std::log(sup));
  }
  return least_squares(ts, ys).slope;
}

HeatCheck heat_check(const SpectralData& spec, double t, double s) {
  HeatCheck report;
  report.t = t;
  report.s = s;
  report.lambda1 = spec.lambda1();
  const auto pt = heat_kernel(spec, t).values;
  const auto ps = heat_kernel(spec, s).values;
  const auto pts = heat_kernel(spec, t + s).values;
  const auto p2t = heat_kernel(spec, 2.0 * t).values;

  report.symmetry_residual = (pt - pt.transpose()).cwiseAbs().maxCoeff() / pt.cwiseAbs().maxCoeff();
  report.semigroup_residual =
      (pts - pt * spec.mu.asDiagonal() * ps).cwiseAbs().maxCoeff() / pts.cwiseAbs().maxCoeff();
  report.min_entry = pt.minCoeff();
  double l2 = 0.0;
  for (Eigen::Index x = 0; x < pt.rows(); ++x) {
    const double lhs = (pt.row(x).array().square() * spec.mu.transpose().array()).sum();
    l2 = std::max(l2, std::abs(lhs - p2t(x, x)) / p2t(x, x));
  }
  report.l2_identity_residual = l2;

  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(spec.size()));
  if (spec.bc == BoundaryCondition::neumann) {
    report.conservation_error = (apply_semigroup(spec, t, ones) - ones).cwiseAbs().maxCoeff();
  } else {
    report.window = default_decay_window(spec);
    report.decay_slope = decay_slope(spec, ones, report.window);
  }
  return report;
}

double return_probability_exponent(const SpectralData& spec, std::size_t row, double t_lo,
                                   double t_hi, std::size_t points) {
  std::vector<double> x, y;
  const auto r = static_cast<Eigen::Index>(row);
  for (std::size_t k = 0; k < points; ++k) {
    const double t = t_lo * std::pow(t_hi / t_lo, static_cast<double>(k) / (points - 1));
    const Eigen::VectorXd decay = (-spec.lambdas.array() * t).exp();
    const double diag = (spec.phis.row(r).array().square() * decay.transpose().array()).sum();
    x.push_back(std::log(t));
    y.push_back(std::log(diag));
  }
  return least_squares(x, y).slope;
}

SlopeFit kernel_distance_slope(const SpectralData& spec, const Eigen::MatrixXd& kernel,
                               std::size_t row, double r_lo, double r_hi) {
  const auto dist = spec.space->distances_from(spec.active[row]);
  std::vector<double> x, y;
  for (std::size_t j = 0; j < spec.size(); ++j) {
    const double d = dist[spec.active[j]];
    if (j == row || d < r_lo || d > r_hi) continue;
    const double g = kernel(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(j));
    if (!(g > 0.0)) throw Error(Errc::invalid_window, "kernel not positive inside the fit window");
    x.push_back(std::log(d));
    y.push_back(std::log(g));
  }
  return least_squares(x, y);
}

}  // namespace pamlab
