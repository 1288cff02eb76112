#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "pamlab/space.hpp"

namespace pamlab {

enum class BoundaryCondition { dirichlet, neumann };

std::string_view to_string(BoundaryCondition bc) noexcept;

/// Generalized symmetric pair (A, M) restricted to the active vertices.
/// M = diag(mass); the generator of the walk is M^-1 A.
struct Laplacian {
  std::shared_ptr<const Space> space;
  BoundaryCondition bc = BoundaryCondition::dirichlet;
  std::vector<std::size_t> active;  ///< space vertex id per row
  Eigen::MatrixXd stiffness;
  Eigen::VectorXd mass;
};

/// Dirichlet deletes the boundary rows and columns; Neumann keeps every vertex.
Laplacian assemble_laplacian(std::shared_ptr<const Space> space, BoundaryCondition bc);

/// Dirichlet Laplacian of a vertex region: the walk is killed on leaving it.
/// Boundary vertices of the space are never part of a region.
Laplacian assemble_region_laplacian(std::shared_ptr<const Space> space,
                                    const std::vector<std::size_t>& region);

/// Eigenpairs of A phi = lambda M phi, ascending, with mu-orthonormal columns.
struct SpectralData {
  std::shared_ptr<const Space> space;
  BoundaryCondition bc = BoundaryCondition::dirichlet;
  std::vector<std::size_t> active;
  Eigen::VectorXd mu;
  Eigen::VectorXd lambdas;
  Eigen::MatrixXd phis;
  double stiffness_norm = 0.0;
  double max_residual = 0.0;  ///< max_j |A phi_j - lambda_j M phi_j| / |A|

  std::size_t size() const noexcept { return static_cast<std::size_t>(mu.size()); }
  std::size_t modes() const noexcept { return static_cast<std::size_t>(lambdas.size()); }
  /// Index of the first strictly positive eigenvalue (1 for Neumann).
  std::size_t first_positive() const noexcept { return bc == BoundaryCondition::neumann ? 1 : 0; }
  double lambda1() const { return lambdas(static_cast<Eigen::Index>(first_positive())); }
  double lambda_max() const { return lambdas(lambdas.size() - 1); }
  double total_mass() const { return mu.sum(); }
  /// Row of a space vertex, or nullopt if it is not active.
  std::optional<std::size_t> row_of(std::size_t vertex) const;
};

/// Dense solve of the symmetrized problem M^-1/2 A M^-1/2. With `count`, only
/// the lowest `count` pairs are kept. Neumann spaces get the exact constant
/// mode for lambda_0 = 0. Each eigenvector's first clearly nonzero entry is
/// positive.
SpectralData eigendecompose(const Laplacian& lap, std::optional<std::size_t> count = std::nullopt);

struct HeatKernel {
  double t = 0.0;
  Eigen::MatrixXd values;
};

struct RieszKernel {
  double alpha = 0.0;
  BoundaryCondition bc = BoundaryCondition::dirichlet;
  Eigen::MatrixXd values;
};

HeatKernel heat_kernel(const SpectralData& spec, double t);

/// Matrix of P_t acting on fields: p_t M. At t = 0 this is the identity
/// (given the full basis).
Eigen::MatrixXd propagator(const SpectralData& spec, double t);

Eigen::VectorXd apply_semigroup(const SpectralData& spec, double t, const Eigen::VectorXd& f);

/// G_alpha = sum over positive modes of lambda^-alpha phi phi^T.
RieszKernel riesz_kernel(const SpectralData& spec, double alpha);

struct WeylFit {
  double spectral_dimension = 0.0;
  double slope = 0.0;
  std::size_t window = 0;
};

/// Least squares of log N(lambda) on log lambda over the lowest quarter of
/// the positive spectrum.
WeylFit weyl_fit(const SpectralData& spec);

struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;
  double stderr_slope = 0.0;
  std::size_t points = 0;
};

/// Ordinary least squares y ~ a + b x.
SlopeFit least_squares(const std::vector<double>& x, const std::vector<double>& y);

struct DecayWindow {
  double t_lo = 0.0;
  double t_hi = 0.0;
};

/// Window where the lambda_1 mode dominates: starts once the second mode is
/// suppressed by 1e-4 relative, spans 2/lambda_1.
DecayWindow default_decay_window(const SpectralData& spec);

/// Slope of log sup_x (P_t f)(x) against t over the window.
double decay_slope(const SpectralData& spec, const Eigen::VectorXd& f, DecayWindow window,
                   std::size_t points = 9);

struct HeatCheck {
  double t = 0.0;
  double s = 0.0;
  double symmetry_residual = 0.0;
  double semigroup_residual = 0.0;   ///< |p_{t+s} - p_t M p_s|_max / |p_{t+s}|_max
  double l2_identity_residual = 0.0;  ///< max_x |int p_t(x,.)^2 dmu - p_2t(x,x)| / p_2t(x,x)
  double min_entry = 0.0;
  double conservation_error = 0.0;   ///< max |P_t 1 - 1| (Neumann), 0 otherwise
  double decay_slope = 0.0;          ///< of sup P_t 1 (Dirichlet), 0 otherwise
  double lambda1 = 0.0;
  DecayWindow window;
};

HeatCheck heat_check(const SpectralData& spec, double t, double s);

/// Slope of log p_t(x,x) against log t over [t_lo, t_hi].
double return_probability_exponent(const SpectralData& spec, std::size_t row, double t_lo,
                                   double t_hi, std::size_t points = 12);

/// Slope of log G(x,y) against log d(x,y) over active y with
/// r_lo <= d(x,y) <= r_hi.
SlopeFit kernel_distance_slope(const SpectralData& spec, const Eigen::MatrixXd& kernel,
                               std::size_t row, double r_lo, double r_hi);

}  // namespace pamlab
