#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "pamlab/noise.hpp"
#include "pamlab/spectral.hpp"

namespace pamlab {

struct PamState {
  double t = 0.0;
  Eigen::VectorXd u;
};

/// Exponential-Euler step of the mild equation: u' = P_dt (u + beta u * dW).
/// The increment multiplies the current state before smoothing, so the
/// stochastic convolution is evaluated at the left point.
class PamStepper {
 public:
  PamStepper(const SpectralData& spec, const NoiseModel& model, double dt);

  PamState step(const PamState& state, const NoiseIncrement& increment) const;

  double dt() const noexcept { return dt_; }
  const Eigen::MatrixXd& propagator() const noexcept { return propagator_; }

 private:
  double dt_;
  double beta_;
  Eigen::MatrixXd propagator_;
};

/// Single step straight from the spectral data.
PamState step(const PamState& state, const SpectralData& spec, double beta, const NoiseIncrement& increment);

/// Monte Carlo moment estimates at recorded times.
struct MomentEstimates {
  std::vector<double> times;
  int p_max = 0;
  /// mean[k][p-1](row) = estimate of E[u(times[k], row)^p]; stderr alike.
  std::vector<std::vector<Eigen::VectorXd>> mean;
  std::vector<std::vector<Eigen::VectorXd>> stderr;
  std::size_t trials = 0;
  std::optional<double> blowup_time;
  double dt_lambda_max = 0.0;
};

struct McOptions {
  std::size_t trials = 1000;
  int p_max = 2;
  std::size_t record_every = 1;
};

/// Trials run in fixed blocks with per-trial noise substreams; per-block
/// Welford accumulators are merged in block order, so results do not depend
/// on the worker count. Requires trials >= 100 and dt * lambda_max <= 10.
MomentEstimates mc_moments(const SpectralData& spec, const NoiseModel& model, const Eigen::VectorXd& u0,
                           double T, double dt, const McOptions& options);

/// Two-point function M(t, x, y) = E[u(t,x) u(t,y)] on a time grid.
struct MomentField {
  std::vector<double> times;
  std::vector<Eigen::MatrixXd> values;

  Eigen::VectorXd diagonal(std::size_t k) const { return values[k].diagonal(); }
};

/// Largest active vertex count accepted by the Volterra solvers.
inline constexpr std::size_t kVolterraSizeLimit = 400;

/// Left-point quadrature of
///   M(t) = (P_t u0)(P_t u0)^T + beta^2 sum_{s < t} dt K_{t-s}[C o M(s)],
/// K_r[N] = P_r N P_r^T, C the noise covariance density. Evaluated by the
/// equivalent one-step recursion M <- P_dt (M + beta^2 dt C o M) P_dt^T.
MomentField second_moment_volterra(const SpectralData& spec, const NoiseModel& model,
                                   const Eigen::VectorXd& u0, double T, double dt,
                                   std::size_t record_every = 1);

/// Wiener chaos contributions T_0..T_K of the second moment at every grid
/// time: T_0 = J J^T and T_k = beta^2 sum_{s<t} dt K_{t-s}[C o T_{k-1}(s)],
/// computed by direct convolution. Their sum is the K-th Picard iterate.
std::vector<MomentField> chaos_terms(const SpectralData& spec, const NoiseModel& model,
                                     const Eigen::VectorXd& u0, double T, double dt, int K);

struct LyapunovReport {
  int p = 2;
  double slope = 0.0;
  double intercept = 0.0;
  double stderr_slope = 0.0;
  double t_lo = 0.0;
  double t_hi = 0.0;
  std::size_t points = 0;
};

/// Least-squares slope of ln E[u^p] against t over [t_lo, t_hi]; defaults to
/// the last half of the series. Needs >= 5 positive points.
LyapunovReport lyapunov_fit(const std::vector<double>& times, const std::vector<double>& values, int p,
                            std::optional<double> t_lo = std::nullopt,
                            std::optional<double> t_hi = std::nullopt);

struct ScalingReport {
  int level = 0;
  CellWord word;
  BoundaryCondition bc = BoundaryCondition::dirichlet;
  double eigenvalue_error = 0.0;        ///< max_j |lambda_j(cell) / (5^n lambda_j) - 1|
  double heat_kernel_error = 0.0;       ///< max |p^w_t - 3^n p_{5^n t}| / max |3^n p_{5^n t}|
  double beta_stated = 0.0;             ///< beta (5^(alpha+1/2) / 3)^n
  double beta_variance_matched = 0.0;   ///< beta 5^(n(alpha+1/2)) / 3^(n/2)
  double moment_discrepancy = 0.0;      ///< with beta_stated
  double moment_discrepancy_matched = 0.0;  ///< with beta_variance_matched
};

/// Compares Gasket(m) with the cell f_w(K) cut from Gasket(m+n): eigenvalue
/// scaling, heat-kernel scaling, and E[v(t,x)^2] against E[u(5^n t, x)^2]
/// from matched Volterra grids (cell step dt, base step 5^n dt). u0 = 1.
ScalingReport scaling_check_gasket(int m, const CellWord& word, double alpha, double beta,
                                   BoundaryCondition bc, const std::vector<double>& t_grid, double dt);

}  // namespace pamlab
