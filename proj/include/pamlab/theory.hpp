#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "pamlab/spectral.hpp"

namespace pamlab {

/// Position of alpha against the threshold d_h / (2 d_w).
enum class Regime { sub, critical, smooth };

std::string_view to_string(Regime regime) noexcept;

/// Large-beta growth of the second-moment Lyapunov exponent. Rates hold up
/// to constants that are never evaluated, so only exponents and shapes are
/// reported.
struct RatePrediction {
  Regime regime = Regime::sub;
  double alpha = 0.0;
  double d_h = 1.0;
  double d_w = 2.0;
  double upper_exponent = 0.0;  ///< power of beta in the upper rate
  std::string upper_shape;      ///< e.g. "beta^4", "beta^2 (ln beta)^2"
  double lower_exponent = 0.0;
  std::string lower_shape;
  std::string constants = "unknown C";
};

/// Throws recurrence-violated unless d_h < d_w. alpha equal to the threshold
/// up to 1e-12 relative is critical.
RatePrediction regime_and_exponents(double alpha, double d_h, double d_w);

/// 2 d_w / ((1 + 2 alpha) d_w - d_h).
double sub_regime_exponent(double alpha, double d_h, double d_w);

/// F(rho) = 1/rho + rho^-(1 + 2 alpha - d_h/d_w) in the sub regime,
/// ln(max(3/2, rho))^2 / rho at the threshold.
double rate_function(double rho, double alpha, double d_h, double d_w);

/// Root of C beta^2 F(rho) = 1 by bisection. At the threshold F is not
/// monotone and the largest root is returned. Smooth regime: unsupported-regime.
double rho_c_solve(double alpha, double beta, double C, double d_h, double d_w);

/// Solution x > 0 of c1 x exp(c2 x^(1/d_w)) = y.
double phi_inverse(double y, double c1, double c2, double d_w);

/// -p lambda_1 for Dirichlet data, 0 for Neumann.
double dirichlet_decay_floor(const SpectralData& spec, int p);

}  // namespace pamlab
