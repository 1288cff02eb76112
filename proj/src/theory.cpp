#include "pamlab/theory.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>

#include "pamlab/error.hpp"

namespace pamlab {

namespace {

/// Root of a decreasing function on [lo, hi] with f(lo) > 0 > f(hi).
double bisect_decreasing(const std::function<double(double)>& f, double lo, double hi) {
  for (int i = 0; i < 400 && hi - lo > 1e-15 * hi; ++i) {
    const double mid = 0.5 * (lo + hi);
    (f(mid) > 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

void check_dimensions(double d_h, double d_w) {
  if (!(d_h > 0.0) || !(d_w > 0.0)) throw Error(Errc::invalid_configuration, "dimensions must be positive");
  if (!(d_h < d_w)) throw Error(Errc::recurrence_violated, "need d_h < d_w (spectral dimension below 2)");
}

Regime classify(double alpha, double d_h, double d_w) {
  const double threshold = d_h / (2.0 * d_w);
  if (std::abs(alpha - threshold) <= 1e-12 * threshold) return Regime::critical;
  return alpha < threshold ? Regime::sub : Regime::smooth;
}

std::string power_shape(double exponent) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "beta^%.6g", exponent);
  return buf;
}

}  // namespace

std::string_view to_string(Regime regime) noexcept {
  switch (regime) {
    case Regime::sub: return "sub";
    case Regime::critical: return "critical";
    case Regime::smooth: return "smooth";
  }
  return "sub";
}

double sub_regime_exponent(double alpha, double d_h, double d_w) {
  return 2.0 * d_w / ((1.0 + 2.0 * alpha) * d_w - d_h);
}

RatePrediction regime_and_exponents(double alpha, double d_h, double d_w) {
  check_dimensions(d_h, d_w);
  if (!(alpha >= 0.0)) throw Error(Errc::invalid_order, "alpha must be >= 0");
  RatePrediction r;
  r.alpha = alpha;
  r.d_h = d_h;
  r.d_w = d_w;
  r.regime = classify(alpha, d_h, d_w);
  switch (r.regime) {
    case Regime::sub:
      r.upper_exponent = r.lower_exponent = sub_regime_exponent(alpha, d_h, d_w);
      r.upper_shape = r.lower_shape = power_shape(r.upper_exponent);
      break;
    case Regime::critical:
      r.upper_exponent = r.lower_exponent = 2.0;
      r.upper_shape = "beta^2 (ln beta)^2";
      r.lower_shape = "beta^2 ln beta";
      break;
    case Regime::smooth:
      r.upper_exponent = r.lower_exponent = 2.0;
      r.upper_shape = r.lower_shape = "beta^2";
      break;
  }
  return r;
}

double rate_function(double rho, double alpha, double d_h, double d_w) {
  if (classify(alpha, d_h, d_w) == Regime::critical) {
    const double l = std::log(std::max(1.5, rho));
    return l * l / rho;
  }
  return 1.0 / rho + std::pow(rho, -(1.0 + 2.0 * alpha - d_h / d_w));
}

double rho_c_solve(double alpha, double beta, double C, double d_h, double d_w) {
  check_dimensions(d_h, d_w);
  if (!(C > 0.0) || !(beta > 0.0)) throw Error(Errc::invalid_configuration, "C and beta must be positive");
  const Regime regime = classify(alpha, d_h, d_w);
  if (regime == Regime::smooth) throw Error(Errc::unsupported_regime, "rho_c is defined for alpha <= d_h/(2 d_w)");
  const double scale = C * beta * beta;
  auto g = [&](double rho) { return scale * rate_function(rho, alpha, d_h, d_w) - 1.0; };

  if (regime == Regime::critical) {
    // ln(rho)^2 / rho peaks at rho = e^2 and is decreasing beyond it; below
    // 3/2 the function is ln(3/2)^2 / rho.
    const double peak = std::exp(2.0);
    if (g(peak) >= 0.0) {
      double hi = 2.0 * peak;
      while (g(hi) > 0.0) hi *= 2.0;
      return bisect_decreasing(g, peak, hi);
    }
    const double l = std::log(1.5);
    return scale * l * l;
  }
  double lo = 1.0, hi = 1.0;
  while (g(lo) <= 0.0) lo *= 0.5;
  while (g(hi) > 0.0) hi *= 2.0;
  return bisect_decreasing(g, lo, hi);
}

double phi_inverse(double y, double c1, double c2, double d_w) {
  if (!(y > 0.0) || !(c1 > 0.0) || !(c2 > 0.0) || !(d_w > 0.0))
    throw Error(Errc::invalid_configuration, "phi_inverse needs y, c1, c2, d_w > 0");
  auto g = [&](double x) { return y - c1 * x * std::exp(c2 * std::pow(x, 1.0 / d_w)); };
  double lo = 0.0, hi = 1.0;
  while (g(hi) > 0.0) hi *= 2.0;
  return bisect_decreasing(g, lo, hi);
}

double dirichlet_decay_floor(const SpectralData& spec, int p) {
  if (spec.bc == BoundaryCondition::neumann) return 0.0;
  return -static_cast<double>(p) * spec.lambda1();
}

}  // namespace pamlab
