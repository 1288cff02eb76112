#pragma once

#include <cstddef>
#include <cstdint>

#include <Eigen/Dense>

#include "pamlab/rng.hpp"
#include "pamlab/spectral.hpp"

namespace pamlab {

/// Fractional Gaussian noise W_alpha: white in time, spatial covariance
/// G_{2 alpha} (plus c_u under Neumann). alpha = 0 is space-time white noise.
struct NoiseModel {
  double alpha = 0.0;
  double beta = 0.0;
  BoundaryCondition bc = BoundaryCondition::dirichlet;
  double c_u = 0.0;
  std::uint64_t seed = 0;
};

/// max(0, -min G_{2 alpha}) + 0.1 for Neumann with alpha > 0, else 0.
double default_c_u(const SpectralData& spec, double alpha);

NoiseModel make_noise_model(const SpectralData& spec, double alpha, double beta, std::uint64_t seed);

/// Throws invalid-configuration when the model contradicts the spectral data.
void validate(const NoiseModel& model, const SpectralData& spec);

/// Spatial covariance density per unit time: G_{2 alpha} (+ c_u) for
/// alpha > 0, diag(1/mu) for white noise.
Eigen::MatrixXd noise_covariance(const SpectralData& spec, const NoiseModel& model);

struct NoiseIncrement {
  double dt = 0.0;
  Eigen::VectorXd values;
};

/// Precomputed factor F with covariance F F^T = noise_covariance - c_u
/// (the constant Neumann component is drawn separately).
class NoiseSampler {
 public:
  NoiseSampler(const SpectralData& spec, const NoiseModel& model);

  NoiseIncrement sample(double dt, StreamId stream) const;

  /// Column c of `out` receives the increment of trial first_trial + c at
  /// `step`; identical to calling sample() per trial.
  void sample_block(double dt, std::uint32_t step, std::uint32_t first_trial, Eigen::MatrixXd& out) const;

  std::size_t draws_per_increment() const noexcept {
    return static_cast<std::size_t>(factor_.cols()) + (constant_std_ > 0.0 ? 1 : 0);
  }

 private:
  void draw(CounterRng& rng, Eigen::Ref<Eigen::VectorXd> xi) const;

  std::uint64_t seed_;
  Eigen::MatrixXd factor_;
  double constant_std_ = 0.0;
};

NoiseIncrement sample_increment(const SpectralData& spec, const NoiseModel& model, double dt,
                                StreamId stream);

/// Max over entries of |empirical - dt * target| / stderr for `samples`
/// increments of `sample_model`, compared against `target_model`'s analytic
/// covariance.
double covariance_check(const SpectralData& spec, const NoiseModel& sample_model,
                        const NoiseModel& target_model, std::size_t samples, double dt = 1.0);

inline double covariance_check(const SpectralData& spec, const NoiseModel& model, std::size_t samples,
                               double dt = 1.0) {
  return covariance_check(spec, model, model, samples, dt);
}

}  // namespace pamlab
