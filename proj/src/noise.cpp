#include "pamlab/noise.hpp"

#include <algorithm>
#include <cmath>

#include "pamlab/error.hpp"

namespace pamlab {

double default_c_u(const SpectralData& spec, double alpha) {
  if (spec.bc != BoundaryCondition::neumann || alpha == 0.0) return 0.0;
  const double lowest = riesz_kernel(spec, 2.0 * alpha).values.minCoeff();
  return std::max(0.0, -lowest) + 0.1;
}

NoiseModel make_noise_model(const SpectralData& spec, double alpha, double beta, std::uint64_t seed) {
  NoiseModel model{alpha, beta, spec.bc, 0.0, seed};
  model.c_u = default_c_u(spec, alpha);
  validate(model, spec);
  return model;
}

void validate(const NoiseModel& model, const SpectralData& spec) {
  if (!(model.alpha >= 0.0)) throw Error(Errc::invalid_order, "noise order alpha must be >= 0");
  if (!(model.beta >= 0.0)) throw Error(Errc::invalid_configuration, "beta must be >= 0");
  if (!(model.c_u >= 0.0)) throw Error(Errc::invalid_configuration, "c_u must be >= 0");
  if (model.bc != spec.bc) throw Error(Errc::invalid_configuration, "noise and spectrum boundary differ");
  if (model.alpha == 0.0 && model.c_u != 0.0)
    throw Error(Errc::invalid_configuration, "white noise takes c_u = 0");
  if (model.bc == BoundaryCondition::dirichlet && model.c_u != 0.0)
    throw Error(Errc::invalid_configuration, "c_u applies to Neumann noise only");
  if (model.bc == BoundaryCondition::neumann && model.alpha > 0.0) {
    const double lowest = riesz_kernel(spec, 2.0 * model.alpha).values.minCoeff();
    if (lowest + model.c_u < 0.0)
      throw Error(Errc::invalid_configuration, "c_u leaves G_2alpha + c_u negative");
  }
}

Eigen::MatrixXd noise_covariance(const SpectralData& spec, const NoiseModel& model) {
  if (model.alpha == 0.0) return spec.mu.cwiseInverse().asDiagonal();
  Eigen::MatrixXd cov = riesz_kernel(spec, 2.0 * model.alpha).values;
  cov.array() += model.c_u;
  return cov;
}

NoiseSampler::NoiseSampler(const SpectralData& spec, const NoiseModel& model) : seed_(model.seed) {
  if (model.alpha == 0.0) {
    factor_ = spec.phis;
    return;
  }
  const auto j0 = static_cast<Eigen::Index>(spec.first_positive());
  const Eigen::Index k = spec.lambdas.size() - j0;
  const Eigen::VectorXd weight = spec.lambdas.tail(k).array().pow(-model.alpha);
  factor_ = spec.phis.rightCols(k) * weight.asDiagonal();
  if (spec.bc == BoundaryCondition::neumann) constant_std_ = std::sqrt(model.c_u);
}

void NoiseSampler::draw(CounterRng& rng, Eigen::Ref<Eigen::VectorXd> out) const {
  Eigen::VectorXd xi(factor_.cols());
  for (Eigen::Index i = 0; i < xi.size(); ++i) xi(i) = rng.normal();
  out.noalias() = factor_ * xi;
  if (constant_std_ > 0.0) out.array() += constant_std_ * rng.normal();
}

NoiseIncrement NoiseSampler::sample(double dt, StreamId stream) const {
  if (!(dt > 0.0)) throw Error(Errc::invalid_step, "noise increment needs dt > 0");
  NoiseIncrement inc{dt, Eigen::VectorXd(factor_.rows())};
  CounterRng rng(seed_, stream);
  draw(rng, inc.values);
  inc.values *= std::sqrt(dt);
  return inc;
}

void NoiseSampler::sample_block(double dt, std::uint32_t step, std::uint32_t first_trial,
                                Eigen::MatrixXd& out) const {
  if (!(dt > 0.0)) throw Error(Errc::invalid_step, "noise increment needs dt > 0");
  const Eigen::Index cols = out.cols();
  Eigen::MatrixXd xi(factor_.cols(), cols);
  Eigen::RowVectorXd constant(cols);
  for (Eigen::Index c = 0; c < cols; ++c) {
    CounterRng rng(seed_, {StreamDomain::noise, first_trial + static_cast<std::uint32_t>(c), step});
    for (Eigen::Index i = 0; i < xi.rows(); ++i) xi(i, c) = rng.normal();
    constant(c) = constant_std_ > 0.0 ? rng.normal() : 0.0;
  }
  out.noalias() = factor_ * xi;
  if (constant_std_ > 0.0) out.rowwise() += constant_std_ * constant;
  out *= std::sqrt(dt);
}

NoiseIncrement sample_increment(const SpectralData& spec, const NoiseModel& model, double dt,
                                StreamId stream) {
  validate(model, spec);
  return NoiseSampler(spec, model).sample(dt, stream);
}

double covariance_check(const SpectralData& spec, const NoiseModel& sample_model,
                        const NoiseModel& target_model, std::size_t samples, double dt) {
  if (samples < 1000) throw Error(Errc::insufficient_samples, "covariance check needs >= 1000 samples");
  validate(sample_model, spec);
  const NoiseSampler sampler(spec, sample_model);
  const Eigen::MatrixXd target = dt * noise_covariance(spec, target_model);
  const auto n = static_cast<Eigen::Index>(spec.size());

  // Raw second moments (the mean is known to be zero) and their variances.
  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(n, n);
  Eigen::MatrixXd sum_sq = Eigen::MatrixXd::Zero(n, n);
  constexpr std::uint32_t kBlock = 256;
  Eigen::MatrixXd block(n, kBlock);
  for (std::size_t first = 0; first < samples; first += kBlock) {
    const auto cols = static_cast<Eigen::Index>(std::min<std::size_t>(kBlock, samples - first));
    block.resize(n, cols);
    sampler.sample_block(dt, 0, static_cast<std::uint32_t>(first), block);
    for (Eigen::Index c = 0; c < cols; ++c) {
      const auto x = block.col(c);
      const Eigen::MatrixXd prod = x * x.transpose();
      sum += prod;
      sum_sq += prod.cwiseProduct(prod);
    }
  }
  const double count = static_cast<double>(samples);
  const Eigen::MatrixXd mean = sum / count;
  const Eigen::MatrixXd var = (sum_sq / count - mean.cwiseProduct(mean)) * (count / (count - 1.0));
  const Eigen::MatrixXd se = (var / count).cwiseSqrt();
  return ((mean - target).cwiseAbs().array() / se.array()).maxCoeff();
}

}  // namespace pamlab
