#include "pamlab/pam.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "pamlab/error.hpp"
#include "pamlab/parallel.hpp"

namespace pamlab {

namespace {

std::size_t step_count(double T, double dt) {
  if (!(dt > 0.0)) throw Error(Errc::invalid_step, "dt must be positive");
  if (!(T > 0.0)) throw Error(Errc::invalid_time, "horizon T must be positive");
  const double ratio = T / dt;
  const auto n = static_cast<std::size_t>(std::llround(ratio));
  if (n == 0 || std::abs(ratio - static_cast<double>(n)) > 1e-9 * ratio)
    throw Error(Errc::invalid_step, "dt must divide T");
  return n;
}

bool recorded(std::size_t k, std::size_t n, std::size_t every) { return k % every == 0 || k == n; }

void check_field(const SpectralData& spec, const Eigen::VectorXd& f) {
  if (f.size() != static_cast<Eigen::Index>(spec.size()))
    throw Error(Errc::invalid_field, "field size differs from the active vertex count");
}

/// Welford accumulators for one block of trials.
struct BlockStats {
  std::size_t count = 0;
  std::vector<std::vector<Eigen::VectorXd>> mean;  // [record][p-1]
  std::vector<std::vector<Eigen::VectorXd>> m2;
  std::optional<std::size_t> blowup_step;

  BlockStats(std::size_t records, int p_max, Eigen::Index rows)
      : mean(records, std::vector<Eigen::VectorXd>(p_max, Eigen::VectorXd::Zero(rows))),
        m2(records, std::vector<Eigen::VectorXd>(p_max, Eigen::VectorXd::Zero(rows))) {}

  void merge(const BlockStats& other, std::size_t records) {
    const double na = static_cast<double>(count);
    const double nb = static_cast<double>(other.count);
    const double n = na + nb;
    if (nb == 0) return;
    for (std::size_t r = 0; r < records; ++r) {
      for (std::size_t p = 0; p < mean[r].size(); ++p) {
        const Eigen::VectorXd delta = other.mean[r][p] - mean[r][p];
        mean[r][p] += delta * (nb / n);
        m2[r][p] += other.m2[r][p] + delta.cwiseProduct(delta) * (na * nb / n);
      }
    }
    count += other.count;
  }
};

}  // namespace

PamStepper::PamStepper(const SpectralData& spec, const NoiseModel& model, double dt)
    : dt_(dt), beta_(model.beta) {
  if (!(dt > 0.0)) throw Error(Errc::invalid_step, "dt must be positive");
  propagator_ = pamlab::propagator(spec, dt);
}

PamState PamStepper::step(const PamState& state, const NoiseIncrement& increment) const {
  if (std::abs(increment.dt - dt_) > 1e-12 * dt_)
    throw Error(Errc::invalid_step, "increment dt differs from the stepper dt");
  if (increment.values.size() != state.u.size() || state.u.size() != propagator_.rows())
    throw Error(Errc::invalid_field, "state and increment sizes differ");
  PamState next{state.t + dt_, propagator_ * (state.u + beta_ * state.u.cwiseProduct(increment.values))};
  if (!next.u.allFinite())
    throw Error(Errc::blowup_abort, "non-finite field at t = " + std::to_string(next.t));
  return next;
}

PamState step(const PamState& state, const SpectralData& spec, double beta, const NoiseIncrement& increment) {
  check_field(spec, state.u);
  if (increment.values.size() != state.u.size())
    throw Error(Errc::invalid_field, "state and increment sizes differ");
  PamState next{state.t + increment.dt,
                apply_semigroup(spec, increment.dt, state.u + beta * state.u.cwiseProduct(increment.values))};
  if (!next.u.allFinite())
    throw Error(Errc::blowup_abort, "non-finite field at t = " + std::to_string(next.t));
  return next;
}

MomentEstimates mc_moments(const SpectralData& spec, const NoiseModel& model, const Eigen::VectorXd& u0,
                           double T, double dt, const McOptions& options) {
  validate(model, spec);
  check_field(spec, u0);
  if (options.trials < 100) throw Error(Errc::insufficient_samples, "Monte Carlo needs >= 100 trials");
  if (options.p_max < 1) throw Error(Errc::invalid_configuration, "p_max must be >= 1");
  if (options.record_every == 0) throw Error(Errc::invalid_configuration, "record_every must be >= 1");
  const std::size_t n = step_count(T, dt);
  const double dt_lmax = dt * spec.lambda_max();
  if (dt_lmax > 10.0)
    throw Error(Errc::invalid_step, "dt * lambda_max = " + std::to_string(dt_lmax) + " exceeds 10");

  std::vector<std::size_t> record_steps;
  for (std::size_t k = 0; k <= n; ++k) {
    if (recorded(k, n, options.record_every)) record_steps.push_back(k);
  }
  const std::size_t records = record_steps.size();
  const auto rows = static_cast<Eigen::Index>(spec.size());
  const int p_max = options.p_max;

  const NoiseSampler sampler(spec, model);
  const Eigen::MatrixXd P = propagator(spec, dt);

  constexpr std::size_t kBlock = 32;
  constexpr std::size_t kWave = 8;
  const std::size_t blocks = (options.trials + kBlock - 1) / kBlock;

  auto run_block = [&](std::size_t b) {
    const std::size_t first = b * kBlock;
    const auto cols = static_cast<Eigen::Index>(std::min(kBlock, options.trials - first));
    BlockStats stats(records, p_max, rows);
    Eigen::MatrixXd U = u0.replicate(1, cols);
    Eigen::MatrixXd dW(rows, cols);
    auto accumulate = [&](std::size_t r) {
      for (Eigen::Index c = 0; c < cols; ++c) {
        Eigen::VectorXd power = U.col(c);
        const double count = static_cast<double>(c + 1);
        for (int p = 0; p < p_max; ++p) {
          if (p > 0) power = power.cwiseProduct(U.col(c));
          auto& mean = stats.mean[r][p];
          const Eigen::VectorXd delta = power - mean;
          mean += delta / count;
          stats.m2[r][p] += delta.cwiseProduct(power - mean);
        }
      }
    };
    std::size_t r = 0;
    accumulate(r++);
    for (std::size_t k = 1; k <= n; ++k) {
      sampler.sample_block(dt, static_cast<std::uint32_t>(k - 1), static_cast<std::uint32_t>(first), dW);
      U = P * (U + model.beta * U.cwiseProduct(dW));
      if (!U.allFinite()) {
        stats.blowup_step = k;
        break;
      }
      if (r < records && record_steps[r] == k) accumulate(r++);
    }
    stats.count = static_cast<std::size_t>(cols);
    return stats;
  };

  BlockStats total(records, p_max, rows);
  std::optional<std::size_t> blowup;
  for (std::size_t wave = 0; wave < blocks && !blowup; wave += kWave) {
    const std::size_t width = std::min(kWave, blocks - wave);
    std::vector<std::optional<BlockStats>> slots(width);
    parallel_for(width, [&](std::size_t i) { slots[i] = run_block(wave + i); });
    for (auto& s : slots) {
      if (s->blowup_step) blowup = std::min(blowup.value_or(n + 1), *s->blowup_step);
      total.merge(*s, records);
    }
  }

  MomentEstimates out;
  out.p_max = p_max;
  out.trials = total.count;
  out.dt_lambda_max = dt_lmax;
  const double count = static_cast<double>(total.count);
  for (std::size_t r = 0; r < records; ++r) {
    if (blowup && record_steps[r] >= *blowup) break;
    out.times.push_back(static_cast<double>(record_steps[r]) * dt);
    std::vector<Eigen::VectorXd> se(p_max);
    for (int p = 0; p < p_max; ++p) se[p] = (total.m2[r][p] / ((count - 1.0) * count)).cwiseSqrt();
    out.mean.push_back(total.mean[r]);
    out.stderr.push_back(std::move(se));
  }
  if (blowup) out.blowup_time = static_cast<double>(*blowup) * dt;
  return out;
}

MomentField second_moment_volterra(const SpectralData& spec, const NoiseModel& model,
                                   const Eigen::VectorXd& u0, double T, double dt,
                                   std::size_t record_every) {
  validate(model, spec);
  check_field(spec, u0);
  if (spec.size() > kVolterraSizeLimit)
    throw Error(Errc::size_limit, "Volterra state limited to " + std::to_string(kVolterraSizeLimit) +
                                      " active vertices, have " + std::to_string(spec.size()));
  if (record_every == 0) throw Error(Errc::invalid_configuration, "record_every must be >= 1");
  const std::size_t n = step_count(T, dt);
  const Eigen::MatrixXd P = propagator(spec, dt);
  const double weight = model.beta * model.beta * dt;
  const bool white = model.alpha == 0.0;
  const Eigen::MatrixXd C = noise_covariance(spec, model);

  MomentField field;
  Eigen::MatrixXd M = u0 * u0.transpose();
  field.times.push_back(0.0);
  field.values.push_back(M);
  Eigen::MatrixXd source;
  for (std::size_t k = 1; k <= n; ++k) {
    if (white) {
      source = M;
      source.diagonal() += weight * C.diagonal().cwiseProduct(M.diagonal());
    } else {
      source = M + weight * C.cwiseProduct(M);
    }
    M.noalias() = P * source * P.transpose();
    if (!M.allFinite())
      throw Error(Errc::blowup_abort, "second moment overflow at t = " + std::to_string(k * dt));
    if (recorded(k, n, record_every)) {
      field.times.push_back(static_cast<double>(k) * dt);
      field.values.push_back(M);
    }
  }
  return field;
}

std::vector<MomentField> chaos_terms(const SpectralData& spec, const NoiseModel& model,
                                     const Eigen::VectorXd& u0, double T, double dt, int K) {
  validate(model, spec);
  check_field(spec, u0);
  if (spec.size() > kVolterraSizeLimit) throw Error(Errc::size_limit, "chaos terms: state too large");
  if (K < 0) throw Error(Errc::invalid_configuration, "chaos order must be >= 0");
  const std::size_t n = step_count(T, dt);
  std::vector<Eigen::MatrixXd> powers(n + 1);
  for (std::size_t j = 0; j <= n; ++j) powers[j] = propagator(spec, static_cast<double>(j) * dt);
  const Eigen::MatrixXd C = noise_covariance(spec, model);
  const double weight = model.beta * model.beta * dt;

  std::vector<MomentField> terms(static_cast<std::size_t>(K) + 1);
  for (std::size_t j = 0; j <= n; ++j) {
    const Eigen::VectorXd J = powers[j] * u0;
    terms[0].times.push_back(static_cast<double>(j) * dt);
    terms[0].values.push_back(J * J.transpose());
  }
  for (int k = 1; k <= K; ++k) {
    auto& prev = terms[static_cast<std::size_t>(k) - 1];
    auto& cur = terms[static_cast<std::size_t>(k)];
    std::vector<Eigen::MatrixXd> sources(n + 1);
    for (std::size_t i = 0; i <= n; ++i) sources[i] = C.cwiseProduct(prev.values[i]);
    for (std::size_t j = 0; j <= n; ++j) {
      Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(C.rows(), C.cols());
      for (std::size_t i = 0; i < j; ++i) sum += powers[j - i] * sources[i] * powers[j - i].transpose();
      cur.times.push_back(static_cast<double>(j) * dt);
      cur.values.push_back(weight * sum);
    }
  }
  return terms;
}

LyapunovReport lyapunov_fit(const std::vector<double>& times, const std::vector<double>& values, int p,
                            std::optional<double> t_lo, std::optional<double> t_hi) {
  if (times.size() != values.size() || times.empty())
    throw Error(Errc::invalid_window, "series is empty or misaligned");
  const double hi = t_hi.value_or(times.back());
  const double lo = t_lo.value_or(0.5 * times.back());
  std::vector<double> x, y;
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (times[i] < lo - 1e-12 * std::abs(hi) || times[i] > hi + 1e-12 * std::abs(hi)) continue;
    if (!(values[i] > 0.0)) throw Error(Errc::invalid_window, "nonpositive moment inside the fit window");
    x.push_back(times[i]);
    y.push_back(std::log(values[i]));
  }
  if (x.size() < 5) throw Error(Errc::invalid_window, "Lyapunov fit needs >= 5 points in the window");
  const auto fit = least_squares(x, y);
  return {p, fit.slope, fit.intercept, fit.stderr_slope, lo, hi, fit.points};
}

ScalingReport scaling_check_gasket(int m, const CellWord& word, double alpha, double beta,
                                   BoundaryCondition bc, const std::vector<double>& t_grid, double dt) {
  const int n = static_cast<int>(word.size());
  if (n < 1) throw Error(Errc::invalid_configuration, "scaling check needs a word of length >= 1");
  if (m < 1) throw Error(Errc::invalid_configuration, "scaling check needs base level >= 1");
  if (t_grid.empty()) throw Error(Errc::invalid_configuration, "empty time grid");

  auto base = std::make_shared<const Space>(build_gasket(m));
  const Space ambient = build_gasket(m + n);
  auto cell = std::make_shared<const Space>(subcell_extract(ambient, word).cell);

  const auto base_spec = eigendecompose(assemble_laplacian(base, bc));
  const auto cell_spec = eigendecompose(assemble_laplacian(cell, bc));
  if (base_spec.active != cell_spec.active)
    throw Error(Errc::invalid_configuration, "cell and base active sets differ");

  const double time_scale = std::pow(5.0, n);
  const double mass_scale = std::pow(3.0, n);
  ScalingReport report;
  report.level = m;
  report.word = word;
  report.bc = bc;

  for (auto j = static_cast<Eigen::Index>(base_spec.first_positive()); j < base_spec.lambdas.size(); ++j) {
    report.eigenvalue_error = std::max(
        report.eigenvalue_error, std::abs(cell_spec.lambdas(j) / (time_scale * base_spec.lambdas(j)) - 1.0));
  }
  for (double t : t_grid) {
    const Eigen::MatrixXd reference = mass_scale * heat_kernel(base_spec, time_scale * t).values;
    const Eigen::MatrixXd scaled = heat_kernel(cell_spec, t).values;
    report.heat_kernel_error = std::max(report.heat_kernel_error,
                                        (scaled - reference).cwiseAbs().maxCoeff() / reference.cwiseAbs().maxCoeff());
  }

  const double t_max = *std::max_element(t_grid.begin(), t_grid.end());
  NoiseModel base_model = make_noise_model(base_spec, alpha, beta, 0);
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(base_spec.size()));
  const auto reference = second_moment_volterra(base_spec, base_model, ones, time_scale * t_max, time_scale * dt);

  report.beta_stated = beta * std::pow(std::pow(5.0, alpha + 0.5) / 3.0, n);
  report.beta_variance_matched = beta * std::pow(5.0, n * (alpha + 0.5)) / std::pow(3.0, 0.5 * n);
  auto discrepancy = [&](double cell_beta) {
    NoiseModel cell_model{alpha, cell_beta, bc, base_model.c_u * mass_scale * std::pow(5.0, -2.0 * n * alpha), 0};
    const auto field = second_moment_volterra(cell_spec, cell_model, ones, t_max, dt);
    double worst = 0.0;
    for (double t : t_grid) {
      const auto k = static_cast<std::size_t>(std::llround(t / dt));
      if (std::abs(static_cast<double>(k) * dt - t) > 1e-9 * t)
        throw Error(Errc::invalid_step, "time grid must be multiples of dt");
      const Eigen::ArrayXd ratio = field.diagonal(k).array() / reference.diagonal(k).array();
      worst = std::max(worst, (ratio - 1.0).abs().maxCoeff());
    }
    return worst;
  };
  report.moment_discrepancy = discrepancy(report.beta_stated);
  report.moment_discrepancy_matched = discrepancy(report.beta_variance_matched);
  return report;
}

}  // namespace pamlab
