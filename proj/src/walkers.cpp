#include "pamlab/walkers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "pamlab/error.hpp"
#include "pamlab/parallel.hpp"

namespace pamlab {

namespace {

constexpr std::size_t kChunk = 256;

/// Runs body(i) for every i in [0, n) in fixed chunks across the workers.
template <class Body>
void for_each_trial(std::size_t n, Body&& body) {
  const std::size_t chunks = (n + kChunk - 1) / kChunk;
  parallel_for(chunks, [&](std::size_t c) {
    const std::size_t end = std::min(n, (c + 1) * kChunk);
    for (std::size_t i = c * kChunk; i < end; ++i) body(i);
  });
}

std::pair<double, double> mean_and_stderr(const std::vector<double>& values) {
  double mean = 0.0;
  double m2 = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double delta = values[i] - mean;
    mean += delta / static_cast<double>(i + 1);
    m2 += delta * (values[i] - mean);
  }
  const double n = static_cast<double>(values.size());
  return {mean, n > 1 ? std::sqrt(m2 / (n - 1.0) / n) : 0.0};
}

}  // namespace

WalkGenerator::WalkGenerator(const Space& space, std::vector<bool> alive)
    : space_(&space), alive_(std::move(alive)), rate_(space.size(), 0.0), cumulative_(space.size()) {
  if (alive_.size() != space.size()) throw Error(Errc::invalid_region, "alive mask size differs from the space");
  for (std::size_t v = 0; v < space.size(); ++v) {
    double sum = 0.0;
    for (const auto& [w, e] : space.neighbours(v)) {
      sum += space.edges()[e].conductance;
      cumulative_[v].push_back(sum);
    }
    rate_[v] = sum / space.mu()[v];
  }
}

WalkGenerator WalkGenerator::for_boundary(const Space& space, BoundaryCondition bc) {
  std::vector<bool> alive(space.size(), true);
  if (bc == BoundaryCondition::dirichlet) {
    if (space.boundary().empty()) throw Error(Errc::missing_boundary, "Dirichlet walk needs a boundary");
    for (std::size_t b : space.boundary()) alive[b] = false;
  }
  return WalkGenerator(space, std::move(alive));
}

WalkGenerator WalkGenerator::for_region(const Space& space, const std::vector<std::size_t>& region) {
  std::vector<bool> alive(space.size(), false);
  bool any = false;
  for (std::size_t v : region) {
    if (v >= space.size()) throw Error(Errc::invalid_region, "region vertex out of range");
    if (!space.is_boundary(v)) alive[v] = any = true;
  }
  if (!any) throw Error(Errc::invalid_region, "region has no interior vertices");
  return WalkGenerator(space, std::move(alive));
}

std::pair<double, std::size_t> WalkGenerator::jump(std::size_t v, CounterRng& rng) const {
  const auto& cum = cumulative_[v];
  if (cum.empty()) return {std::numeric_limits<double>::infinity(), v};
  const double holding = rng.exponential() / rate_[v];
  const double target = rng.uniform() * cum.back();
  const auto it = std::upper_bound(cum.begin(), cum.end(), target);
  const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(it - cum.begin()), cum.size() - 1);
  return {holding, space_->neighbours(v)[k].first};
}

std::size_t WalkPath::position_at(double s) const {
  const auto it = std::upper_bound(jump_times.begin(), jump_times.end(), s);
  return positions[static_cast<std::size_t>(it - jump_times.begin()) - 1];
}

WalkPath simulate_walk(const WalkGenerator& gen, std::size_t x0, double T, std::uint64_t seed,
                       StreamId stream) {
  if (x0 >= gen.size() || !gen.alive(x0)) throw Error(Errc::invalid_region, "walk must start at an active vertex");
  if (!(T >= 0.0)) throw Error(Errc::invalid_time, "walk horizon must be >= 0");
  CounterRng rng(seed, stream);
  WalkPath path{{0.0}, {x0}, std::nullopt};
  double t = 0.0;
  std::size_t pos = x0;
  for (;;) {
    const auto [holding, next] = gen.jump(pos, rng);
    t += holding;
    if (!(t < T)) break;
    pos = next;
    path.jump_times.push_back(t);
    path.positions.push_back(pos);
    if (!gen.alive(pos)) {
      path.killed_at = t;
      break;
    }
  }
  return path;
}

WalkPath simulate_walk(const Space& space, BoundaryCondition bc, std::size_t x0, double T,
                       std::uint64_t seed, StreamId stream) {
  return simulate_walk(WalkGenerator::for_boundary(space, bc), x0, T, seed, stream);
}

OccupationEstimate walk_occupation(const Space& space, BoundaryCondition bc, std::size_t x0, double t,
                                   std::size_t walks, std::uint64_t seed) {
  if (walks < 2) throw Error(Errc::insufficient_samples, "occupation needs >= 2 walks");
  const auto gen = WalkGenerator::for_boundary(space, bc);
  std::vector<std::size_t> final_pos(walks);
  std::vector<char> survived(walks);
  for_each_trial(walks, [&](std::size_t i) {
    const auto path = simulate_walk(gen, x0, t, seed, {StreamDomain::walk, static_cast<std::uint32_t>(i), 0});
    final_pos[i] = path.positions.back();
    survived[i] = !path.killed_at;
  });
  OccupationEstimate out;
  out.walks = walks;
  out.probability.assign(space.size(), 0.0);
  std::size_t alive = 0;
  for (std::size_t i = 0; i < walks; ++i) {
    if (!survived[i]) continue;
    out.probability[final_pos[i]] += 1.0;
    ++alive;
  }
  const double n = static_cast<double>(walks);
  out.stderr.resize(space.size());
  for (std::size_t v = 0; v < space.size(); ++v) {
    const double p = out.probability[v] /= n;
    out.stderr[v] = std::sqrt(p * (1.0 - p) / n);
  }
  out.survival = static_cast<double>(alive) / n;
  out.survival_stderr = std::sqrt(out.survival * (1.0 - out.survival) / n);
  return out;
}

FkEstimate fk_moment(const SpectralData& spec, const NoiseModel& model, const Eigen::VectorXd& u0, int p,
                     double t, std::size_t x, std::size_t trials, const std::optional<Eigen::MatrixXd>& kernel) {
  if (model.alpha == 0.0)
    throw Error(Errc::unsupported_regime, "Feynman-Kac moments need alpha > 0 (no intersection local time)");
  validate(model, spec);
  if (p < 2) throw Error(Errc::invalid_configuration, "moment order p must be >= 2");
  if (!(t > 0.0)) throw Error(Errc::invalid_time, "t must be positive");
  if (trials < 2) throw Error(Errc::insufficient_samples, "Feynman-Kac needs >= 2 trials");
  if (u0.size() != static_cast<Eigen::Index>(spec.size())) throw Error(Errc::invalid_field, "u0 size differs");
  const Space& space = *spec.space;
  if (x >= space.size() || !spec.row_of(x)) throw Error(Errc::invalid_region, "x must be an active vertex");
  const Eigen::MatrixXd G = kernel ? *kernel : noise_covariance(spec, model);
  if (G.rows() != u0.size() || G.cols() != u0.size()) throw Error(Errc::invalid_field, "kernel size differs");

  std::vector<std::ptrdiff_t> row(space.size(), -1);
  for (std::size_t r = 0; r < spec.active.size(); ++r) row[spec.active[r]] = static_cast<std::ptrdiff_t>(r);
  const auto gen = WalkGenerator::for_boundary(space, spec.bc);
  const double beta2 = model.beta * model.beta;
  const auto np = static_cast<std::size_t>(p);

  std::vector<double> values(trials);
  for_each_trial(trials, [&](std::size_t i) {
    std::vector<WalkPath> paths;
    paths.reserve(np);
    for (std::size_t j = 0; j < np; ++j) {
      paths.push_back(simulate_walk(gen, x, t, model.seed,
                                    {StreamDomain::walk, static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j)}));
      if (paths.back().killed_at) {
        values[i] = 0.0;
        return;
      }
    }
    double product = 1.0;
    for (const auto& path : paths) product *= u0(row[path.positions.back()]);
    std::vector<std::size_t> idx(np, 0);
    double s = 0.0;
    double integral = 0.0;
    while (s < t) {
      double next = t;
      for (std::size_t j = 0; j < np; ++j) {
        if (idx[j] + 1 < paths[j].jump_times.size()) next = std::min(next, paths[j].jump_times[idx[j] + 1]);
      }
      double pair_sum = 0.0;
      for (std::size_t a = 0; a < np; ++a) {
        for (std::size_t b = a + 1; b < np; ++b)
          pair_sum += G(row[paths[a].positions[idx[a]]], row[paths[b].positions[idx[b]]]);
      }
      integral += (next - s) * pair_sum;
      s = next;
      for (std::size_t j = 0; j < np; ++j) {
        if (idx[j] + 1 < paths[j].jump_times.size() && paths[j].jump_times[idx[j] + 1] <= s) ++idx[j];
      }
    }
    values[i] = product * std::exp(beta2 * integral);
  });
  const auto [mean, se] = mean_and_stderr(values);
  return {p, mean, se, trials};
}

ExitTail exit_time_tail(std::shared_ptr<const Space> space, const std::vector<std::size_t>& region,
                        std::size_t x, const std::vector<double>& t_grid, std::size_t walks, std::uint64_t seed) {
  if (region.empty()) throw Error(Errc::invalid_region, "empty region");
  if (std::find(region.begin(), region.end(), x) == region.end() || space->is_boundary(x))
    throw Error(Errc::invalid_region, "x must lie in the region");
  if (t_grid.empty() || !std::is_sorted(t_grid.begin(), t_grid.end()) || !(t_grid.front() > 0.0))
    throw Error(Errc::invalid_time, "time grid must be positive and increasing");
  if (walks < 2) throw Error(Errc::insufficient_samples, "exit-time tail needs >= 2 walks");
  const auto gen = WalkGenerator::for_region(*space, region);
  const double horizon = t_grid.back();
  std::vector<double> exit_time(walks);
  for_each_trial(walks, [&](std::size_t i) {
    const auto path = simulate_walk(gen, x, horizon, seed, {StreamDomain::walk, static_cast<std::uint32_t>(i), 0});
    exit_time[i] = path.killed_at.value_or(std::numeric_limits<double>::infinity());
  });
  std::sort(exit_time.begin(), exit_time.end());

  ExitTail out;
  out.walks = walks;
  out.times = t_grid;
  const double n = static_cast<double>(walks);
  std::vector<double> fx, fy;
  for (double t : t_grid) {
    const auto alive = exit_time.end() - std::upper_bound(exit_time.begin(), exit_time.end(), t);
    const double s = static_cast<double>(alive) / n;
    out.survival.push_back(s);
    out.stderr.push_back(std::sqrt(s * (1.0 - s) / n));
    if (s > 0.0) {
      fx.push_back(t);
      fy.push_back(std::log(s));
    }
  }
  out.fit = least_squares(fx, fy);
  out.lambda1 = eigendecompose(assemble_region_laplacian(std::move(space), region)).lambda1();
  return out;
}

std::vector<std::size_t> ball_region(const Space& space, std::size_t x, double eps) {
  if (x >= space.size()) throw Error(Errc::invalid_region, "ball centre out of range");
  const auto d = space.distances_from(x);
  std::vector<std::size_t> ball;
  for (std::size_t v = 0; v < space.size(); ++v) {
    if (d[v] < eps && !space.is_boundary(v)) ball.push_back(v);
  }
  if (ball.empty()) throw Error(Errc::invalid_region, "ball contains no interior vertex");
  return ball;
}

}  // namespace pamlab
