#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "pamlab/noise.hpp"
#include "pamlab/rng.hpp"
#include "pamlab/space.hpp"
#include "pamlab/spectral.hpp"

namespace pamlab {

/// Continuous-time walk with generator M^-1 A on a space. Vertices outside
/// the alive set absorb the walk (Dirichlet killing); with every vertex alive
/// the walk is reflected at the boundary.
class WalkGenerator {
 public:
  WalkGenerator(const Space& space, std::vector<bool> alive);

  static WalkGenerator for_boundary(const Space& space, BoundaryCondition bc);
  /// Alive set = region minus the space boundary.
  static WalkGenerator for_region(const Space& space, const std::vector<std::size_t>& region);

  bool alive(std::size_t v) const { return alive_[v]; }
  /// Total jump rate sum_e c_e / mu(v) (the generator diagonal).
  double rate(std::size_t v) const { return rate_[v]; }
  std::size_t size() const noexcept { return rate_.size(); }

  /// One holding time and jump target out of `v`.
  std::pair<double, std::size_t> jump(std::size_t v, CounterRng& rng) const;

 private:
  const Space* space_;
  std::vector<bool> alive_;
  std::vector<double> rate_;
  std::vector<std::vector<double>> cumulative_;  // conductance prefix sums per vertex
};

struct WalkPath {
  std::vector<double> jump_times;      ///< jump_times[0] = 0
  std::vector<std::size_t> positions;  ///< position held from jump_times[i]
  std::optional<double> killed_at;

  /// Position at time s (the absorbing vertex after killing).
  std::size_t position_at(double s) const;
};

WalkPath simulate_walk(const WalkGenerator& gen, std::size_t x0, double T, std::uint64_t seed,
                       StreamId stream);
WalkPath simulate_walk(const Space& space, BoundaryCondition bc, std::size_t x0, double T,
                       std::uint64_t seed, StreamId stream);

/// Empirical law of the walk at time t: per space vertex, the fraction of
/// walks alive there, with standard errors.
struct OccupationEstimate {
  std::vector<double> probability;
  std::vector<double> stderr;
  double survival = 0.0;
  double survival_stderr = 0.0;
  std::size_t walks = 0;
};

OccupationEstimate walk_occupation(const Space& space, BoundaryCondition bc, std::size_t x0, double t,
                                   std::size_t walks, std::uint64_t seed);

struct FkEstimate {
  int p = 2;
  double value = 0.0;
  double stderr = 0.0;
  std::size_t trials = 0;
};

/// Feynman-Kac estimate of E[u(t,x)^p]: the mean over p independent walks
/// from x of prod_j u0(B^j_t) 1{t < T^j} exp(beta^2 sum_{i<k} int_0^t
/// G(B^i_s, B^k_s) ds), with G = G_{2 alpha} (+ c_u under Neumann) unless
/// `kernel` overrides it. u0 is indexed by active row. Walk j of trial i uses
/// the stream (walk, i, j), so estimates for different beta share paths.
FkEstimate fk_moment(const SpectralData& spec, const NoiseModel& model, const Eigen::VectorXd& u0, int p,
                     double t, std::size_t x, std::size_t trials,
                     const std::optional<Eigen::MatrixXd>& kernel = std::nullopt);

struct ExitTail {
  std::vector<double> times;
  std::vector<double> survival;
  std::vector<double> stderr;
  double lambda1 = 0.0;  ///< of the region's Dirichlet Laplacian
  SlopeFit fit;          ///< ln survival against t over the points with survival > 0
  std::size_t walks = 0;
};

/// Survival P(T_A > t) of the walk from x killed on leaving A.
ExitTail exit_time_tail(std::shared_ptr<const Space> space, const std::vector<std::size_t>& region,
                        std::size_t x, const std::vector<double>& t_grid, std::size_t walks,
                        std::uint64_t seed);

/// Vertices at geodesic distance < eps from x, excluding the space boundary.
std::vector<std::size_t> ball_region(const Space& space, std::size_t x, double eps);

}  // namespace pamlab
