#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace pamlab {

enum class SpaceKind { interval, metric_graph, gasket };

std::string_view to_string(SpaceKind kind) noexcept;

struct Point {
  double x = 0.0;
  double y = 0.0;
};

/// Undirected edge with its metric length and its conductance in the
/// Dirichlet form.
struct Edge {
  std::size_t a = 0;
  std::size_t b = 0;
  double length = 0.0;
  double conductance = 0.0;
};

/// Declared Hausdorff and walk dimensions of the continuum limit.
struct Dimensions {
  double hausdorff = 1.0;
  double walk = 2.0;

  double spectral() const noexcept { return 2.0 * hausdorff / walk; }
};

/// Letters over {1,2,3}; the map f_w = f_{w[0]} o ... o f_{w[n-1]}.
using CellWord = std::vector<int>;

/// Lattice position in units of the finest edge length: the point is
/// a*e1 + b*e2 with e1 = (1,0), e2 = (1/2, sqrt(3)/2).
using LatticePoint = std::array<std::int64_t, 2>;

/// Self-similar structure of a gasket or gasket cell.
struct GasketStructure {
  int level = 0;           ///< intrinsic level m (the cell is a copy of V_m)
  CellWord word;           ///< embedding word; empty for the full gasket
  std::vector<LatticePoint> lattice;  ///< per vertex, units of 2^-(m+|word|)
};

/// Discrete metric measure space. Immutable after construction and safe to
/// share across threads.
class Space {
 public:
  Space(SpaceKind kind, Dimensions dims, std::vector<Point> coords, std::vector<double> mu,
        std::vector<Edge> edges, std::vector<std::size_t> boundary,
        std::optional<GasketStructure> gasket = std::nullopt);

  SpaceKind kind() const noexcept { return kind_; }
  Dimensions dims() const noexcept { return dims_; }
  std::size_t size() const noexcept { return mu_.size(); }

  const std::vector<Point>& coords() const noexcept { return coords_; }
  const std::vector<double>& mu() const noexcept { return mu_; }
  const std::vector<Edge>& edges() const noexcept { return edges_; }
  /// Sorted vertex ids.
  const std::vector<std::size_t>& boundary() const noexcept { return boundary_; }
  bool is_boundary(std::size_t v) const noexcept { return on_boundary_[v]; }
  const std::optional<GasketStructure>& gasket() const noexcept { return gasket_; }

  /// (neighbour, edge index) pairs per vertex.
  const std::vector<std::pair<std::size_t, std::size_t>>& neighbours(std::size_t v) const {
    return adjacency_[v];
  }

  double total_mass() const noexcept;
  /// Longest edge.
  double mesh() const noexcept;
  bool connected() const;

  /// Geodesic distances along edges from `source` (Dijkstra).
  std::vector<double> distances_from(std::size_t source) const;
  double distance(std::size_t a, std::size_t b) const;
  /// Largest eccentricity among the boundary vertices and vertex 0. Exact
  /// for the interval and the gasket family, a lower bound in general.
  double diameter_estimate() const;

  /// Vertex id of a gasket lattice point, if present.
  std::optional<std::size_t> find_lattice(const LatticePoint& p) const;

 private:
  SpaceKind kind_;
  Dimensions dims_;
  std::vector<Point> coords_;
  std::vector<double> mu_;
  std::vector<Edge> edges_;
  std::vector<std::size_t> boundary_;
  std::vector<bool> on_boundary_;
  std::vector<std::vector<std::pair<std::size_t, std::size_t>>> adjacency_;
  std::optional<GasketStructure> gasket_;
};

/// Uniform grid of n segments on [0, length] with trapezoid vertex weights.
Space build_interval(int n, double length = 1.0);

/// Level-m pre-gasket V_m with edge conductance (5/3)^m and each level-m
/// cell's mass 3^-m split equally among its three corners. Vertices are
/// ordered by their lexicographically smallest cell address.
Space build_gasket(int m);

struct GraphEdge {
  std::size_t u = 0;
  std::size_t v = 0;
  double length = 0.0;
};

struct MetricGraphSpec {
  std::size_t node_count = 0;
  std::vector<GraphEdge> edges;
  std::vector<std::size_t> boundary_nodes;  ///< must have degree 1
  std::vector<Point> node_coords;           ///< optional embedding
};

/// Subdivides every edge into ceil(length/h) equal segments. Original nodes
/// keep their ids; subdivision points follow, edge by edge.
Space build_metric_graph(const MetricGraphSpec& spec, double h);

/// A level-m cell f_w(K) cut out of a level-(m+|w|) gasket.
struct SubCell {
  Space cell;                       ///< vertex i corresponds to Gasket(m) vertex i
  std::vector<std::size_t> ambient;  ///< vertex i -> id in the ambient gasket
  int level = 0;                    ///< m
};

SubCell subcell_extract(const Space& gasket, const CellWord& word);

/// Image of a level-m lattice point under f_w, in level-(m+|w|) units.
LatticePoint apply_word(const CellWord& word, int m, const LatticePoint& p);

struct AhlforsBand {
  double c1 = 0.0;
  double c2 = 0.0;
  std::size_t samples = 0;

  double ratio() const noexcept { return c2 / c1; }
};

/// Range of mu(B(x,r)) / r^d_h over `samples` pairs with x uniform over
/// vertices and r log-uniform in [mesh, diameter].
AhlforsBand ahlfors_band(const Space& space, std::size_t samples, std::uint64_t seed);

std::string space_to_json(const Space& space);
Space space_from_json(std::string_view text);

}  // namespace pamlab
