#include "pamlab/space.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <queue>

#include <json.hpp>

#include "pamlab/error.hpp"
#include "pamlab/rng.hpp"

namespace pamlab {

namespace {

constexpr std::array<LatticePoint, 3> kCorners{{{0, 0}, {1, 0}, {0, 1}}};

Dimensions gasket_dims() { return {std::log(3.0) / std::log(2.0), std::log(5.0) / std::log(2.0)}; }

Point lattice_to_point(const LatticePoint& p, int level) {
  const double scale = std::ldexp(1.0, -level);
  return {(static_cast<double>(p[0]) + 0.5 * static_cast<double>(p[1])) * scale,
          static_cast<double>(p[1]) * (std::sqrt(3.0) / 2.0) * scale};
}

struct GasketSkeleton {
  std::vector<LatticePoint> lattice;
  std::vector<std::array<std::size_t, 3>> cells;
};

GasketSkeleton gasket_skeleton(int m) {
  GasketSkeleton g;
  g.lattice.assign(kCorners.begin(), kCorners.end());
  g.cells.push_back({0, 1, 2});
  for (int lev = 1; lev <= m; ++lev) {
    const std::int64_t shift = std::int64_t{1} << (lev - 1);
    GasketSkeleton next;
    std::map<LatticePoint, std::size_t> index;
    std::vector<std::size_t> image(g.lattice.size());
    for (const auto& corner : kCorners) {
      for (std::size_t v = 0; v < g.lattice.size(); ++v) {
        const LatticePoint p{g.lattice[v][0] + shift * corner[0], g.lattice[v][1] + shift * corner[1]};
        auto [it, inserted] = index.try_emplace(p, next.lattice.size());
        if (inserted) next.lattice.push_back(p);
        image[v] = it->second;
      }
      for (const auto& c : g.cells) next.cells.push_back({image[c[0]], image[c[1]], image[c[2]]});
    }
    g = std::move(next);
  }
  return g;
}

}  // namespace

std::string_view to_string(SpaceKind kind) noexcept {
  switch (kind) {
    case SpaceKind::interval: return "interval";
    case SpaceKind::metric_graph: return "graph";
    case SpaceKind::gasket: return "gasket";
  }
  return "unknown";
}

Space::Space(SpaceKind kind, Dimensions dims, std::vector<Point> coords, std::vector<double> mu,
             std::vector<Edge> edges, std::vector<std::size_t> boundary,
             std::optional<GasketStructure> gasket)
    : kind_(kind),
      dims_(dims),
      coords_(std::move(coords)),
      mu_(std::move(mu)),
      edges_(std::move(edges)),
      boundary_(std::move(boundary)),
      gasket_(std::move(gasket)) {
  const std::size_t n = mu_.size();
  if (n == 0) throw Error(Errc::invalid_grid, "space has no vertices");
  if (coords_.size() != n) throw Error(Errc::invalid_grid, "coordinate count differs from vertex count");
  for (double m : mu_) {
    if (!(m > 0.0)) throw Error(Errc::invalid_grid, "vertex measure must be positive");
  }
  std::sort(boundary_.begin(), boundary_.end());
  boundary_.erase(std::unique(boundary_.begin(), boundary_.end()), boundary_.end());
  on_boundary_.assign(n, false);
  for (auto b : boundary_) {
    if (b >= n) throw Error(Errc::invalid_grid, "boundary vertex out of range");
    on_boundary_[b] = true;
  }
  adjacency_.resize(n);
  for (std::size_t e = 0; e < edges_.size(); ++e) {
    const auto& ed = edges_[e];
    if (ed.a >= n || ed.b >= n || ed.a == ed.b)
      throw Error(Errc::invalid_graph, "edge endpoints invalid");
    if (!(ed.length > 0.0) || !(ed.conductance > 0.0))
      throw Error(Errc::invalid_graph, "edge length and conductance must be positive");
    adjacency_[ed.a].emplace_back(ed.b, e);
    adjacency_[ed.b].emplace_back(ed.a, e);
  }
}

double Space::total_mass() const noexcept {
  // Pairwise summation keeps the 1e-12 relative mass check meaningful at
  // large vertex counts.
  std::function<double(std::size_t, std::size_t)> sum = [&](std::size_t lo, std::size_t hi) {
    if (hi - lo <= 16) return std::accumulate(mu_.begin() + lo, mu_.begin() + hi, 0.0);
    const std::size_t mid = lo + (hi - lo) / 2;
    return sum(lo, mid) + sum(mid, hi);
  };
  return sum(0, mu_.size());
}

double Space::mesh() const noexcept {
  double h = 0.0;
  for (const auto& e : edges_) h = std::max(h, e.length);
  return h;
}

bool Space::connected() const {
  std::vector<bool> seen(size(), false);
  std::vector<std::size_t> stack{0};
  seen[0] = true;
  std::size_t count = 1;
  while (!stack.empty()) {
    const auto v = stack.back();
    stack.pop_back();
    for (const auto& [w, e] : adjacency_[v]) {
      if (!seen[w]) {
        seen[w] = true;
        ++count;
        stack.push_back(w);
      }
    }
  }
  return count == size();
}

std::vector<double> Space::distances_from(std::size_t source) const {
  std::vector<double> dist(size(), std::numeric_limits<double>::infinity());
  using Item = std::pair<double, std::size_t>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> queue;
  dist[source] = 0.0;
  queue.emplace(0.0, source);
  while (!queue.empty()) {
    const auto [d, v] = queue.top();
    queue.pop();
    if (d > dist[v]) continue;
    for (const auto& [w, e] : adjacency_[v]) {
      const double nd = d + edges_[e].length;
      if (nd < dist[w]) {
        dist[w] = nd;
        queue.emplace(nd, w);
      }
    }
  }
  return dist;
}

double Space::distance(std::size_t a, std::size_t b) const { return distances_from(a)[b]; }

double Space::diameter_estimate() const {
  std::vector<std::size_t> sources = boundary_;
  sources.push_back(0);
  double diam = 0.0;
  for (auto s : sources) {
    for (double d : distances_from(s)) {
      if (std::isfinite(d)) diam = std::max(diam, d);
    }
  }
  return diam;
}

std::optional<std::size_t> Space::find_lattice(const LatticePoint& p) const {
  if (!gasket_) return std::nullopt;
  const auto& lat = gasket_->lattice;
  for (std::size_t i = 0; i < lat.size(); ++i) {
    if (lat[i] == p) return i;
  }
  return std::nullopt;
}

Space build_interval(int n, double length) {
  if (n < 2) throw Error(Errc::invalid_grid, "interval needs at least 2 segments");
  if (!(length > 0.0)) throw Error(Errc::invalid_grid, "interval length must be positive");
  const double h = length / n;
  std::vector<Point> coords(n + 1);
  std::vector<double> mu(n + 1, h);
  std::vector<Edge> edges;
  edges.reserve(n);
  for (int i = 0; i <= n; ++i) coords[i] = {i * h, 0.0};
  coords[n].x = length;
  mu.front() = mu.back() = h / 2.0;
  for (int i = 0; i < n; ++i)
    edges.push_back({static_cast<std::size_t>(i), static_cast<std::size_t>(i + 1), h, 1.0 / h});
  return Space(SpaceKind::interval, {1.0, 2.0}, std::move(coords), std::move(mu), std::move(edges),
               {0, static_cast<std::size_t>(n)});
}

Space build_gasket(int m) {
  if (m < 0) throw Error(Errc::invalid_grid, "gasket level must be non-negative");
  if (m > 12) throw Error(Errc::size_limit, "gasket level above 12");
  auto skel = gasket_skeleton(m);
  const std::size_t n = skel.lattice.size();
  const double cell_mass = std::pow(3.0, -m);
  const double length = std::ldexp(1.0, -m);
  const double conductance = std::pow(5.0 / 3.0, m);
  std::vector<Point> coords(n);
  for (std::size_t i = 0; i < n; ++i) coords[i] = lattice_to_point(skel.lattice[i], m);
  std::vector<double> mu(n, 0.0);
  std::vector<Edge> edges;
  edges.reserve(3 * skel.cells.size());
  for (const auto& c : skel.cells) {
    for (auto v : c) mu[v] += cell_mass / 3.0;
    edges.push_back({c[0], c[1], length, conductance});
    edges.push_back({c[1], c[2], length, conductance});
    edges.push_back({c[0], c[2], length, conductance});
  }
  const std::int64_t side = std::int64_t{1} << m;
  std::vector<std::size_t> boundary;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& p = skel.lattice[i];
    if ((p[0] == 0 && p[1] == 0) || (p[0] == side && p[1] == 0) || (p[0] == 0 && p[1] == side))
      boundary.push_back(i);
  }
  return Space(SpaceKind::gasket, gasket_dims(), std::move(coords), std::move(mu), std::move(edges),
               std::move(boundary), GasketStructure{m, {}, std::move(skel.lattice)});
}

Space build_metric_graph(const MetricGraphSpec& spec, double h) {
  if (!(h > 0.0)) throw Error(Errc::invalid_grid, "mesh size must be positive");
  if (spec.node_count == 0 || spec.edges.empty()) throw Error(Errc::invalid_graph, "graph is empty");
  if (!spec.node_coords.empty() && spec.node_coords.size() != spec.node_count)
    throw Error(Errc::invalid_graph, "node coordinate count differs from node count");

  std::vector<std::size_t> degree(spec.node_count, 0);
  for (const auto& e : spec.edges) {
    if (e.u >= spec.node_count || e.v >= spec.node_count || e.u == e.v)
      throw Error(Errc::invalid_graph, "edge endpoints invalid");
    if (!(e.length > 0.0)) throw Error(Errc::invalid_graph, "edge length must be positive");
    ++degree[e.u];
    ++degree[e.v];
  }
  for (auto b : spec.boundary_nodes) {
    if (b >= spec.node_count || degree[b] != 1)
      throw Error(Errc::invalid_graph, "boundary nodes must exist and have degree 1");
  }

  std::vector<Point> coords(spec.node_count);
  if (!spec.node_coords.empty()) coords = spec.node_coords;
  std::vector<double> mu(spec.node_count, 0.0);
  std::vector<Edge> edges;
  for (const auto& e : spec.edges) {
    const auto segments = static_cast<std::size_t>(std::ceil(e.length / h - 1e-12));
    if (segments < 2) throw Error(Errc::invalid_grid, "mesh leaves an edge with fewer than 2 segments");
    const double seg = e.length / static_cast<double>(segments);
    std::size_t prev = e.u;
    for (std::size_t k = 1; k <= segments; ++k) {
      std::size_t cur = e.v;
      if (k < segments) {
        cur = coords.size();
        const double s = static_cast<double>(k) / static_cast<double>(segments);
        coords.push_back({coords[e.u].x + s * (coords[e.v].x - coords[e.u].x),
                          coords[e.u].y + s * (coords[e.v].y - coords[e.u].y)});
        mu.push_back(0.0);
      }
      edges.push_back({prev, cur, seg, 1.0 / seg});
      mu[prev] += seg / 2.0;
      mu[cur] += seg / 2.0;
      prev = cur;
    }
  }
  Space space(SpaceKind::metric_graph, {1.0, 2.0}, std::move(coords), std::move(mu), std::move(edges),
              spec.boundary_nodes);
  if (!space.connected()) throw Error(Errc::invalid_graph, "graph is disconnected");
  return space;
}

LatticePoint apply_word(const CellWord& word, int m, const LatticePoint& p) {
  const int n = static_cast<int>(word.size());
  LatticePoint out = p;
  for (int k = 1; k <= n; ++k) {
    const auto& corner = kCorners[static_cast<std::size_t>(word[k - 1] - 1)];
    const std::int64_t scale = std::int64_t{1} << (m + n - k);
    out[0] += scale * corner[0];
    out[1] += scale * corner[1];
  }
  return out;
}

SubCell subcell_extract(const Space& gasket, const CellWord& word) {
  const auto& g = gasket.gasket();
  if (gasket.kind() != SpaceKind::gasket || !g || !g->word.empty())
    throw Error(Errc::invalid_configuration, "subcell extraction needs a full gasket");
  for (int letter : word) {
    if (letter < 1 || letter > 3) throw Error(Errc::invalid_word, "cell word letters must be 1, 2 or 3");
  }
  const int total = g->level;
  const int n = static_cast<int>(word.size());
  if (n > total) throw Error(Errc::invalid_word, "cell word longer than the gasket level");
  const int m = total - n;

  const Space base = build_gasket(m);
  std::map<LatticePoint, std::size_t> ambient_index;
  for (std::size_t i = 0; i < g->lattice.size(); ++i) ambient_index.emplace(g->lattice[i], i);

  const auto& base_lattice = base.gasket()->lattice;
  std::vector<std::size_t> ambient(base.size());
  std::vector<LatticePoint> lattice(base.size());
  std::vector<Point> coords(base.size());
  for (std::size_t i = 0; i < base.size(); ++i) {
    lattice[i] = apply_word(word, m, base_lattice[i]);
    ambient[i] = ambient_index.at(lattice[i]);
    coords[i] = gasket.coords()[ambient[i]];
  }
  const double mass_scale = std::pow(3.0, -n);
  std::vector<double> mu = base.mu();
  for (auto& v : mu) v *= mass_scale;
  const double length = std::ldexp(1.0, -total);
  const double conductance = std::pow(5.0 / 3.0, total);
  std::vector<Edge> edges = base.edges();
  for (auto& e : edges) {
    e.length = length;
    e.conductance = conductance;
  }
  Space cell(SpaceKind::gasket, gasket_dims(), std::move(coords), std::move(mu), std::move(edges),
             base.boundary(), GasketStructure{m, word, std::move(lattice)});
  return SubCell{std::move(cell), std::move(ambient), m};
}

AhlforsBand ahlfors_band(const Space& space, std::size_t samples, std::uint64_t seed) {
  const double r_min = space.mesh();
  const double r_max = space.diameter_estimate();
  const double dh = space.dims().hausdorff;
  CounterRng rng(seed, {StreamDomain::sample, 0, 0});
  AhlforsBand band{std::numeric_limits<double>::infinity(), 0.0, samples};
  std::map<std::size_t, std::vector<double>> cache;
  for (std::size_t s = 0; s < samples; ++s) {
    const auto x = std::min(space.size() - 1, static_cast<std::size_t>(rng.uniform() * space.size()));
    const double r = r_min * std::pow(r_max / r_min, rng.uniform());
    auto it = cache.find(x);
    if (it == cache.end()) it = cache.emplace(x, space.distances_from(x)).first;
    double mass = 0.0;
    for (std::size_t y = 0; y < space.size(); ++y) {
      if (it->second[y] <= r * (1.0 + 1e-12)) mass += space.mu()[y];
    }
    const double ratio = mass / std::pow(r, dh);
    band.c1 = std::min(band.c1, ratio);
    band.c2 = std::max(band.c2, ratio);
  }
  return band;
}

std::string space_to_json(const Space& space) {
  nlohmann::ordered_json j;
  j["kind"] = to_string(space.kind());
  j["dims"] = {{"hausdorff", space.dims().hausdorff}, {"walk", space.dims().walk}};
  if (const auto& g = space.gasket()) {
    j["gasket"] = {{"level", g->level}, {"word", g->word}};
  }
  auto& verts = j["vertices"] = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < space.size(); ++i) {
    nlohmann::ordered_json v;
    v["id"] = i;
    v["x"] = space.coords()[i].x;
    v["y"] = space.coords()[i].y;
    v["mu"] = space.mu()[i];
    if (const auto& g = space.gasket()) v["lattice"] = g->lattice[i];
    verts.push_back(std::move(v));
  }
  auto& edges = j["edges"] = nlohmann::ordered_json::array();
  for (const auto& e : space.edges()) edges.push_back({e.a, e.b, e.length, e.conductance});
  j["boundary"] = space.boundary();
  return j.dump(1);
}

Space space_from_json(std::string_view text) {
  try {
    const auto j = nlohmann::json::parse(text);
    const auto kind_name = j.at("kind").get<std::string>();
    SpaceKind kind = SpaceKind::interval;
    if (kind_name == "gasket") kind = SpaceKind::gasket;
    else if (kind_name == "graph") kind = SpaceKind::metric_graph;
    else if (kind_name != "interval") throw Error(Errc::invalid_config, "unknown space kind " + kind_name);
    Dimensions dims{j.at("dims").at("hausdorff").get<double>(), j.at("dims").at("walk").get<double>()};
    std::vector<Point> coords;
    std::vector<double> mu;
    std::vector<LatticePoint> lattice;
    for (const auto& v : j.at("vertices")) {
      coords.push_back({v.at("x").get<double>(), v.at("y").get<double>()});
      mu.push_back(v.at("mu").get<double>());
      if (v.contains("lattice")) lattice.push_back(v.at("lattice").get<LatticePoint>());
    }
    std::vector<Edge> edges;
    for (const auto& e : j.at("edges")) {
      edges.push_back({e.at(0).get<std::size_t>(), e.at(1).get<std::size_t>(), e.at(2).get<double>(),
                       e.at(3).get<double>()});
    }
    std::optional<GasketStructure> gasket;
    if (j.contains("gasket")) {
      gasket = GasketStructure{j["gasket"].at("level").get<int>(), j["gasket"].at("word").get<CellWord>(),
                               std::move(lattice)};
    }
    return Space(kind, dims, std::move(coords), std::move(mu), std::move(edges),
                 j.at("boundary").get<std::vector<std::size_t>>(), std::move(gasket));
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::invalid_config, std::string("malformed space file: ") + e.what());
  }
}

}  // namespace pamlab
