#include "pamlab/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <set>
#include <sstream>

#include <json.hpp>

#include "pamlab/noise.hpp"
#include "pamlab/pam.hpp"
#include "pamlab/spectral.hpp"
#include "pamlab/theory.hpp"
#include "pamlab/walkers.hpp"

namespace pamlab {

namespace {

/// Shortest text that round-trips to the same double.
std::string fmt(double v) {
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = s.find(sep, start);
    out.push_back(std::string(s.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) return out;
    start = pos + 1;
  }
}

[[noreturn]] void config_error(const std::string& field, const std::string& what) {
  throw Error(Errc::invalid_config, field + ": " + what);
}

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys{"space", "level", "mesh", "graph", "bc", "alpha", "beta",
                                          "dt", "T", "trials", "probe", "seed", "out", "p",
                                          "t", "x", "word", "times", "record_every", "tolerance", "u0"};
  return keys;
}

const std::string& single(const std::string& key, const std::vector<std::string>& values) {
  if (values.size() != 1) config_error(key, "expects exactly one value");
  return values.front();
}

double to_double(const std::string& key, const std::string& text) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used == text.size() && std::isfinite(v)) return v;
  } catch (const std::exception&) {
  }
  config_error(key, "'" + text + "' is not a finite number");
}

long long to_integer(const std::string& key, const std::string& text, long long lo) {
  try {
    std::size_t used = 0;
    const long long v = std::stoll(text, &used);
    if (used == text.size() && v >= lo) return v;
  } catch (const std::exception&) {
  }
  config_error(key, "'" + text + "' is not an integer >= " + std::to_string(lo));
}

BoundaryCondition parse_bc(const std::string& bc) {
  if (bc == "dirichlet") return BoundaryCondition::dirichlet;
  if (bc == "neumann") return BoundaryCondition::neumann;
  config_error("bc", "expected dirichlet or neumann, got '" + bc + "'");
}

CellWord parse_word(const std::string& word) {
  CellWord w;
  for (char c : word) {
    if (c < '1' || c > '3') config_error("word", "letters must be 1, 2 or 3");
    w.push_back(c - '0');
  }
  if (w.empty()) config_error("word", "must be nonempty");
  return w;
}

MetricGraphSpec star_graph() {
  MetricGraphSpec g;
  g.node_count = 4;
  g.node_coords.push_back({0.0, 0.0});
  for (std::size_t k = 1; k <= 3; ++k) {
    const double angle = 2.0 * std::numbers::pi * static_cast<double>(k - 1) / 3.0;
    g.edges.push_back({0, k, 1.0});
    g.boundary_nodes.push_back(k);
    g.node_coords.push_back({std::cos(angle), std::sin(angle)});
  }
  return g;
}

MetricGraphSpec load_graph(const std::string& path) {
  std::ifstream in(path);
  if (!in) config_error("graph", "cannot read '" + path + "'");
  try {
    const auto j = nlohmann::json::parse(in);
    MetricGraphSpec g;
    g.node_count = j.at("nodes").get<std::size_t>();
    for (const auto& e : j.at("edges")) g.edges.push_back({e.at(0), e.at(1), e.at(2)});
    if (j.contains("boundary")) g.boundary_nodes = j["boundary"].get<std::vector<std::size_t>>();
    if (j.contains("coords")) {
      for (const auto& c : j["coords"]) g.node_coords.push_back({c.at(0), c.at(1)});
    }
    return g;
  } catch (const nlohmann::json::exception& e) {
    config_error("graph", e.what());
  }
}

struct Manifest {
  std::string pipeline;
  const ExperimentConfig* config = nullptr;
  std::optional<double> c_u;
  std::vector<std::pair<std::string, std::string>> extra;

  std::string text() const {
    std::string s = "# pamlab " + std::string(kVersion) + "\n# pipeline: " + pipeline + "\n";
    s += "# seed: " + std::to_string(config->seed) + "\n";
    s += "# dt: " + fmt(config->dt) + "\n";
    s += "# trials: " + std::to_string(config->trials) + "\n";
    if (c_u) s += "# c_u: " + fmt(*c_u) + "\n";
    for (const auto& [k, v] : extra) s += "# " + k + ": " + v + "\n";
    s += "# config: " + config->echo() + "\n";
    return s;
  }
};

std::shared_ptr<const SpectralData> spectral_data(const ExperimentConfig& config) {
  auto space = build_space(config);
  return std::make_shared<const SpectralData>(eigendecompose(assemble_laplacian(space, parse_bc(config.bc))));
}

double single_beta(const ExperimentConfig& config, std::string_view pipeline) {
  if (config.beta.size() != 1) config_error("beta", std::string(pipeline) + " takes a single value");
  return config.beta.front();
}

std::vector<std::size_t> probe_rows(const SpectralData& spec, const ExperimentConfig& config) {
  std::vector<std::size_t> rows;
  if (config.probes.empty()) {
    const std::size_t n = spec.size();
    const std::size_t k = std::min<std::size_t>(10, n);
    for (std::size_t i = 0; i < k; ++i) rows.push_back((2 * i + 1) * n / (2 * k));
    return rows;
  }
  for (std::size_t i = 0; i < config.probes.size(); ++i) {
    const std::size_t v = config.probes[i];
    const auto row = v < spec.space->size() ? spec.row_of(v) : std::nullopt;
    if (!row) config_error("probe[" + std::to_string(i) + "]", "vertex " + std::to_string(v) + " is not active");
    rows.push_back(*row);
  }
  return rows;
}

std::size_t steps_of(const ExperimentConfig& config) {
  if (!(config.dt > 0.0)) config_error("dt", "must be positive");
  if (!(config.T > 0.0)) config_error("T", "must be positive");
  const double ratio = config.T / config.dt;
  const auto n = static_cast<std::size_t>(std::llround(ratio));
  if (n == 0 || std::abs(ratio - static_cast<double>(n)) > 1e-9 * ratio) config_error("dt", "must divide T");
  return n;
}

RunResult run_spectrum(const ExperimentConfig& config) {
  const auto spec = spectral_data(config);
  Manifest m{"spectrum", &config, std::nullopt, {{"max_residual", fmt(spec->max_residual)}}};
  std::string s = m.text() + "index,eigenvalue\n";
  for (Eigen::Index j = 0; j < spec->lambdas.size(); ++j) s += std::to_string(j) + "," + fmt(spec->lambdas(j)) + "\n";
  return {s, std::nullopt};
}

RunResult run_heat_check(const ExperimentConfig& config) {
  const auto spec = spectral_data(config);
  const auto h = heat_check(*spec, config.t, config.t);
  Manifest m{"heat-check", &config, std::nullopt, {}};
  std::string s = m.text() + "t,s,symmetry,semigroup,l2_identity,min_entry,conservation,decay_slope,lambda1\n";
  s += fmt(h.t) + "," + fmt(h.s) + "," + fmt(h.symmetry_residual) + "," + fmt(h.semigroup_residual) + "," +
       fmt(h.l2_identity_residual) + "," + fmt(h.min_entry) + "," + fmt(h.conservation_error) + "," +
       fmt(h.decay_slope) + "," + fmt(h.lambda1) + "\n";
  return {s, std::nullopt};
}

RunResult run_simulate(const ExperimentConfig& config) {
  const auto spec = spectral_data(config);
  const auto model = make_noise_model(*spec, config.alpha, single_beta(config, "simulate"), config.seed);
  const auto rows = probe_rows(*spec, config);
  const std::size_t n = steps_of(config);
  McOptions options{config.trials, config.p, config.record_every == 0 ? n : config.record_every};
  const Eigen::VectorXd u0 = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(spec->size()), config.u0);
  const auto est = mc_moments(*spec, model, u0, config.T, config.dt, options);
  Manifest m{"simulate", &config, model.c_u, {{"dt_lambda_max", fmt(est.dt_lambda_max)}}};
  if (est.blowup_time) m.extra.push_back({"blowup_time", fmt(*est.blowup_time)});
  std::string s = m.text() + "t,vertex,p,estimate,stderr\n";
  for (std::size_t k = 0; k < est.times.size(); ++k) {
    for (std::size_t r : rows) {
      for (int p = 1; p <= est.p_max; ++p) {
        const auto i = static_cast<Eigen::Index>(r);
        s += fmt(est.times[k]) + "," + std::to_string(spec->active[r]) + "," + std::to_string(p) + "," +
             fmt(est.mean[k][p - 1](i)) + "," + fmt(est.stderr[k][p - 1](i)) + "\n";
      }
    }
  }
  RunResult result{s, std::nullopt};
  if (est.blowup_time)
    result.error = Error(Errc::blowup_abort, "non-finite field at t = " + fmt(*est.blowup_time));
  return result;
}

RunResult run_moments(const ExperimentConfig& config) {
  const auto spec = spectral_data(config);
  const auto model = make_noise_model(*spec, config.alpha, single_beta(config, "moments"), config.seed);
  const auto rows = probe_rows(*spec, config);
  const std::size_t n = steps_of(config);
  const Eigen::VectorXd u0 = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(spec->size()), config.u0);
  const auto field =
      second_moment_volterra(*spec, model, u0, config.T, config.dt, config.record_every == 0 ? n : config.record_every);
  Manifest m{"moments", &config, model.c_u, {}};
  std::string s = m.text() + "t,vertex,p,estimate,stderr\n";
  for (std::size_t k = 0; k < field.times.size(); ++k) {
    const Eigen::VectorXd mean = apply_semigroup(*spec, field.times[k], u0);
    const Eigen::VectorXd second = field.diagonal(k);
    for (std::size_t r : rows) {
      const auto i = static_cast<Eigen::Index>(r);
      const std::string prefix = fmt(field.times[k]) + "," + std::to_string(spec->active[r]) + ",";
      s += prefix + "1," + fmt(mean(i)) + ",0\n";
      if (config.p >= 2) s += prefix + "2," + fmt(second(i)) + ",0\n";
    }
  }
  return {s, std::nullopt};
}

RunResult run_fk(const ExperimentConfig& config) {
  const auto spec = spectral_data(config);
  const auto model = make_noise_model(*spec, config.alpha, single_beta(config, "fk"), config.seed);
  std::vector<std::size_t> vertices;
  if (config.x) {
    if (*config.x >= spec->space->size() || !spec->row_of(*config.x)) config_error("x", "vertex is not active");
    vertices.push_back(*config.x);
  } else {
    for (std::size_t r : probe_rows(*spec, config)) vertices.push_back(spec->active[r]);
  }
  const Eigen::VectorXd u0 = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(spec->size()), config.u0);
  Manifest m{"fk", &config, model.c_u, {}};
  std::string s = m.text() + "vertex,p,t,estimate,stderr,trials\n";
  for (std::size_t v : vertices) {
    const auto est = fk_moment(*spec, model, u0, config.p, config.t, v, config.trials);
    s += std::to_string(v) + "," + std::to_string(est.p) + "," + fmt(config.t) + "," + fmt(est.value) + "," +
         fmt(est.stderr) + "," + std::to_string(est.trials) + "\n";
  }
  return {s, std::nullopt};
}

RunResult run_scaling(const ExperimentConfig& config) {
  if (config.space != "gasket") config_error("space", "scaling-test needs the gasket");
  const int level = config.level.value_or(2);
  const auto word = parse_word(config.word);
  const auto times = config.times.empty() ? std::vector<double>{config.T} : config.times;
  const auto bc = parse_bc(config.bc);
  const auto r =
      scaling_check_gasket(level, word, config.alpha, single_beta(config, "scaling-test"), bc, times, config.dt);
  Manifest m{"scaling-test", &config, std::nullopt, {}};
  std::string s = m.text() +
                  "level,word,bc,alpha,beta,eigenvalue_error,heat_kernel_error,beta_stated,moment_discrepancy,"
                  "beta_variance_matched,moment_discrepancy_matched\n";
  s += std::to_string(level) + "," + config.word + "," + config.bc + "," + fmt(config.alpha) + "," +
       fmt(config.beta.front()) + "," + fmt(r.eigenvalue_error) + "," + fmt(r.heat_kernel_error) + "," +
       fmt(r.beta_stated) + "," + fmt(r.moment_discrepancy) + "," + fmt(r.beta_variance_matched) + "," +
       fmt(r.moment_discrepancy_matched) + "\n";
  return {s, std::nullopt};
}

RunResult run_theory(const ExperimentConfig& config) {
  const Dimensions dims = build_space(config)->dims();
  const auto pred = regime_and_exponents(config.alpha, dims.hausdorff, dims.walk);
  Manifest m{"theory", &config, std::nullopt, {}};
  std::string s = m.text() +
                  "alpha,d_h,d_w,regime,upper_exponent,upper_shape,lower_exponent,lower_shape,beta,rho_c,constants\n";
  for (double beta : config.beta) {
    std::string rho;
    if (pred.regime != Regime::smooth && beta > 0.0)
      rho = fmt(rho_c_solve(config.alpha, beta, 1.0, dims.hausdorff, dims.walk));
    s += fmt(config.alpha) + "," + fmt(dims.hausdorff) + "," + fmt(dims.walk) + "," +
         std::string(to_string(pred.regime)) + "," + fmt(pred.upper_exponent) + "," + pred.upper_shape + "," +
         fmt(pred.lower_exponent) + "," + pred.lower_shape + "," + fmt(beta) + "," + rho + "," + pred.constants +
         "\n";
  }
  return {s, std::nullopt};
}

RunResult run_phase_sweep(const ExperimentConfig& config) {
  const auto spec = spectral_data(config);
  std::size_t row = spec->size() / 2;
  if (config.x) {
    const auto r = *config.x < spec->space->size() ? spec->row_of(*config.x) : std::nullopt;
    if (!r) config_error("x", "vertex is not active");
    row = *r;
  } else if (!config.probes.empty()) {
    row = probe_rows(*spec, config).front();
  }
  const std::size_t n = steps_of(config);
  const std::size_t every = std::max<std::size_t>(1, n / 200);
  const Eigen::VectorXd u0 = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(spec->size()), config.u0);
  Manifest m{"phase-sweep", &config, std::nullopt, {{"lambda1", fmt(spec->lambda1())}}};
  std::string s = m.text() + "beta,vertex,p,slope,stderr,t_lo,t_hi,points\n";
  for (double beta : config.beta) {
    const auto model = make_noise_model(*spec, config.alpha, beta, config.seed);
    const auto field = second_moment_volterra(*spec, model, u0, config.T, config.dt, every);
    std::vector<double> series;
    for (std::size_t k = 0; k < field.times.size(); ++k)
      series.push_back(field.values[k](static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(row)));
    const auto fit = lyapunov_fit(field.times, series, 2);
    s += fmt(beta) + "," + std::to_string(spec->active[row]) + ",2," + fmt(fit.slope) + "," + fmt(fit.stderr_slope) +
         "," + fmt(fit.t_lo) + "," + fmt(fit.t_hi) + "," + std::to_string(fit.points) + "\n";
  }
  return {s, std::nullopt};
}

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

Table parse_csv(std::string_view text, const char* which) {
  Table t;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    auto cells = split(line, ',');
    if (t.header.empty()) {
      t.header = std::move(cells);
    } else {
      if (cells.size() != t.header.size())
        throw Error(Errc::compare_error, std::string(which) + ": row width differs from the header");
      t.rows.push_back(std::move(cells));
    }
  }
  if (t.header.empty()) throw Error(Errc::compare_error, std::string(which) + ": no header");
  return t;
}

double cell_value(const std::string& cell, const char* which) {
  try {
    std::size_t used = 0;
    const double v = std::stod(cell, &used);
    if (used == cell.size()) return v;
  } catch (const std::exception&) {
  }
  throw Error(Errc::compare_error, std::string(which) + ": '" + cell + "' is not numeric");
}

}  // namespace

Settings parse_settings(std::string_view text) {
  Settings out;
  const std::string body = trim(text);
  if (!body.empty() && body.front() == '{') {
    try {
      const auto j = nlohmann::json::parse(body);
      for (const auto& [key, value] : j.items()) {
        auto& list = out[key];
        auto push = [&](const nlohmann::json& v) { list.push_back(v.is_string() ? v.get<std::string>() : v.dump()); };
        if (value.is_array()) {
          for (const auto& v : value) push(v);
        } else {
          push(value);
        }
      }
    } catch (const nlohmann::json::exception& e) {
      throw Error(Errc::invalid_config, std::string("config: ") + e.what());
    }
    return out;
  }
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    line = trim(line);
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) config_error("line " + std::to_string(number), "expected key=value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    auto& list = out[key];
    list.clear();
    if (value.empty()) continue;
    for (const auto& v : split(value, ',')) list.push_back(trim(v));
  }
  return out;
}

std::string ExperimentConfig::echo() const {
  nlohmann::json j;
  j["space"] = space;
  if (level) j["level"] = *level;
  if (mesh) j["mesh"] = *mesh;
  if (!graph.empty()) j["graph"] = graph;
  j["bc"] = bc;
  j["alpha"] = alpha;
  j["beta"] = beta;
  j["dt"] = dt;
  j["T"] = T;
  j["trials"] = trials;
  j["probe"] = probes;
  j["seed"] = seed;
  j["p"] = p;
  j["t"] = t;
  if (x) j["x"] = *x;
  j["word"] = word;
  j["times"] = times;
  j["record_every"] = record_every;
  j["tolerance"] = tolerance;
  j["u0"] = u0;
  return j.dump();
}

ExperimentConfig make_config(const Settings& file, const Settings& flags) {
  Settings merged = file;
  for (const auto& [k, v] : flags) merged[k] = v;
  ExperimentConfig c;
  for (const auto& [key, values] : merged) {
    if (!known_keys().contains(key)) config_error(key, "unknown field");
    if (key == "beta" || key == "probe" || key == "times") {
      if (values.empty()) config_error(key, key == "beta" ? "sweep list is empty" : "list is empty");
      if (key == "beta") {
        c.beta.clear();
        for (const auto& v : values) c.beta.push_back(to_double(key, v));
      } else if (key == "probe") {
        for (const auto& v : values) c.probes.push_back(static_cast<std::size_t>(to_integer(key, v, 0)));
      } else {
        for (const auto& v : values) c.times.push_back(to_double(key, v));
      }
      continue;
    }
    const std::string& v = single(key, values);
    if (key == "space") c.space = v;
    else if (key == "level") c.level = static_cast<int>(to_integer(key, v, 0));
    else if (key == "mesh") c.mesh = to_double(key, v);
    else if (key == "graph") c.graph = v;
    else if (key == "bc") c.bc = v;
    else if (key == "alpha") c.alpha = to_double(key, v);
    else if (key == "dt") c.dt = to_double(key, v);
    else if (key == "T") c.T = to_double(key, v);
    else if (key == "trials") c.trials = static_cast<std::size_t>(to_integer(key, v, 0));
    else if (key == "seed") c.seed = static_cast<std::uint64_t>(to_integer(key, v, 0));
    else if (key == "out") c.out = v;
    else if (key == "p") c.p = static_cast<int>(to_integer(key, v, 1));
    else if (key == "t") c.t = to_double(key, v);
    else if (key == "x") c.x = static_cast<std::size_t>(to_integer(key, v, 0));
    else if (key == "word") c.word = v;
    else if (key == "record_every") c.record_every = static_cast<std::size_t>(to_integer(key, v, 0));
    else if (key == "tolerance") c.tolerance = to_double(key, v);
    else if (key == "u0") c.u0 = to_double(key, v);
  }
  if (c.space != "interval" && c.space != "gasket" && c.space != "graph")
    config_error("space", "expected interval, gasket or graph, got '" + c.space + "'");
  parse_bc(c.bc);
  if (c.alpha < 0.0) config_error("alpha", "must be >= 0");
  for (double b : c.beta) {
    if (b < 0.0) config_error("beta", "values must be >= 0");
  }
  if (c.mesh && !(*c.mesh > 0.0)) config_error("mesh", "must be positive");
  return c;
}

std::shared_ptr<const Space> build_space(const ExperimentConfig& config) {
  if (config.space == "gasket") return std::make_shared<const Space>(build_gasket(config.level.value_or(4)));
  if (config.space == "interval") {
    const double h = config.mesh.value_or(0.01);
    return std::make_shared<const Space>(build_interval(static_cast<int>(std::llround(1.0 / h))));
  }
  if (config.space == "graph") {
    const auto g = config.graph.empty() ? star_graph() : load_graph(config.graph);
    return std::make_shared<const Space>(build_metric_graph(g, config.mesh.value_or(0.25)));
  }
  config_error("space", "expected interval, gasket or graph");
}

RunResult run(std::string_view pipeline, const ExperimentConfig& config) {
  if (pipeline == "build-space") return {space_to_json(*build_space(config)) + "\n", std::nullopt};
  if (pipeline == "spectrum") return run_spectrum(config);
  if (pipeline == "heat-check") return run_heat_check(config);
  if (pipeline == "simulate") return run_simulate(config);
  if (pipeline == "moments") return run_moments(config);
  if (pipeline == "fk") return run_fk(config);
  if (pipeline == "scaling-test") return run_scaling(config);
  if (pipeline == "theory") return run_theory(config);
  if (pipeline == "phase-sweep") return run_phase_sweep(config);
  config_error("pipeline", "unknown pipeline '" + std::string(pipeline) + "'");
}

bool CompareResult::all_pass() const {
  return std::all_of(rows.begin(), rows.end(), [](const CompareRow& r) { return r.pass; });
}

std::string CompareResult::table() const {
  std::string s = "# tolerance: " + fmt(tolerance) + "\nkey,a,b,se_a,se_b,z,pass\n";
  for (const auto& r : rows) {
    s += r.key + "," + fmt(r.a) + "," + fmt(r.b) + "," + fmt(r.se_a) + "," + fmt(r.se_b) + "," + fmt(r.z) + "," +
         (r.pass ? "pass" : "fail") + "\n";
  }
  return s;
}

CompareResult compare(std::string_view report_a, std::string_view report_b, double tolerance) {
  const Table a = parse_csv(report_a, "report A");
  const Table b = parse_csv(report_b, "report B");
  if (a.header != b.header) throw Error(Errc::compare_error, "report headers differ");
  std::optional<std::size_t> value_col, se_col;
  for (std::size_t i = 0; i < a.header.size(); ++i) {
    if (a.header[i] == "estimate" || a.header[i] == "slope") value_col = i;
    if (a.header[i] == "stderr") se_col = i;
  }
  if (!value_col) throw Error(Errc::compare_error, "no estimate or slope column");
  auto key_of = [&](const std::vector<std::string>& row) {
    std::string key;
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i == *value_col || (se_col && i == *se_col)) continue;
      if (!key.empty()) key += ';';
      key += a.header[i] + "=" + row[i];
    }
    return key;
  };
  std::map<std::string, const std::vector<std::string>*> b_rows;
  for (const auto& row : b.rows) {
    if (!b_rows.emplace(key_of(row), &row).second) throw Error(Errc::compare_error, "duplicate row in report B");
  }
  if (a.rows.size() != b.rows.size()) throw Error(Errc::compare_error, "reports cover different probe sets");
  CompareResult result;
  result.tolerance = tolerance;
  std::set<std::string> seen;
  for (const auto& row : a.rows) {
    const std::string key = key_of(row);
    if (!seen.insert(key).second) throw Error(Errc::compare_error, "duplicate row in report A");
    const auto it = b_rows.find(key);
    if (it == b_rows.end()) throw Error(Errc::compare_error, "reports cover different probe sets (" + key + ")");
    CompareRow r;
    r.key = key;
    r.a = cell_value(row[*value_col], "report A");
    r.b = cell_value((*it->second)[*value_col], "report B");
    if (se_col) {
      r.se_a = cell_value(row[*se_col], "report A");
      r.se_b = cell_value((*it->second)[*se_col], "report B");
    }
    const double se = std::hypot(r.se_a, r.se_b);
    const double diff = std::abs(r.a - r.b);
    if (se > 0.0) {
      r.z = diff / se;
      r.pass = r.z <= tolerance;
    } else {
      const double scale = std::max({1.0, std::abs(r.a), std::abs(r.b)});
      r.z = diff == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
      r.pass = diff <= 1e-12 * scale;
    }
    result.rows.push_back(std::move(r));
  }
  return result;
}

std::string error_record(const Error& error) {
  nlohmann::json j;
  j["error"] = std::string(error.tag());
  j["message"] = error.what();
  return j.dump();
}

}  // namespace pamlab
