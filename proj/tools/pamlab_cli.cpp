#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pamlab/experiment.hpp"

namespace {

struct Flags {
  std::string config;
  pamlab::Settings values;
  std::vector<std::pair<std::string, CLI::Option*>> options;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw pamlab::Error(pamlab::Errc::invalid_config, "config: cannot read '" + path + "'");
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void write_output(const std::string& path, const std::string& text) {
  if (path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw pamlab::Error(pamlab::Errc::invalid_config, "out: cannot write '" + path + "'");
  out << text;
}

void add_flags(CLI::App* cmd, Flags& flags) {
  cmd->add_option("--config", flags.config, "config file (key=value lines or a JSON object)");
  const std::vector<std::pair<std::string, std::string>> scalar{
      {"space", "interval, gasket or graph"}, {"level", "gasket level"},
      {"mesh", "interval or graph mesh width"}, {"graph", "metric graph JSON file"},
      {"bc", "dirichlet or neumann"}, {"alpha", "noise order"},
      {"dt", "time step"}, {"T", "horizon"},
      {"trials", "Monte Carlo trials"}, {"seed", "RNG seed"},
      {"out", "output file"}, {"p", "moment order"},
      {"t", "evaluation time"}, {"x", "vertex id"},
      {"word", "cell word over 1,2,3"}, {"record-every", "recording stride in steps"},
      {"u0", "constant initial value"}};
  for (const auto& [name, help] : scalar) {
    auto& slot = flags.values[name == "record-every" ? "record_every" : name];
    flags.options.emplace_back(name == "record-every" ? "record_every" : name,
                               cmd->add_option("--" + name, slot, help)->expected(1));
  }
  for (const auto& [name, help] : std::vector<std::pair<std::string, std::string>>{
           {"beta", "noise strength (repeatable)"}, {"probe", "probe vertex id (repeatable)"},
           {"times", "time grid (repeatable)"}}) {
    auto& slot = flags.values[name];
    flags.options.emplace_back(name, cmd->add_option("--" + name, slot, help)->expected(0, -1)->delimiter(','));
  }
}

pamlab::Settings given(const Flags& flags) {
  pamlab::Settings out;
  for (const auto& [key, opt] : flags.options) {
    if (opt->count() == 0) continue;
    auto& list = out[key];
    for (const auto& v : flags.values.at(key)) {
      if (!v.empty()) list.push_back(v);
    }
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Parabolic Anderson model on recurrent metric measure spaces"};
  app.set_version_flag("--version", std::string(pamlab::kVersion));
  app.require_subcommand(1);

  Flags flags;
  const std::vector<std::pair<std::string, std::string>> pipelines{
      {"build-space", "write the discretized space as JSON"},
      {"spectrum", "eigenvalues as CSV"},
      {"heat-check", "heat kernel diagnostics"},
      {"simulate", "Monte Carlo moments"},
      {"moments", "Volterra second moment"},
      {"fk", "Feynman-Kac moment estimate"},
      {"scaling-test", "gasket cell scaling identities"},
      {"theory", "predicted regime and exponents"},
      {"phase-sweep", "Lyapunov slope per beta"}};
  for (const auto& [name, help] : pipelines) add_flags(app.add_subcommand(name, help), flags);

  std::string report_a, report_b, compare_out;
  double tolerance = 3.0;
  auto* cmp = app.add_subcommand("compare", "row-wise comparison of two reports");
  cmp->add_option("report_a", report_a)->required();
  cmp->add_option("report_b", report_b)->required();
  cmp->add_option("--tolerance", tolerance, "pass threshold on |a-b|/stderr");
  cmp->add_option("--out", compare_out, "output file");

  CLI11_PARSE(app, argc, argv);

  try {
    if (cmp->parsed()) {
      const auto result = pamlab::compare(read_file(report_a), read_file(report_b), tolerance);
      write_output(compare_out, result.table());
      return result.all_pass() ? 0 : 1;
    }
    const auto* cmd = app.get_subcommands().front();
    const auto file = flags.config.empty() ? pamlab::Settings{} : pamlab::parse_settings(read_file(flags.config));
    const auto config = pamlab::make_config(file, given(flags));
    const auto result = pamlab::run(cmd->get_name(), config);
    write_output(config.out, result.report);
    if (result.error) {
      std::cerr << pamlab::error_record(*result.error) << "\n";
      return 1;
    }
    return 0;
  } catch (const pamlab::Error& e) {
    std::cerr << pamlab::error_record(e) << "\n";
    return e.code() == pamlab::Errc::invalid_config ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << pamlab::error_record(pamlab::Error(pamlab::Errc::numerical_failure, e.what())) << "\n";
    return 1;
  }
}
