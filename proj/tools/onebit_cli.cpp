// onebit: gen | solve | sweep | plot

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "onebit/bench.hpp"
#include "onebit/bnb.hpp"
#include "onebit/config.hpp"
#include "onebit/detectors.hpp"
#include "onebit/model.hpp"

using namespace onebit;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitSolver = 3;

struct ConfigFlags {
  std::string config_path;
  std::map<std::string, std::string> overrides;
};

// --<key> VALUE for every config key; applied after the config file.
void add_config_flags(CLI::App* cmd, ConfigFlags& flags) {
  cmd->add_option("-c,--config", flags.config_path, "flat key = value config file");
  for (const std::string& key : config_keys()) {
    cmd->add_option_function<std::string>(
           "--" + key, [&flags, key](const std::string& v) { flags.overrides[key] = v; }, "config key " + key)
        ->type_name("VALUE");
  }
}

ExperimentConfig build_config(const ConfigFlags& flags, ExperimentConfig base = {}) {
  ExperimentConfig cfg = flags.config_path.empty() ? base : load_config(flags.config_path, base);
  for (const auto& [key, value] : flags.overrides) apply_setting(cfg, key, value);
  cfg.validate();
  return cfg;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

nlohmann::json to_json(const MethodRun& run, const RealInstance& inst) {
  const auto& d = run.detection;
  nlohmann::json j;
  j["method"] = d.method;
  j["x_hat"] = std::vector<double>(d.x_hat.data(), d.x_hat.data() + d.x_hat.size());
  j["objective"] = d.objective;
  j["wall_time_us"] = std::chrono::duration_cast<std::chrono::microseconds>(d.wall_time).count();
  j["status"] = run.status;
  j["stats"] = d.stats;
  j["extra"] = run.extra;
  if (inst.x_true) {
    const auto e = ber(d.x_hat, *inst.x_true);
    j["bit_errors"] = e.errors;
    j["bits"] = e.bits;
  }
  return j;
}

int cmd_gen(int mt, int nt, double snr, std::uint64_t seed, const std::string& out) {
  const auto inst = generate_complex_instance(mt, nt, snr, seed);
  const std::string text = instance_to_json(inst).dump(2) + "\n";
  if (out.empty() || out == "-") {
    std::cout << text;
  } else {
    std::ofstream f(out);
    if (!f) throw ConfigError("cannot write " + out);
    f << text;
  }
  return 0;
}

int cmd_solve(const std::string& instance_path, const std::string& method, std::optional<std::uint64_t> seed,
              const ConfigFlags& flags) {
  const ExperimentConfig cfg = build_config(flags);
  const auto known = known_methods();
  if (std::find(known.begin(), known.end(), method) == known.end()) {
    throw ConfigError("unknown method '" + method + "'");
  }
  ComplexInstance c;
  try {
    c = instance_from_json(nlohmann::json::parse(read_file(instance_path)));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(instance_path + ": " + e.what());
  }
  const RealInstance inst = complex_to_real(c);
  const MethodRun run = run_method(method, inst, cfg, seed.value_or(c.provenance.seed));
  std::cout << to_json(run, inst).dump(2) << "\n";
  return 0;
}

int cmd_sweep(const ConfigFlags& flags, bool quiet) {
  const ExperimentConfig cfg = build_config(flags);
  std::ofstream csv(cfg.output_path);
  if (!csv) throw ConfigError("cannot write " + cfg.output_path);
  const auto records = run_experiment(cfg, &csv);
  if (!quiet) {
    for (const auto& s : summarize(records)) {
      std::fprintf(stderr, "%-10s snr %5.1f  %dx%d  trials %d  ber %.5f  time %.0fus\n", s.method.c_str(), s.snr_db,
                   s.m_tilde, s.n_tilde, s.trials, s.mean_ber, s.mean_wall_time_us);
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"One-bit MIMO detection: instance generation, detectors, Monte-Carlo sweeps"};
  app.require_subcommand(1);

  int mt = 8, nt = 3;
  double snr = 10.0;
  std::uint64_t gen_seed = 1;
  std::string gen_out;
  auto* gen = app.add_subcommand("gen", "write an instance as JSON");
  gen->add_option("--m-tilde", mt, "complex receive antennas")->check(CLI::PositiveNumber);
  gen->add_option("--n-tilde", nt, "complex transmit antennas")->check(CLI::PositiveNumber);
  gen->add_option("--snr", snr, "SNR in dB");
  gen->add_option("--seed", gen_seed, "instance seed");
  gen->add_option("-o,--output", gen_out, "output file (stdout if omitted)");

  std::string instance_path, method = "gML";
  std::optional<std::uint64_t> solve_seed;
  ConfigFlags solve_flags;
  auto* solve = app.add_subcommand("solve", "run one detector on an instance file, print the result as JSON");
  solve->add_option("instance", instance_path, "instance JSON")->required();
  solve->add_option("-m,--method", method, "gML | AR-L1 | AR-L2 | AR-L1-ABB | quantZF | exhaustive | alg1-gML");
  solve->add_option("--seed", solve_seed, "ABB start seed (defaults to the instance seed)");
  add_config_flags(solve, solve_flags);

  ConfigFlags sweep_flags;
  bool quiet = false;
  auto* sweep = app.add_subcommand("sweep", "run a Monte-Carlo experiment and write CSV");
  add_config_flags(sweep, sweep_flags);
  sweep->add_flag("-q,--quiet", quiet, "no summary on stderr");

  std::string csv_path, svg_path;
  PlotSpec spec;
  bool linear = false;
  auto* plot = app.add_subcommand("plot", "render a sweep CSV as an SVG line chart");
  plot->add_option("csv", csv_path, "sweep CSV")->required();
  plot->add_option("-o,--output", svg_path, "SVG file (default: CSV path with .svg)");
  plot->add_option("--metric", spec.metric, "ber | wall_time_us | objective | numeric extra_json key");
  plot->add_option("--x", spec.x_column, "x-axis column");
  plot->add_option("--title", spec.title);
  plot->add_option("--y-floor", spec.y_floor, "where zeros land on a log axis");
  plot->add_flag("--linear", linear, "linear y axis");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*gen) return cmd_gen(mt, nt, snr, gen_seed, gen_out);
    if (*solve) return cmd_solve(instance_path, method, solve_seed, solve_flags);
    if (*sweep) return cmd_sweep(sweep_flags, quiet);
    if (*plot) {
      spec.log_y = !linear;
      if (svg_path.empty()) {
        const auto dot = csv_path.rfind('.');
        svg_path = (dot == std::string::npos ? csv_path : csv_path.substr(0, dot)) + ".svg";
      }
      // nothing here is a solver: a bad CSV or metric is an input error
      try {
        emit_svg_plot(csv_path, spec, svg_path);
      } catch (const std::runtime_error& e) {
        throw ConfigError(e.what());
      }
      return 0;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "solver failure: " << e.what() << "\n";
    return kExitSolver;
  }
  return 0;
}
