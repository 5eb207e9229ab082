// pvibench: run one experiment from a JSON config and write CSV/JSON results.
#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "pvi/errors.hpp"
#include "pvi/experiments.hpp"

namespace {

enum Exit { kOk = 0, kConfig = 1, kDiverged = 2, kIo = 3 };

int run(const std::string& experiment, const std::string& config_path, const std::string& out,
        const std::optional<std::uint64_t>& seed) {
  const pvi::ExperimentKind kind = pvi::experiment_from_name(experiment);
  std::ifstream in(config_path);
  if (!in) throw pvi::ConfigError("cannot open config '" + config_path + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw pvi::ConfigError("config '" + config_path + "': " + e.what());
  }
  if (!j.is_object()) throw pvi::ConfigError("config '" + config_path + "': expected an object");
  if (!j.contains("experiment")) j["experiment"] = pvi::experiment_name(kind);
  if (seed) j["seed"] = *seed;

  pvi::ExperimentConfig cfg;
  try {
    cfg = pvi::parse_experiment_config(j, std::filesystem::path(config_path).parent_path());
  } catch (const pvi::ConfigError& e) {
    throw pvi::ConfigError("'" + config_path + "': " + e.what());
  }
  if (cfg.kind != kind) {
    throw pvi::ConfigError("'" + config_path + "': config is for '" +
                           pvi::experiment_name(cfg.kind) + "', not '" + experiment + "'");
  }
  const std::filesystem::path out_dir =
      out.empty() ? std::filesystem::path(cfg.output_dir) / pvi::experiment_name(kind) : std::filesystem::path(out);
  const nlohmann::json summary = pvi::run_experiment(cfg, out_dir);
  std::cout << summary.dump(2) << '\n';
  std::cerr << "wrote " << out_dir.string() << '\n';
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"perturbative black-box VI benchmarks"};
  std::vector<std::string> positional;
  std::string config_path, out;
  std::uint64_t seed_value = 0;
  app.add_option("experiment", positional,
                 "toy1d | gp-regression | gp-classification | grad-var-sweep | convergence "
                 "(optionally preceded by 'run')")
      ->required()
      ->expected(1, 2);
  app.add_option("--config,-c", config_path, "experiment config (JSON)")->required();
  app.add_option("--out,-o", out, "output directory");
  auto* seed_opt = app.add_option("--seed", seed_value, "override the config seed");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }
  if (positional.size() == 2 && positional[0] != "run") {
    std::cerr << "error: expected 'run <experiment>' or '<experiment>'\n";
    return kConfig;
  }
  const std::string experiment = positional.back();
  std::optional<std::uint64_t> seed;
  if (seed_opt->count() > 0) seed = seed_value;

  try {
    return run(experiment, config_path, out, seed);
  } catch (const pvi::AllDivergedError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kDiverged;
  } catch (const pvi::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const pvi::InputError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const pvi::IoError& e) {
    std::cerr << "I/O error: " << e.what() << '\n';
    return kIo;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "I/O error: " << e.what() << '\n';
    return kIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kConfig;
  }
}
