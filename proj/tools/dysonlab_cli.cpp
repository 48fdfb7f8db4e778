#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "dysonlab/config.hpp"
#include "dysonlab/dyson.hpp"
#include "dysonlab/experiments.hpp"
#include "dysonlab/girsanov.hpp"

namespace {

enum ExitCode : int {
  kPass = 0,
  kUnexpected = 1,
  kVerdictFailure = 2,
  kConfigError = 3,
  kIntegratorFailure = 4,
  kResourceFailure = 5,
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dysonlab: Monte Carlo experiments on Dyson Brownian motion and related processes"};
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::string out_dir;
  std::string print_defaults;
  std::string describe;
  bool list_kinds = false;

  app.add_option("--config", config_path, "experiment config (JSON)")->check(CLI::ExistingFile);
  app.add_option("--seed", seed, "master seed (overrides the config)");
  app.add_option("--workers", workers, "worker threads (overrides the config)")->check(CLI::PositiveNumber);
  app.add_option("--out", out_dir, "output directory (overrides the config)");
  app.add_option("--print-defaults", print_defaults, "print a complete default config for a kind and exit");
  app.add_option("--describe", describe, "print the parameter schema of a kind and exit");
  app.add_flag("--list-kinds", list_kinds, "list experiment kinds and exit");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kPass : kConfigError;
  }

  try {
    if (list_kinds) {
      for (const auto& s : dysonlab::experiment_schemas()) std::cout << s.kind << "  " << s.description << "\n";
      return kPass;
    }
    if (!print_defaults.empty()) {
      std::cout << dysonlab::dump_config(dysonlab::default_config(print_defaults));
      return kPass;
    }
    if (!describe.empty()) {
      std::cout << dysonlab::describe_schema(describe);
      return kPass;
    }
    if (config_path.empty()) {
      std::cerr << "error: --config is required\n" << app.help();
      return kConfigError;
    }

    dysonlab::ExperimentConfig config = dysonlab::load_config(config_path);
    if (seed) config.master_seed = *seed;
    if (workers) config.n_workers = *workers;
    if (!out_dir.empty()) config.output_dir = out_dir;

    const dysonlab::ExperimentResult result = dysonlab::run_experiment(config);
    const auto files = dysonlab::write_artifacts(config, result, config.output_dir);

    long failed = 0;
    for (const auto& v : result.verdicts) failed += v.pass ? 0 : 1;
    std::cout << config.kind << ": " << result.verdicts.size() - static_cast<std::size_t>(failed) << "/"
              << result.verdicts.size() << " verdicts pass; wrote " << files.size() << " files to "
              << config.output_dir << "\n";
    for (const auto& v : result.verdicts) {
      if (!v.pass) std::cout << "  FAIL " << v.clause << ": " << v.lhs << " " << v.relation << " " << v.rhs << "\n";
    }
    return failed == 0 ? kPass : kVerdictFailure;
  } catch (const dysonlab::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const dysonlab::IntegratorError& e) {
    std::cerr << "integrator failure: " << e.what() << "\n";
    return kIntegratorFailure;
  } catch (const dysonlab::DegenerateWeightsError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kIntegratorFailure;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const std::runtime_error& e) {
    std::cerr << "resource failure: " << e.what() << "\n";
    return kResourceFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUnexpected;
  }
}
