#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "dysonlab/config.hpp"
#include "dysonlab/report.hpp"

namespace dysonlab {

inline constexpr const char* kVersion = "0.1.0";

struct OutputTable {
  std::string name;  // file stem
  std::string csv;
};

struct ExperimentResult {
  std::string kind;
  std::vector<OutputTable> tables;
  std::vector<Verdict> verdicts;
  Json diagnostics = Json::object();

  bool all_pass() const { return dysonlab::all_pass(verdicts); }
  const OutputTable& table(const std::string& name) const;
};

/// Runs one experiment. Every stream derives from (master_seed, kind), and the
/// result does not depend on n_workers.
///
/// Throws ConfigError for parameter combinations the schema cannot express
/// (e.g. a starting point of the wrong length), IntegratorError when the SDE
/// integrator fails, and DegenerateWeightsError for unusable importance weights.
ExperimentResult run_experiment(const ExperimentConfig& config);

Json summary_json(const ExperimentConfig& config, const ExperimentResult& result);
Json manifest_json(const ExperimentConfig& config, const std::vector<std::string>& files);

/// Writes <table>.csv for each table, summary.json and manifest.json into `dir`;
/// returns the written file names.
std::vector<std::string> write_artifacts(const ExperimentConfig& config, const ExperimentResult& result,
                                         const std::filesystem::path& dir);

}  // namespace dysonlab
