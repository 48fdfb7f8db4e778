#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace dysonlab {

using Json = nlohmann::ordered_json;

inline constexpr int kSchemaVersion = 1;

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class FieldType { Real, Integer, Boolean, String, RealList };

/// One documented parameter of an experiment kind.
struct FieldSpec {
  std::string name;
  FieldType type = FieldType::Real;
  Json default_value;
  std::string doc;
  std::optional<double> min;  // inclusive lower bound (each element for lists)
  std::optional<double> max;  // inclusive upper bound
  bool positive = false;      // strictly > 0
};

struct KindSchema {
  std::string kind;
  std::string description;
  std::vector<FieldSpec> fields;

  const FieldSpec* find(const std::string& name) const;
};

/// Every experiment kind with its parameter block, in a fixed order.
const std::vector<KindSchema>& experiment_schemas();
/// Throws ConfigError for an unknown kind.
const KindSchema& schema_for(const std::string& kind);

/// Declarative experiment description.
///
/// Top-level keys: schema_version, kind, master_seed, n_workers, output_dir,
/// params. Unknown keys at either level are errors. After parsing, `params`
/// holds every field of the kind's schema (defaults filled in, reals stored as
/// doubles), so dump_config(parse_config(dump_config(c))) reproduces the text.
struct ExperimentConfig {
  int schema_version = kSchemaVersion;
  std::string kind;
  std::uint64_t master_seed = 0;
  int n_workers = 1;
  std::string output_dir = "out";
  Json params = Json::object();

  double real(const std::string& name) const;
  long integer(const std::string& name) const;
  bool flag(const std::string& name) const;
  std::string text(const std::string& name) const;
  std::vector<double> reals(const std::string& name) const;

  /// Replaces one parameter, re-running the schema checks.
  ExperimentConfig with(const std::string& name, Json value) const;

  bool operator==(const ExperimentConfig&) const = default;
};

/// Configuration of `kind` with every parameter at its documented default.
ExperimentConfig default_config(const std::string& kind);

ExperimentConfig config_from_json(const Json& j);
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);

Json config_to_json(const ExperimentConfig& c);
std::string dump_config(const ExperimentConfig& c);

/// FNV-1a 64-bit hash of dump_config(c), as 16 hex digits.
std::string config_hash(const ExperimentConfig& c);

/// Human-readable schema listing with defaults and documentation.
std::string describe_schema(const std::string& kind);

}  // namespace dysonlab
