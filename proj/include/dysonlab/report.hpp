#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace dysonlab {

/// Full-precision decimal rendering ("%.17g"); re-parsing gives the same double.
std::string format_real(double x);

/// A tested inequality lhs <relation> rhs with its verdict.
struct Verdict {
  std::string clause;  // human-readable description of what is tested
  double lhs = 0.0;
  double rhs = 0.0;
  double std_error = 0.0;
  std::string relation = "<=";
  bool pass = false;
};

/// One statistic table written as <name>.csv.
class CsvTable {
 public:
  CsvTable(std::string name, std::vector<std::string> header);

  const std::string& name() const { return name_; }
  std::size_t n_rows() const { return rows_.size(); }

  CsvTable& row(std::vector<std::string> cells);
  std::string to_string() const;

 private:
  std::string name_;
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

bool all_pass(const std::vector<Verdict>& verdicts);

/// Writes `content` to `path`, creating parent directories; throws std::runtime_error on failure.
void write_text_file(const std::filesystem::path& path, const std::string& content);

}  // namespace dysonlab
