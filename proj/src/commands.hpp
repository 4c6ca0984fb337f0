#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "lfmap/io/config.hpp"

namespace lfmap::app {

/// Messages collected during a command, each with a severity.
class Diagnostics {
 public:
  void add(io::Severity severity, std::string message);
  const std::vector<std::pair<io::Severity, std::string>>& messages() const noexcept { return messages_; }
  /// Count of messages at or above `threshold`.
  std::size_t count_at_least(io::Severity threshold) const;
  void print(std::ostream& out) const;

 private:
  std::vector<std::pair<io::Severity, std::string>> messages_;
};

struct SimulateOptions {
  std::string out_dir;
};

struct WeightOptions {
  std::string bank_dir;
  std::string pixels;
  std::string out_dir;
};

struct ProjectOptions {
  std::string bank_dir;
  std::string weights_dir;
  std::string out_dir;
  /// Empty projects every scenario in the bank.
  std::string scenario;
};

struct ToyOptions {
  std::string out_dir;
  /// Restricts the table to one estimator when set.
  std::optional<ErndKind> ernd;
};

struct InspectOptions {
  std::string path;
  std::string export_csv;
};

/// Builds (or resumes) a simulation bank in `out_dir`.
void simulate(const io::RunConfig& config, const SimulateOptions& options, Diagnostics& diag, std::ostream& log);

/// Pools pixels and weights the bank for every unit.
void weight(const io::RunConfig& config, const WeightOptions& options, Diagnostics& diag, std::ostream& log);

/// Writes weighted projection summaries for each scenario.
void project(const io::RunConfig& config, const ProjectOptions& options, Diagnostics& diag, std::ostream& log);

/// Runs the toy-model estimator comparison and writes the table.
void toy_validate(const io::RunConfig& config, const ToyOptions& options, Diagnostics& diag, std::ostream& log);

/// Describes a bank directory or lfmap CSV file; optionally exports a bank
/// to CSV.
void inspect(const InspectOptions& options, Diagnostics& diag, std::ostream& log);

/// Reads a config file, or returns the defaults when `path` is empty.
io::RunConfig load_config(const std::string& path);

}  // namespace lfmap::app
