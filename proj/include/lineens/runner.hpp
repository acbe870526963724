#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "lineens/experiments.hpp"

namespace lineens {

inline constexpr std::string_view kArtifactVersion = "0.1.0";
/// Overrides the default output directory ("results").
inline constexpr const char* kOutputDirEnv = "LINEENS_OUTPUT_DIR";

enum class OutputFormat { Csv, JsonLines };

struct RunConfig {
  std::string experiment;
  /// Experiment parameters exactly as written (defaults are not filled in).
  std::map<std::string, std::string> parameters;
  std::uint64_t seed = 0;
  std::string output_path;  // empty: <output dir>/<experiment>-seed<seed>.<ext>
  OutputFormat output_format = OutputFormat::JsonLines;
  int threads = 1;
  /// The final timing record is the only part of a report that varies
  /// between identical runs.
  bool record_wall_time = true;
};

/// Command-line overrides applied before validation.
struct ConfigOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::optional<std::string> output_path;
  std::optional<OutputFormat> format;
};

struct ExperimentInfo {
  std::string name;
  std::string description;
};

std::vector<ExperimentInfo> list_experiments();

/// Parses flat `key = value` text (`#` starts a comment).
/// Throws ParseError for malformed lines (every bad line is listed) and
/// ValidationError naming every missing, unknown or out-of-range field.
RunConfig parse_config(std::string_view text, const ConfigOverrides& overrides = {});

/// Config text with every parameter at its default and seed = 1.
/// Throws ValidationError for unknown experiments.
std::string emit_default_config(std::string_view experiment);

/// Defaults of an experiment's parameters, formatted as in config files.
std::map<std::string, std::string> default_parameters(std::string_view experiment);

/// Runs the configured experiment (no output written).
ExperimentReport run_experiment(const RunConfig& config);

/// Serializes a report; reals use 17 significant digits.
void write_report(std::ostream& out, const ExperimentReport& report, const RunConfig& config);

/// Resolved output file for a config.
std::string output_file(const RunConfig& config);

/// Executes and writes the report. Exit code: 0 when every check passes,
/// 1 when some check fails, 2 on any error (diagnostics go to `err`).
int run(const RunConfig& config, std::ostream& err);

}  // namespace lineens
