#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

#include "nclight/config.hpp"

namespace nclight::cli {

enum class OutputFormat { csv, json };

/// Flag set shared by all subcommands. Exit-code contract:
/// 0 = nonclassicality demonstrated at the requested significance,
/// 2 = not demonstrated, 1 = any error.
struct CliOptions {
  std::optional<std::uint64_t> seed;
  std::string out_path;  // empty = no structured output file
  OutputFormat format = OutputFormat::csv;
  double significance = 3.0;
};

inline constexpr int kExitDemonstrated = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitNotDemonstrated = 2;

/// Analytic verdict (plus a Monte Carlo run when [sim] is configured).
int cmd_verdict(const ExperimentConfig& config, const CliOptions& options,
                std::ostream& report);

/// Noise-threshold sweep table over the configured nbar and emitter grids.
int cmd_thresholds(const ExperimentConfig& config, const CliOptions& options,
                   std::ostream& report);

/// Measurement-time curve over the configured emitter grid.
int cmd_figure3(const ExperimentConfig& config, const CliOptions& options,
                std::ostream& report);

}  // namespace nclight::cli
