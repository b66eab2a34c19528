#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "nclight/detection.hpp"
#include "nclight/montecarlo.hpp"
#include "nclight/planner.hpp"
#include "nclight/sources.hpp"

namespace nclight::cli {

/// Config-file problem with a line-precise location.
class config_error : public std::runtime_error {
public:
  config_error(std::string file, int line, const std::string& what)
      : std::runtime_error(file + ":" + std::to_string(line) + ": " + what),
        file_(std::move(file)),
        line_(line) {}

  const std::string& file() const noexcept { return file_; }
  int line() const noexcept { return line_; }

private:
  std::string file_;
  int line_;
};

struct SimSettings {
  std::uint64_t bins = 1'000'000;
  /// Explicit gating duty cycle; when unset the verdict command derives the
  /// gating period from the saturation rule and the emission cycle.
  std::optional<double> duty_cycle;
  int partitions = 1;
  bool dead_time = true;
};

struct PlanSettings {
  planner::PlannerConfig planner;
  std::vector<double> emitter_grid;  // figure3 grid
};

struct ThresholdSweep {
  std::vector<double> nbar_values;
  std::vector<std::int64_t> emitter_values;
};

/// Parsed form of the emitter-count statistics request; kept alongside the
/// materialized pmf so configs serialize back to their generator form.
struct NumberStatsSpec {
  enum class Kind { poissonian, binomial, geometric };
  Kind kind = Kind::poissonian;
  double mean = 0.0;
  int trials = 0;
  double prob = 0.0;
};

/// Everything a command needs, parsed from one config file. The format is
/// line-oriented `key = value` under [section] headers with '#' comments;
/// a top-level `schema_version = 1` is mandatory and unknown keys are
/// rejected with their line number.
struct ExperimentConfig {
  int schema_version = 1;
  sources::SourceSpec source;
  detection::DetectorNetwork network = detection::DetectorNetwork::symmetric(2);
  double attenuation = 1.0;
  std::optional<SimSettings> sim;
  std::optional<PlanSettings> plan;
  std::optional<ThresholdSweep> thresholds;
  std::optional<NumberStatsSpec> number_stats_spec;

  void validate() const;
};

ExperimentConfig parse_config_text(const std::string& text,
                                   const std::string& filename = "<string>");
ExperimentConfig load_config(const std::string& path);

/// Canonical text form; parse_config_text(serialize_config(c)) reproduces c.
std::string serialize_config(const ExperimentConfig& config);

/// Shortest-round-trip, locale-independent decimal formatting.
std::string format_double(double value);

}  // namespace nclight::cli
