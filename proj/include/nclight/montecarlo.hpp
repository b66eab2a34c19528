#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "nclight/detection.hpp"
#include "nclight/sources.hpp"

namespace nclight::montecarlo {

/// Bin-by-bin simulation setup. Gating opens the detectors on every k-th
/// bin where k is the nearest integer to 1/duty_cycle; dead time is rounded
/// up to whole bins. Partitions split the bin range into independently
/// seeded substreams (each starting with live detectors); partitions = 1 is
/// the exact single-stream mode.
struct SimConfig {
  std::uint64_t seed = 0;
  std::uint64_t bins = 0;        // wall-clock bins, open or not
  double duty_cycle = 1.0;       // fraction of bins with detectors open
  sources::SourceSpec spec;
  detection::DetectorNetwork net;
  double transmittance = 1.0;
  int partitions = 1;
  bool dead_time_enabled = true;

  void validate() const;
};

/// Tally-based estimates. counts[p] is the number of open bins whose click
/// pattern is p (bit i set = arm i clicked); log estimates and standard
/// errors are in natural-log units.
struct SimEstimate {
  int detectors = 2;
  std::vector<std::uint64_t> counts;  // size 2^detectors
  std::uint64_t wall_bins = 0;
  std::uint64_t open_bins = 0;
  double log_p0_hat = 0.0;
  double log_p0m_hat = 0.0;
  double se_log_p0 = 0.0;
  double se_log_p0m = 0.0;
  std::uint64_t seed_used = 0;

  std::uint64_t silent_count_arm0() const;
};

/// Run the simulation. Deterministic: identical config gives identical
/// tallies.
SimEstimate run(const SimConfig& cfg);

struct Significance {
  double d = 0.0;        // base-10 distance from the classical boundary
  double sigma_d = 0.0;  // delta-method standard deviation of d
  double ratio = 0.0;    // d / sigma_d; 0 when the point estimate is inside
  bool unbounded = false;
  std::string note;
};

/// Distance over its standard deviation from the tallies. The variance
/// propagation keeps the covariance between the two estimates (they share
/// bins); for M = 2 the all-silent term carries the entire budget.
Significance significance(const SimEstimate& est, int detectors);

/// Smallest gating period k (detectors open every k-th bin) that keeps the
/// rate of openings registering any click at or below the saturation rate,
/// and never opens faster than once per emission cycle.
std::uint64_t gating_period(const detection::DetectorNetwork& net,
                            double any_click_prob, double emission_cycle_s);

}  // namespace nclight::montecarlo
