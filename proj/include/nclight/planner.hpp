#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "nclight/detection.hpp"
#include "nclight/sources.hpp"

namespace nclight::planner {

/// Timing model shared by all planning calls.
///
/// Openings are 10 ns-scale gates synchronized to the source emission cycle;
/// they can never come faster than one per cycle. The detectors saturate on
/// registered events: openings that produce at least one click anywhere must
/// stay at or below the saturation rate, which bounds the opening rate by
/// saturation_rate / P(any click). Active gate switching above
/// switch_rate_cap_hz is realized by grouping openings into bursts of
/// consecutive cycles, which leaves per-opening statistics and wall time
/// unchanged.
struct PlannerConfig {
  double target_ratio = 3.0;
  double emission_cycle_s = 100e-9;
  double switch_rate_cap_hz = 500e3;
};

enum class Regime { free_running, gated, gated_plus_attenuated };

struct PlanResult {
  double t_min_s = 0.0;         // wall-clock time to the target ratio
  double t_opt = 1.0;           // chosen transmittance
  Regime regime = Regime::free_running;
  double flux = 0.0;            // emitters * T * eta per open bin
  double open_bins = 0.0;       // statistical bins required
  double opening_rate_hz = 0.0;
  double duty_cycle = 1.0;      // opening_rate * gate_length
  std::uint64_t gate_burst = 1; // openings grouped per toggle
};

struct CurvePoint {
  double emitters = 0.0;
  double t_gated_s = 0.0;       // gating + attenuation
  double t_bs_only_s = 0.0;     // attenuation only, detectors always open
  double t_opt = 1.0;           // transmittance of the gated plan
  double flux = 0.0;            // flux of the gated plan
};

/// Wall-clock seconds until the measured distance reaches
/// target_ratio standard deviations at fixed transmittance. Throws
/// infeasible_error when the source does not violate the criterion there.
double time_to_significance(const sources::SourceSpec& spec,
                            const detection::DetectorNetwork& net,
                            double transmittance, double target_ratio,
                            const PlannerConfig& cfg = {});

/// Minimize time_to_significance over the transmittance. Golden-section on
/// log T after a coarse feasibility scan.
PlanResult optimize_attenuation(const sources::SourceSpec& spec,
                                const detection::DetectorNetwork& net,
                                double target_ratio,
                                const PlannerConfig& cfg = {});

/// Minimal measurement time versus emitter count, once with gating available
/// and once with beam-splitter attenuation as the only saturation remedy.
std::vector<CurvePoint> figure3_curve(double eta,
                                      const detection::DetectorNetwork& net,
                                      std::span<const double> emitter_grid,
                                      const PlannerConfig& cfg = {});

struct StabilityReport {
  bool ok = false;           // both constraints hold
  bool comfortable = false;  // number-stability holds with a factor-10 margin
  double t_limit_s = 0.0;    // storage_time / sqrt(N)
  double n_limit_decay = 0.0;
  const char* binding = "";  // constraint that fails (or binds next)
};

/// Check that a measurement of the given duration can treat the emitter
/// number as constant, and that decay averaging would not erase the effect.
StabilityReport stability_guard(double emitters, double storage_time_s,
                                double measurement_time_s);

}  // namespace nclight::planner
