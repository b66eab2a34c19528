#pragma once

#include <span>
#include <vector>

#include "nclight/criteria.hpp"
#include "nclight/fock.hpp"

namespace nclight::detection {

/// A beam-splitter network feeding M binary click detectors. Split fractions
/// may sum to less than one (network loss); each arm has its own quantum
/// efficiency. Dark counts are independent Poisson processes per arm.
struct DetectorNetwork {
  int arms = 2;
  std::vector<double> split_fractions;   // per arm, sum <= 1
  std::vector<double> arm_efficiencies;  // per arm, in [0,1]
  double dark_rate_hz = 0.0;
  double gate_length_s = 10e-9;          // t_b
  double saturation_rate_hz = 500e3;
  double dead_time_s = 25e-9;

  /// Even split with identical arms.
  static DetectorNetwork symmetric(int arms, double arm_efficiency = 1.0);

  void validate() const;

  /// Probability that a photon at the network input is registered by `arm`.
  double effective_collection(int arm) const;

  /// True when every arm has the same effective collection (the only
  /// geometry the classical thresholds are derived for).
  bool symmetric_effective(double rel_tol = 1e-12) const;

  /// log-probability that one arm stays dark-count silent for one gate.
  double dark_silence_log() const { return -dark_rate_hz * gate_length_s; }
};

/// log-probability that every detector in `subset` is silent for one gate:
/// photonic silence through the composition PGF plus dark silence.
double arm_subset_silence(const DetectorNetwork& net,
                          const fock::SourceComposition& comp,
                          std::span<const int> subset);

/// Evaluate the nonclassicality test on the network outputs. Requires a
/// symmetric effective split; asymmetric networks still yield probabilities
/// via arm_subset_silence but no classical verdict (throws
/// unsupported_error).
criteria::CriterionResult criterion_from_network(
    const DetectorNetwork& net, const fock::SourceComposition& comp,
    double tolerance = 0.0);

}  // namespace nclight::detection
