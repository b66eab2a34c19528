#pragma once

#include <vector>

#include "nclight/fock.hpp"

namespace nclight::criteria {

/// Outcome of the multi-detector vacuum-probability test. Log-probabilities
/// are natural logs; the distances d0, d0m, d are in base-10 log units and
/// are zero for states that do not pass the test.
struct CriterionResult {
  int detectors = 2;      // M
  double log_p0 = 0.0;    // one chosen arm silent
  double log_p0m = 0.0;   // all arms silent
  double margin = 0.0;    // detectors*log_p0 - log_p0m, natural log units
  double d0 = 0.0;
  double d0m = 0.0;
  double d = 0.0;
  bool violated = false;
  /// True when the all-arm vacuum probability is exactly zero, which puts
  /// the state infinitely far from the classical boundary.
  bool distance_unbounded = false;
};

/// Largest value of P_0 + a*P_{0xM} over classical states for a symmetric
/// M-arm split; defined for a < -1/M.
double threshold_F(int detectors, double a);

/// Mean photon number per output arm at which a coherent state attains
/// threshold_F.
double optimal_classical_mean(int detectors, double a);

/// Decide the test from the two log-probabilities. A state is flagged only
/// when the margin detectors*log_p0 - log_p0m exceeds `tolerance` (>= 0);
/// by default the inequality is strict with no epsilon.
CriterionResult evaluate(double log_p0, double log_p0m, int detectors,
                         double tolerance = 0.0);

/// Same decision, but with the margin supplied by the caller. Margins
/// assembled mode-by-mode avoid the cancellation noise of forming
/// detectors*log_p0 - log_p0m from rounded totals; every exactness-sensitive
/// path in the library goes through this overload.
CriterionResult evaluate_margin(double margin, double log_p0, double log_p0m,
                                int detectors, double tolerance = 0.0);

/// Small-efficiency approximation of the distance d for an ensemble of
/// `emitters` identical single-photon emitters.
double distance_small_eta(double emitters, double eta, int detectors);

/// One classical component: a coherent state (Poisson counting statistics,
/// parameter = mean) or a thermal state (parameter = mean).
struct ClassicalComponent {
  enum class Kind { coherent, thermal };
  Kind kind = Kind::coherent;
  double parameter = 0.0;
  double weight = 1.0;
};

/// One mode of a classical source: a finite mixture of components.
struct ClassicalMode {
  std::vector<ClassicalComponent> components;

  static ClassicalMode coherent(double mean);
  static ClassicalMode thermal(double nbar);
  static ClassicalMode mixture(std::vector<ClassicalComponent> components);
};

/// A multimode product of classical modes, optionally observed with
/// per-arm dark counts (probability exponent dark_exponent = rate * gate).
struct ClassicalState {
  std::vector<ClassicalMode> modes;
  double dark_exponent = 0.0;
};

/// Evaluate the criterion for a declared-classical state collected with
/// per-arm efficiency `arm_collection` on a symmetric split. Margins are
/// assembled per mode in closed form; coherent modes contribute exactly
/// zero, so the check cannot over-claim on boundary states.
CriterionResult classical_bound_check(const ClassicalState& state,
                                      int detectors, double arm_collection);

/// Vector-backed variant for arbitrary number distributions. Truncated
/// representations of unbounded classical states carry O(tail) margin noise;
/// use the parametric overload when exact boundary behaviour matters.
CriterionResult classical_bound_check(const fock::PhotonNumberDistribution& d,
                                      int detectors, double arm_collection);

}  // namespace nclight::criteria
