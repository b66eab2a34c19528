#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "nclight/criteria.hpp"
#include "nclight/fock.hpp"

namespace nclight::sources {

/// Background-noise geometry for an emitter ensemble.
struct NoiseModel {
  enum class Kind {
    none,
    per_emitter,  // one thermal mode accompanying every emitter
    common,       // a single thermal mode shared by the whole ensemble
    poissonian    // a single Poisson mode (margin-neutral background)
  };
  Kind kind = Kind::none;
  double nbar = 0.0;  // thermal mean (per_emitter/common)
  double mean = 0.0;  // Poisson mean (poissonian)

  static NoiseModel none() { return {}; }
  static NoiseModel per_emitter(double nbar);
  static NoiseModel common(double nbar);
  static NoiseModel poissonian(double mean);
};

/// Exponential loss of emitters from the ensemble during a measurement
/// window [start_time_s, start_time_s + duration_s].
struct DecayModel {
  double storage_time_s = 0.0;
  double start_time_s = 0.0;
  double duration_s = 0.0;
};

/// Independent per-emitter efficiency fluctuation, uniform on [lo, hi].
struct EtaFluctuation {
  double lo = 0.0;
  double hi = 0.0;
  double mean() const { return 0.5 * (lo + hi); }
};

/// Distribution of the emitter count N.
class NumberStatistics {
public:
  static NumberStatistics point_mass(int n);
  static NumberStatistics poissonian(double mean);
  static NumberStatistics binomial(int trials, double p);
  static NumberStatistics geometric(double mean);
  static NumberStatistics from_pmf(std::vector<double> pmf);

  const std::vector<double>& pmf() const noexcept { return pmf_; }
  double mean() const;
  double variance() const;
  /// E[g^N] for g in [0,1].
  double expected_power(double g) const;

private:
  explicit NumberStatistics(std::vector<double> pmf) : pmf_(std::move(pmf)) {}
  std::vector<double> pmf_;
};

/// Declarative description of an emitter ensemble.
struct SourceSpec {
  std::int64_t emitters = 0;  // N (ignored when number_stats is set)
  double eta1 = 0.0;          // single-photon probability per emitter per bin
  double eta2 = 0.0;          // two-photon probability per emitter per bin
  NoiseModel noise;
  std::optional<DecayModel> decay;
  std::optional<EtaFluctuation> eta_fluctuation;
  std::optional<NumberStatistics> number_stats;

  /// Throws std::invalid_argument on out-of-range or unsupported combos.
  void validate() const;
  /// eta1 with any declared fluctuation replaced by its mean.
  double effective_eta1() const;
};

struct VacuumLogProbs {
  double log_p0 = 0.0;   // one chosen arm of the symmetric split silent
  double log_p0m = 0.0;  // all arms silent
};

/// Exact log vacuum probabilities for the ensemble behind a symmetric
/// `detectors`-arm split. `detection_efficiency` is the probability that an
/// emitted photon reaches the detector bank; `transmittance` is a further
/// deliberate attenuation. Both apply to signal and background alike.
VacuumLogProbs vacuum_logprobs(const SourceSpec& spec, int detectors,
                               double detection_efficiency,
                               double transmittance);

/// detectors*log_p0 - log_p0m assembled mode-by-mode (exact for Poisson
/// backgrounds; see fock::Mode::criterion_margin).
double criterion_margin(const SourceSpec& spec, int detectors,
                        double detection_efficiency, double transmittance);

/// Full evaluation through vacuum_logprobs + criterion_margin.
criteria::CriterionResult evaluate_source(const SourceSpec& spec,
                                          int detectors,
                                          double detection_efficiency,
                                          double transmittance,
                                          double tolerance = 0.0);

/// The ensemble as a product of fock modes with `transmittance` folded into
/// the mode parameters. Rejects decay or emitter-count fluctuation, which
/// have no fixed-mode representation.
fock::SourceComposition to_composition(const SourceSpec& spec,
                                       double transmittance = 1.0);

/// Minimal per-emitter efficiency at which noise accompanying each emitter
/// stops masking the ensemble: nbar/(1+nbar), independent of N.
double noise_threshold_per_emitter(double nbar);

/// Numeric verifier for the above: bisection on the criterion margin.
double noise_threshold_per_emitter_numeric(double nbar, std::int64_t emitters,
                                           int detectors = 2);

/// Minimal efficiency against a common thermal background, found by
/// bisection; approaches nbar/sqrt(N) for weak noise.
double noise_threshold_common(double nbar, std::int64_t emitters,
                              int detectors = 2);

struct AttenuationRobustness {
  enum class Kind {
    absolute,   // survives any transmittance > 0
    threshold,  // survives for transmittance > t_min
    never       // masked at every physical transmittance
  };
  Kind kind = Kind::threshold;
  double t_min = 0.0;  // raw (nbar-eta)/(eta*nbar), also kept for `never`
};

/// Robustness of the per-emitter-noise ensemble against attenuation.
AttenuationRobustness attenuation_robustness(double eta, double nbar);

/// Numeric verification hook: bisection on transmittance for the
/// per-emitter-noise ensemble.
double attenuation_threshold_numeric(double eta, double nbar,
                                     int detectors = 2);

/// Criterion for an ensemble whose emitter count fluctuates with the given
/// statistics; expectations over N are exact sums over the pmf.
criteria::CriterionResult fluctuating_N_criterion(
    const NumberStatistics& stats, double eta1, double eta2, int detectors);

/// Variance bound factor 1 - 2*eta2/eta1^2: emitter-number statistics must
/// satisfy V(N) < factor * <N> for the ensemble to stay detectable.
double subpoissonian_bound(double eta1, double eta2);

/// Photon-number distribution of N decaying emitters at time t; equals the
/// binomial ensemble with efficiency eta*exp(-t/storage_time).
fock::PhotonNumberDistribution decay_distribution(int emitters, double eta,
                                                  double storage_time_s,
                                                  double t_s);

/// Time-averaged log vacuum probabilities over a measurement window during
/// which the emitter number decays; adaptive quadrature, relative error
/// below 1e-10.
VacuumLogProbs averaged_vacuum(std::int64_t emitters, double eta,
                               double storage_time_s, double start_time_s,
                               double duration_s, int detectors);

/// Largest emitter count for which decay averaging over a window of length
/// duration_s does not wash out the criterion (small-efficiency limit).
double max_emitters_decay(double duration_s, double storage_time_s);

/// Leading small-window expansion of max_emitters_decay:
/// 12*(storage_time/duration)^2.
double max_emitters_decay_small_time(double duration_s,
                                     double storage_time_s);

/// Vacuum probabilities when per-emitter efficiencies fluctuate
/// independently around a common mean: only the mean enters.
VacuumLogProbs fluctuating_eta_vacuum(double mean_eta, std::int64_t emitters,
                                      int detectors);

struct McEstimate {
  double log_p0 = 0.0;
  double log_p0m = 0.0;
  double se_log_p0 = 0.0;
  double se_log_p0m = 0.0;
  std::int64_t draws = 0;
};

/// Sampling verifier for fluctuating_eta_vacuum: draws per-emitter
/// efficiencies i.i.d. and averages the exact conditional vacuum
/// probabilities.
McEstimate fluctuating_eta_mc(const EtaFluctuation& fluct, int emitters,
                              int detectors, std::int64_t draws,
                              std::uint64_t seed);

}  // namespace nclight::sources
