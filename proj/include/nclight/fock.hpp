#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace nclight::fock {

/// Truncation policy for distributions with unbounded support: the vector is
/// grown until the dropped tail mass is below this bound.
inline constexpr double kTailTolerance = 1e-10;
/// A stored distribution must sum to one within this bound.
inline constexpr double kNormTolerance = 1e-12;
/// Hard cap on the number of stored photon-number terms.
inline constexpr std::size_t kMaxTerms = 1'000'000;

/// Probability vector over photon number n = 0..n_max. Diagonal states only:
/// number distributions carry everything the detection model can see.
class PhotonNumberDistribution {
public:
  /// Validates entries in [0,1] and normalization within kNormTolerance.
  static PhotonNumberDistribution from_probs(std::vector<double> probs);

  static PhotonNumberDistribution vacuum();

  /// Two-level emitter that fires at most one photon per bin.
  static PhotonNumberDistribution single_photon_emitter(double eta);

  /// Emitter with a small two-photon contribution.
  static PhotonNumberDistribution imperfect_emitter(double eta1, double eta2);

  /// Geometric (Bose-Einstein) distribution with the given mean. Pass
  /// n_max = 0 to grow the cutoff until the tail is below kTailTolerance.
  static PhotonNumberDistribution thermal(double nbar, int n_max = 0);

  /// Poisson distribution with the given mean; n_max = 0 grows automatically.
  static PhotonNumberDistribution poissonian(double mean, int n_max = 0);

  /// Binomial counting distribution for `trials` independent emitters each
  /// firing with probability p. Binomial weights evaluated through log-gamma.
  static PhotonNumberDistribution binomial(int trials, double p);

  /// Probabilistic mixture: weights must sum to one.
  static PhotonNumberDistribution mixture(
      std::span<const double> weights,
      std::span<const PhotonNumberDistribution> parts);

  int n_max() const noexcept { return static_cast<int>(probs_.size()) - 1; }
  const std::vector<double>& probs() const noexcept { return probs_; }
  double prob(int n) const noexcept;
  double mean() const noexcept;
  double variance() const noexcept;

private:
  explicit PhotonNumberDistribution(std::vector<double> probs)
      : probs_(std::move(probs)) {}

  std::vector<double> probs_;
};

/// Probability generating function E[x^n], x in [0,1]. Horner evaluation.
double pgf(const PhotonNumberDistribution& dist, double x);

/// log E[(1-s)^n] evaluated without forming 1-s, so that tiny per-mode
/// deviations from unity survive later multiplication by large mode counts.
double log_pgf_one_minus(const PhotonNumberDistribution& dist, double s);

/// Binomial loss channel with transmittance T.
PhotonNumberDistribution attenuate(const PhotonNumberDistribution& dist,
                                   double transmittance);

/// Distribution of the photon-number sum of two independent modes.
/// O(n^2); meant for oracle checks and small compositions, not hot paths.
PhotonNumberDistribution convolve(const PhotonNumberDistribution& a,
                                  const PhotonNumberDistribution& b);

/// One independent optical mode of a composite source. The parametric kinds
/// carry exact closed-form generating functions; `distribution` wraps an
/// arbitrary truncated vector.
class Mode {
public:
  static Mode distribution(PhotonNumberDistribution dist);
  static Mode emitter(double eta1, double eta2 = 0.0);
  static Mode thermal(double nbar);
  static Mode poissonian(double mean);

  /// log E[(1-s)^n] for this mode.
  double log_pgf_one_minus(double s) const;

  /// E[x^n].
  double pgf(double x) const;

  /// detectors * log_pgf_one_minus(s_arm) - log_pgf_one_minus(s_total),
  /// assembled so that a Poisson mode contributes exactly zero when
  /// s_total == detectors * s_arm. This is the per-mode building block of
  /// the nonclassicality margin.
  double criterion_margin(double s_arm, double s_total, int detectors) const;

  /// Same mode seen through a loss channel with transmittance T.
  Mode attenuated(double transmittance) const;

  double mean() const;

  /// Materializes the mode as a truncated probability vector.
  PhotonNumberDistribution to_distribution() const;

private:
  enum class Kind { general, emitter, thermal, poisson };

  Mode(Kind kind, double a, double b) : kind_(kind), a_(a), b_(b) {}
  explicit Mode(PhotonNumberDistribution dist);

  Kind kind_;
  double a_ = 0.0;  // eta1 / nbar / mean
  double b_ = 0.0;  // eta2
  std::vector<double> probs_;  // general kind only
};

/// A product of independent modes. Identical modes are stored once with a
/// multiplicity so that ensembles of 10^4 emitters stay cheap.
class SourceComposition {
public:
  SourceComposition& add(Mode mode, std::int64_t count = 1);
  SourceComposition& add(PhotonNumberDistribution dist,
                         std::int64_t count = 1);

  bool empty() const noexcept { return parts_.empty(); }
  std::int64_t total_modes() const noexcept;
  const std::vector<std::pair<Mode, std::int64_t>>& parts() const noexcept {
    return parts_;
  }

private:
  std::vector<std::pair<Mode, std::int64_t>> parts_;
};

/// log-probability that a detector subset collecting a fraction s of every
/// photon registers nothing: sum of per-mode log E[(1-s)^n].
double no_click_prob(const SourceComposition& comp, double s);

/// Margin sum over all modes; see Mode::criterion_margin.
double composition_margin(const SourceComposition& comp, double s_arm,
                          double s_total, int detectors);

}  // namespace nclight::fock
