#include "nclight/fock.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "nclight/errors.hpp"

namespace nclight::fock {

namespace {

void require_probability(double value, const char* name) {
  if (!(value >= 0.0 && value <= 1.0)) {
    throw std::invalid_argument(std::string(name) + " must lie in [0,1], got " +
                                std::to_string(value));
  }
}

/// Compensated summation; keeps 1e-12-level identities honest for long sums.
struct KahanSum {
  double sum = 0.0;
  double carry = 0.0;
  void add(double value) {
    const double y = value - carry;
    const double t = sum + y;
    carry = (t - sum) - y;
    sum = t;
  }
};

std::vector<double> normalized(std::vector<double> probs) {
  KahanSum total;
  for (double p : probs) total.add(p);
  if (total.sum <= 0.0) throw numeric_error("distribution has no mass");
  for (double& p : probs) p /= total.sum;
  return probs;
}

}  // namespace

PhotonNumberDistribution PhotonNumberDistribution::from_probs(
    std::vector<double> probs) {
  if (probs.empty()) throw std::invalid_argument("empty probability vector");
  if (probs.size() > kMaxTerms) {
    throw std::invalid_argument("probability vector exceeds term cap");
  }
  KahanSum total;
  for (double p : probs) {
    if (!(p >= 0.0 && p <= 1.0)) {
      throw std::invalid_argument("probability entry outside [0,1]");
    }
    total.add(p);
  }
  if (std::abs(total.sum - 1.0) > kNormTolerance) {
    throw std::invalid_argument("probabilities sum to " +
                                std::to_string(total.sum) + ", not 1");
  }
  return PhotonNumberDistribution(std::move(probs));
}

PhotonNumberDistribution PhotonNumberDistribution::vacuum() {
  return PhotonNumberDistribution({1.0});
}

PhotonNumberDistribution PhotonNumberDistribution::single_photon_emitter(
    double eta) {
  require_probability(eta, "eta");
  if (eta == 0.0) return vacuum();
  return PhotonNumberDistribution({1.0 - eta, eta});
}

PhotonNumberDistribution PhotonNumberDistribution::imperfect_emitter(
    double eta1, double eta2) {
  if (eta1 < 0.0 || eta2 < 0.0 || eta1 + eta2 > 1.0) {
    throw std::invalid_argument(
        "emitter probabilities must be non-negative with eta1+eta2 <= 1");
  }
  return PhotonNumberDistribution({1.0 - eta1 - eta2, eta1, eta2});
}

PhotonNumberDistribution PhotonNumberDistribution::thermal(double nbar,
                                                           int n_max) {
  if (nbar < 0.0) throw std::invalid_argument("nbar must be non-negative");
  if (n_max < 0) throw std::invalid_argument("n_max must be non-negative");
  if (nbar == 0.0) return vacuum();

  const double q = nbar / (1.0 + nbar);
  if (n_max == 0) {
    // Tail mass after cutoff K is q^{K+1}.
    const double needed = std::log(kTailTolerance) / std::log(q) - 1.0;
    if (!(needed < static_cast<double>(kMaxTerms))) {
      throw numeric_error("thermal truncation would exceed term cap; nbar=" +
                          std::to_string(nbar));
    }
    n_max = static_cast<int>(std::ceil(needed));
  }
  std::vector<double> probs(static_cast<std::size_t>(n_max) + 1);
  double p = 1.0 / (1.0 + nbar);
  for (int n = 0; n <= n_max; ++n) {
    probs[static_cast<std::size_t>(n)] = p;
    p *= q;
  }
  return PhotonNumberDistribution(normalized(std::move(probs)));
}

PhotonNumberDistribution PhotonNumberDistribution::poissonian(double mean,
                                                              int n_max) {
  if (mean < 0.0) throw std::invalid_argument("mean must be non-negative");
  if (n_max < 0) throw std::invalid_argument("n_max must be non-negative");
  if (mean == 0.0) return vacuum();

  if (n_max == 0) {
    // Start past the bulk, then extend until the tail bound holds.
    double guess = mean + 12.0 * std::sqrt(mean) + 30.0;
    while (true) {
      if (guess > static_cast<double>(kMaxTerms)) {
        throw numeric_error("poissonian truncation would exceed term cap");
      }
      const int k = static_cast<int>(guess);
      // Chernoff-style bound on P(N > k).
      const double bound =
          std::exp(-mean + k * (1.0 + std::log(mean / k))) / std::sqrt(2.0);
      if (bound < kTailTolerance * 0.1) {
        n_max = k;
        break;
      }
      guess *= 1.5;
    }
  }
  std::vector<double> probs(static_cast<std::size_t>(n_max) + 1);
  for (int n = 0; n <= n_max; ++n) {
    const double logp = -mean + n * std::log(mean) - std::lgamma(n + 1.0);
    probs[static_cast<std::size_t>(n)] = std::exp(logp);
  }
  KahanSum total;
  for (double p : probs) total.add(p);
  if (1.0 - total.sum > kTailTolerance) {
    throw numeric_error("poissonian tail above tolerance at requested n_max");
  }
  return PhotonNumberDistribution(normalized(std::move(probs)));
}

PhotonNumberDistribution PhotonNumberDistribution::binomial(int trials,
                                                            double p) {
  if (trials < 0) throw std::invalid_argument("trials must be non-negative");
  require_probability(p, "p");
  if (trials == 0 || p == 0.0) return vacuum();
  if (static_cast<std::size_t>(trials) + 1 > kMaxTerms) {
    throw std::invalid_argument("binomial size exceeds term cap");
  }
  const double lp = std::log(p);
  const double lq = std::log1p(-p);
  std::vector<double> probs(static_cast<std::size_t>(trials) + 1);
  const double lgn = std::lgamma(trials + 1.0);
  for (int k = 0; k <= trials; ++k) {
    double logterm;
    if (p == 1.0) {
      logterm = (k == trials) ? 0.0 : -std::numeric_limits<double>::infinity();
    } else {
      logterm = lgn - std::lgamma(k + 1.0) - std::lgamma(trials - k + 1.0) +
                k * lp + (trials - k) * lq;
    }
    probs[static_cast<std::size_t>(k)] = std::exp(logterm);
  }
  return PhotonNumberDistribution(normalized(std::move(probs)));
}

PhotonNumberDistribution PhotonNumberDistribution::mixture(
    std::span<const double> weights,
    std::span<const PhotonNumberDistribution> parts) {
  if (weights.size() != parts.size() || parts.empty()) {
    throw std::invalid_argument("mixture needs matching weights and parts");
  }
  KahanSum wsum;
  std::size_t len = 0;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (weights[i] < 0.0) throw std::invalid_argument("negative weight");
    wsum.add(weights[i]);
    len = std::max(len, parts[i].probs().size());
  }
  if (std::abs(wsum.sum - 1.0) > kNormTolerance) {
    throw std::invalid_argument("mixture weights must sum to 1");
  }
  std::vector<double> probs(len, 0.0);
  for (std::size_t i = 0; i < parts.size(); ++i) {
    const auto& p = parts[i].probs();
    for (std::size_t n = 0; n < p.size(); ++n) probs[n] += weights[i] * p[n];
  }
  return PhotonNumberDistribution(normalized(std::move(probs)));
}

double PhotonNumberDistribution::prob(int n) const noexcept {
  if (n < 0 || n >= static_cast<int>(probs_.size())) return 0.0;
  return probs_[static_cast<std::size_t>(n)];
}

double PhotonNumberDistribution::mean() const noexcept {
  KahanSum m;
  for (std::size_t n = 1; n < probs_.size(); ++n) {
    m.add(static_cast<double>(n) * probs_[n]);
  }
  return m.sum;
}

double PhotonNumberDistribution::variance() const noexcept {
  const double m = mean();
  KahanSum m2;
  for (std::size_t n = 1; n < probs_.size(); ++n) {
    m2.add(static_cast<double>(n) * static_cast<double>(n) * probs_[n]);
  }
  return m2.sum - m * m;
}

double pgf(const PhotonNumberDistribution& dist, double x) {
  require_probability(x, "x");
  const auto& p = dist.probs();
  double acc = 0.0;
  for (std::size_t i = p.size(); i-- > 0;) acc = acc * x + p[i];
  return std::min(acc, 1.0);
}

double log_pgf_one_minus(const PhotonNumberDistribution& dist, double s) {
  require_probability(s, "s");
  if (s == 0.0) return 0.0;
  const auto& p = dist.probs();
  // E[(1-s)^n] = 1 - sum_n p_n (1 - (1-s)^n); each term through expm1 so the
  // deficit keeps full relative precision even when s is tiny.
  const double w = std::log1p(-s);  // -inf at s == 1 is fine below
  KahanSum deficit;
  for (std::size_t n = 1; n < p.size(); ++n) {
    if (p[n] == 0.0) continue;
    deficit.add(p[n] * (-std::expm1(static_cast<double>(n) * w)));
  }
  if (deficit.sum >= 1.0) return -std::numeric_limits<double>::infinity();
  return std::log1p(-deficit.sum);
}

PhotonNumberDistribution attenuate(const PhotonNumberDistribution& dist,
                                   double transmittance) {
  require_probability(transmittance, "transmittance");
  const auto& in = dist.probs();
  if (transmittance == 1.0) return dist;
  if (transmittance == 0.0) return PhotonNumberDistribution::vacuum();

  const double lt = std::log(transmittance);
  const double lq = std::log1p(-transmittance);
  std::vector<double> out(in.size(), 0.0);
  for (std::size_t n = 0; n < in.size(); ++n) {
    if (in[n] == 0.0) continue;
    // Walk k = 0..n with the log-space binomial recurrence; immune to the
    // underflow of (1-T)^n for large n.
    double logb = static_cast<double>(n) * lq;
    for (std::size_t k = 0; k <= n; ++k) {
      out[k] += in[n] * std::exp(logb);
      if (k < n) {
        logb += lt - lq + std::log(static_cast<double>(n - k) /
                                   static_cast<double>(k + 1));
      }
    }
  }
  return PhotonNumberDistribution::from_probs(normalized(std::move(out)));
}

PhotonNumberDistribution convolve(const PhotonNumberDistribution& a,
                                  const PhotonNumberDistribution& b) {
  const auto& pa = a.probs();
  const auto& pb = b.probs();
  if (pa.size() + pb.size() - 1 > kMaxTerms) {
    throw std::invalid_argument("convolution exceeds term cap");
  }
  std::vector<double> out(pa.size() + pb.size() - 1, 0.0);
  for (std::size_t i = 0; i < pa.size(); ++i) {
    if (pa[i] == 0.0) continue;
    for (std::size_t j = 0; j < pb.size(); ++j) out[i + j] += pa[i] * pb[j];
  }
  return PhotonNumberDistribution::from_probs(normalized(std::move(out)));
}

Mode::Mode(PhotonNumberDistribution dist)
    : kind_(Kind::general), probs_(dist.probs()) {}

Mode Mode::distribution(PhotonNumberDistribution dist) {
  return Mode(std::move(dist));
}

Mode Mode::emitter(double eta1, double eta2) {
  if (eta1 < 0.0 || eta2 < 0.0 || eta1 + eta2 > 1.0) {
    throw std::invalid_argument(
        "emitter probabilities must be non-negative with eta1+eta2 <= 1");
  }
  return Mode(Kind::emitter, eta1, eta2);
}

Mode Mode::thermal(double nbar) {
  if (nbar < 0.0) throw std::invalid_argument("nbar must be non-negative");
  return Mode(Kind::thermal, nbar, 0.0);
}

Mode Mode::poissonian(double mean) {
  if (mean < 0.0) throw std::invalid_argument("mean must be non-negative");
  return Mode(Kind::poisson, mean, 0.0);
}

double Mode::log_pgf_one_minus(double s) const {
  require_probability(s, "s");
  switch (kind_) {
    case Kind::emitter: {
      // E[(1-s)^n] = 1 - s*(eta1 + eta2*(2-s))
      const double deficit = s * (a_ + b_ * (2.0 - s));
      if (deficit >= 1.0) return -std::numeric_limits<double>::infinity();
      return std::log1p(-deficit);
    }
    case Kind::thermal:
      return -std::log1p(s * a_);
    case Kind::poisson:
      return -a_ * s;
    case Kind::general: {
      const double w = std::log1p(-s);
      KahanSum deficit;
      for (std::size_t n = 1; n < probs_.size(); ++n) {
        if (probs_[n] == 0.0) continue;
        deficit.add(probs_[n] * (-std::expm1(static_cast<double>(n) * w)));
      }
      if (deficit.sum >= 1.0) return -std::numeric_limits<double>::infinity();
      return std::log1p(-deficit.sum);
    }
  }
  return 0.0;
}

double Mode::pgf(double x) const {
  require_probability(x, "x");
  return std::exp(log_pgf_one_minus(1.0 - x));
}

double Mode::criterion_margin(double s_arm, double s_total,
                              int detectors) const {
  if (kind_ == Kind::poisson) {
    // detectors*(-mean*s_arm) - (-mean*s_total); written so the difference
    // vanishes identically when the caller derives s_total as
    // detectors*s_arm, keeping Poisson backgrounds exactly margin-neutral.
    return a_ * (s_total - static_cast<double>(detectors) * s_arm);
  }
  return static_cast<double>(detectors) * log_pgf_one_minus(s_arm) -
         log_pgf_one_minus(s_total);
}

Mode Mode::attenuated(double transmittance) const {
  require_probability(transmittance, "transmittance");
  const double t = transmittance;
  switch (kind_) {
    case Kind::emitter:
      // Binomial loss on a 0/1/2-photon state stays in the family.
      return Mode(Kind::emitter, a_ * t + 2.0 * b_ * t * (1.0 - t),
                  b_ * t * t);
    case Kind::thermal:
      return Mode(Kind::thermal, a_ * t, 0.0);
    case Kind::poisson:
      return Mode(Kind::poisson, a_ * t, 0.0);
    case Kind::general: {
      auto dist = PhotonNumberDistribution::from_probs(probs_);
      return Mode(attenuate(dist, t));
    }
  }
  return *this;
}

double Mode::mean() const {
  switch (kind_) {
    case Kind::emitter:
      return a_ + 2.0 * b_;
    case Kind::thermal:
    case Kind::poisson:
      return a_;
    case Kind::general: {
      KahanSum m;
      for (std::size_t n = 1; n < probs_.size(); ++n) {
        m.add(static_cast<double>(n) * probs_[n]);
      }
      return m.sum;
    }
  }
  return 0.0;
}

PhotonNumberDistribution Mode::to_distribution() const {
  switch (kind_) {
    case Kind::emitter:
      return PhotonNumberDistribution::imperfect_emitter(a_, b_);
    case Kind::thermal:
      return PhotonNumberDistribution::thermal(a_);
    case Kind::poisson:
      return PhotonNumberDistribution::poissonian(a_);
    case Kind::general:
      return PhotonNumberDistribution::from_probs(probs_);
  }
  return PhotonNumberDistribution::vacuum();
}

SourceComposition& SourceComposition::add(Mode mode, std::int64_t count) {
  if (count < 0) throw std::invalid_argument("mode count must be >= 0");
  if (count > 0) parts_.emplace_back(std::move(mode), count);
  return *this;
}

SourceComposition& SourceComposition::add(PhotonNumberDistribution dist,
                                          std::int64_t count) {
  return add(Mode::distribution(std::move(dist)), count);
}

std::int64_t SourceComposition::total_modes() const noexcept {
  std::int64_t total = 0;
  for (const auto& [mode, count] : parts_) total += count;
  return total;
}

double no_click_prob(const SourceComposition& comp, double s) {
  require_probability(s, "s");
  double acc = 0.0;
  for (const auto& [mode, count] : comp.parts()) {
    acc += static_cast<double>(count) * mode.log_pgf_one_minus(s);
  }
  return acc;
}

double composition_margin(const SourceComposition& comp, double s_arm,
                          double s_total, int detectors) {
  double acc = 0.0;
  for (const auto& [mode, count] : comp.parts()) {
    acc += static_cast<double>(count) *
           mode.criterion_margin(s_arm, s_total, detectors);
  }
  return acc;
}

}  // namespace nclight::fock
