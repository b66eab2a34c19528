#include "nclight/montecarlo.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <random>
#include <stdexcept>

#include "nclight/errors.hpp"

namespace nclight::montecarlo {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

/// splitmix64; used to derive well-separated engine seeds per partition.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

struct ArmChannel {
  double collection = 0.0;  // transmittance * split * efficiency
  double dark_click_prob = 0.0;
};

struct BinSampler {
  std::int64_t emitters = 0;
  double eta1 = 0.0;
  double eta2 = 0.0;
  double eta2_given_not1 = 0.0;
  sources::NoiseModel noise;
  std::optional<sources::DecayModel> decay;
  std::vector<double> number_cdf;  // empty when the count is fixed
  double bin_length_s = 0.0;

  std::int64_t sample_emitters(std::mt19937_64& rng) const {
    if (number_cdf.empty()) return emitters;
    const double u =
        std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    const auto it =
        std::lower_bound(number_cdf.begin(), number_cdf.end(), u);
    return static_cast<std::int64_t>(it - number_cdf.begin());
  }

  /// Photons leaving the source in one open bin at wall-bin index `bin`.
  std::int64_t sample_photons(std::mt19937_64& rng,
                              std::uint64_t bin) const {
    const std::int64_t n = sample_emitters(rng);
    double e1 = eta1;
    if (decay) {
      const double t = decay->start_time_s +
                       static_cast<double>(bin) * bin_length_s;
      e1 *= std::exp(-t / decay->storage_time_s);
    }
    std::int64_t singles = 0;
    if (n > 0 && e1 > 0.0) {
      singles = std::binomial_distribution<std::int64_t>(n, e1)(rng);
    }
    std::int64_t photons = singles;
    if (eta2 > 0.0 && n - singles > 0) {
      photons += 2 * std::binomial_distribution<std::int64_t>(
                         n - singles, eta2_given_not1)(rng);
    }
    switch (noise.kind) {
      case sources::NoiseModel::Kind::none:
        break;
      case sources::NoiseModel::Kind::per_emitter: {
        if (n > 0 && noise.nbar > 0.0) {
          // Sum of n geometric variates == Poisson mixed over Gamma(n).
          const double lambda = std::gamma_distribution<double>(
              static_cast<double>(n), noise.nbar)(rng);
          photons += std::poisson_distribution<std::int64_t>(lambda)(rng);
        }
        break;
      }
      case sources::NoiseModel::Kind::common:
        if (noise.nbar > 0.0) {
          photons += std::geometric_distribution<std::int64_t>(
              1.0 / (1.0 + noise.nbar))(rng);
        }
        break;
      case sources::NoiseModel::Kind::poissonian:
        if (noise.mean > 0.0) {
          photons += std::poisson_distribution<std::int64_t>(noise.mean)(rng);
        }
        break;
    }
    return photons;
  }
};

struct PartitionResult {
  std::vector<std::uint64_t> counts;
  std::uint64_t open_bins = 0;
};

PartitionResult simulate_range(const SimConfig& cfg, const BinSampler& sampler,
                               const std::vector<ArmChannel>& channels,
                               std::uint64_t first_bin, std::uint64_t end_bin,
                               std::uint64_t gate_period,
                               std::uint64_t dead_bins, std::uint64_t seed) {
  const int arms = cfg.net.arms;
  PartitionResult out;
  out.counts.assign(std::size_t{1} << arms, 0);
  std::mt19937_64 rng(seed);
  // Every partition starts with live detectors; cross-partition dead-time
  // coupling is deliberately dropped (single-stream mode has none).
  std::vector<std::uint64_t> dead_until(static_cast<std::size_t>(arms), 0);

  std::uint64_t bin = (first_bin % gate_period == 0)
                          ? first_bin
                          : first_bin + gate_period - first_bin % gate_period;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (; bin < end_bin; bin += gate_period) {
    const std::int64_t photons = sampler.sample_photons(rng, bin);

    std::uint32_t pattern = 0;
    std::int64_t remaining = photons;
    double remaining_prob = 1.0;
    for (int arm = 0; arm < arms; ++arm) {
      std::int64_t detected = 0;
      const double q = channels[static_cast<std::size_t>(arm)].collection;
      if (remaining > 0 && q > 0.0) {
        const double p = std::clamp(q / remaining_prob, 0.0, 1.0);
        detected =
            std::binomial_distribution<std::int64_t>(remaining, p)(rng);
        remaining -= detected;
      }
      remaining_prob -= q;

      const bool live = bin >= dead_until[static_cast<std::size_t>(arm)];
      bool click = live && detected > 0;
      const double pd =
          channels[static_cast<std::size_t>(arm)].dark_click_prob;
      if (live && !click && pd > 0.0 && unit(rng) < pd) click = true;
      if (click) {
        pattern |= (1u << arm);
        dead_until[static_cast<std::size_t>(arm)] = bin + dead_bins + 1;
      }
    }
    ++out.counts[pattern];
    ++out.open_bins;
  }
  return out;
}

}  // namespace

void SimConfig::validate() const {
  if (bins < 1) throw std::invalid_argument("need at least one bin");
  if (!(duty_cycle > 0.0 && duty_cycle <= 1.0)) {
    throw std::invalid_argument("duty cycle must lie in (0,1]");
  }
  if (partitions < 1) throw std::invalid_argument("partitions must be >= 1");
  if (!(transmittance >= 0.0 && transmittance <= 1.0)) {
    throw std::invalid_argument("transmittance must lie in [0,1]");
  }
  spec.validate();
  net.validate();
  if (net.arms > 16) {
    throw std::invalid_argument("tally table supports at most 16 arms");
  }
}

std::uint64_t SimEstimate::silent_count_arm0() const {
  std::uint64_t n = 0;
  for (std::size_t p = 0; p < counts.size(); ++p) {
    if ((p & 1u) == 0) n += counts[p];
  }
  return n;
}

SimEstimate run(const SimConfig& cfg) {
  cfg.validate();
  const std::uint64_t gate_period = std::max<std::uint64_t>(
      1, static_cast<std::uint64_t>(std::llround(1.0 / cfg.duty_cycle)));
  if ((cfg.bins + gate_period - 1) / gate_period == 0) {
    throw std::invalid_argument("configuration yields zero open bins");
  }
  const std::uint64_t dead_bins =
      (cfg.dead_time_enabled && cfg.net.dead_time_s > 0.0)
          ? static_cast<std::uint64_t>(
                std::ceil(cfg.net.dead_time_s / cfg.net.gate_length_s))
          : 0;

  std::vector<ArmChannel> channels(static_cast<std::size_t>(cfg.net.arms));
  const double dark_exponent = cfg.net.dark_rate_hz * cfg.net.gate_length_s;
  for (int arm = 0; arm < cfg.net.arms; ++arm) {
    channels[static_cast<std::size_t>(arm)].collection =
        cfg.transmittance * cfg.net.effective_collection(arm);
    channels[static_cast<std::size_t>(arm)].dark_click_prob =
        -std::expm1(-dark_exponent);
  }

  BinSampler sampler;
  sampler.emitters = cfg.spec.emitters;
  sampler.eta1 = cfg.spec.effective_eta1();
  sampler.eta2 = cfg.spec.eta2;
  sampler.eta2_given_not1 =
      (cfg.spec.eta2 > 0.0) ? cfg.spec.eta2 / (1.0 - sampler.eta1) : 0.0;
  sampler.noise = cfg.spec.noise;
  sampler.decay = cfg.spec.decay;
  sampler.bin_length_s = cfg.net.gate_length_s;
  if (cfg.spec.number_stats) {
    const auto& pmf = cfg.spec.number_stats->pmf();
    sampler.number_cdf.resize(pmf.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < pmf.size(); ++i) {
      acc += pmf[i];
      sampler.number_cdf[i] = acc;
    }
    sampler.number_cdf.back() = 1.0;
  }

  std::vector<PartitionResult> parts(
      static_cast<std::size_t>(cfg.partitions));
  if (cfg.partitions == 1) {
    parts[0] = simulate_range(cfg, sampler, channels, 0, cfg.bins,
                              gate_period, dead_bins, mix_seed(cfg.seed, 0));
  } else {
    const std::uint64_t chunk =
        (cfg.bins + cfg.partitions - 1) / cfg.partitions;
    std::vector<std::future<PartitionResult>> futures;
    futures.reserve(static_cast<std::size_t>(cfg.partitions));
    for (int p = 0; p < cfg.partitions; ++p) {
      const std::uint64_t lo = chunk * static_cast<std::uint64_t>(p);
      const std::uint64_t hi = std::min(cfg.bins, lo + chunk);
      futures.push_back(std::async(std::launch::async, [&, p, lo, hi] {
        return simulate_range(cfg, sampler, channels, lo, hi, gate_period,
                              dead_bins,
                              mix_seed(cfg.seed, static_cast<std::uint64_t>(p)));
      }));
    }
    for (int p = 0; p < cfg.partitions; ++p) {
      parts[static_cast<std::size_t>(p)] = futures[static_cast<std::size_t>(p)].get();
    }
  }

  SimEstimate est;
  est.detectors = cfg.net.arms;
  est.seed_used = cfg.seed;
  est.wall_bins = cfg.bins;
  est.counts.assign(std::size_t{1} << cfg.net.arms, 0);
  for (const auto& part : parts) {
    est.open_bins += part.open_bins;
    for (std::size_t i = 0; i < est.counts.size(); ++i) {
      est.counts[i] += part.counts[i];
    }
  }

  const double n = static_cast<double>(est.open_bins);
  const double k0 = static_cast<double>(est.silent_count_arm0());
  const double km = static_cast<double>(est.counts[0]);
  est.log_p0_hat = k0 > 0 ? std::log(k0 / n) : -kInf;
  est.log_p0m_hat = km > 0 ? std::log(km / n) : -kInf;
  est.se_log_p0 = k0 > 0 ? std::sqrt((n - k0) / (k0 * n)) : kInf;
  est.se_log_p0m = km > 0 ? std::sqrt((n - km) / (km * n)) : kInf;
  return est;
}

Significance significance(const SimEstimate& est, int detectors) {
  if (detectors != est.detectors) {
    throw std::invalid_argument("detector count does not match the estimate");
  }
  Significance sig;
  const auto result =
      criteria::evaluate(est.log_p0_hat, est.log_p0m_hat, detectors);
  if (!result.violated) {
    sig.note = "point estimate inside the classical region";
    return sig;
  }
  if (result.distance_unbounded) {
    sig.unbounded = true;
    sig.d = kInf;
    sig.ratio = kInf;
    sig.note = "no coincident-silence events observed";
    return sig;
  }
  sig.d = result.d;

  const double n = static_cast<double>(est.open_bins);
  const double p0 = std::exp(est.log_p0_hat);
  const double p0m = std::exp(est.log_p0m_hat);
  const double m = static_cast<double>(detectors);
  const double v00 = (1.0 - p0) / (p0 * n);
  const double vmm = (1.0 - p0m) / (p0m * n);
  // Var(ln P0_hat - ln P0M_hat / M) with Cov(ln P0_hat, ln P0M_hat) = v00*n
  // ... the all-silent event being a sub-event of the arm-0-silent event.
  const double var_delta = v00 * (1.0 - 2.0 / m) + vmm / (m * m);
  constexpr double kLn10 = 2.302585092994045684;
  sig.sigma_d = std::sqrt((m * m + 1.0) * std::max(var_delta, 0.0)) / kLn10;
  sig.ratio = sig.sigma_d > 0.0 ? sig.d / sig.sigma_d : kInf;
  if (sig.sigma_d == 0.0) {
    sig.unbounded = true;
    sig.note = "vanishing standard error";
  }
  return sig;
}

std::uint64_t gating_period(const detection::DetectorNetwork& net,
                            double any_click_prob, double emission_cycle_s) {
  net.validate();
  if (!(any_click_prob >= 0.0 && any_click_prob <= 1.0)) {
    throw std::invalid_argument("click probability must lie in [0,1]");
  }
  if (!(emission_cycle_s > 0.0)) {
    throw std::invalid_argument("emission cycle must be positive");
  }
  const double floor_cycle = emission_cycle_s / net.gate_length_s;
  const double floor_rate =
      any_click_prob / (net.saturation_rate_hz * net.gate_length_s);
  const double k = std::max({1.0, floor_cycle, floor_rate});
  return static_cast<std::uint64_t>(std::ceil(k - 1e-9));
}

}  // namespace nclight::montecarlo
