#include <array>
#include <bit>
#include <cmath>
#include <stdexcept>
#include <vector>

#include <doctest.h>

#include "nclight/detection.hpp"
#include "nclight/montecarlo.hpp"
#include "nclight/sources.hpp"

using namespace nclight;
using detection::DetectorNetwork;
using montecarlo::SimConfig;

namespace {

SimConfig base_config(std::int64_t emitters, double eta, std::uint64_t bins,
                      std::uint64_t seed) {
  SimConfig cfg;
  cfg.seed = seed;
  cfg.bins = bins;
  cfg.spec.emitters = emitters;
  cfg.spec.eta1 = eta;
  cfg.net = DetectorNetwork::symmetric(2);
  cfg.net.dead_time_s = 0.0;
  return cfg;
}

/// Analytic pattern probabilities by inclusion-exclusion over silent subsets.
std::vector<double> pattern_probs(const DetectorNetwork& net,
                                  const fock::SourceComposition& comp) {
  const int arms = net.arms;
  const std::size_t size = std::size_t{1} << arms;
  std::vector<double> silent(size, 1.0);  // P(all arms in subset silent)
  for (std::size_t mask = 1; mask < size; ++mask) {
    std::vector<int> subset;
    for (int a = 0; a < arms; ++a) {
      if (mask & (std::size_t{1} << a)) subset.push_back(a);
    }
    silent[mask] = std::exp(detection::arm_subset_silence(
        net, comp, std::span<const int>(subset)));
  }
  // P(pattern p) = sum over supersets of the silent set, signed.
  std::vector<double> probs(size, 0.0);
  for (std::size_t pattern = 0; pattern < size; ++pattern) {
    const std::size_t silent_set = ~pattern & (size - 1);
    double acc = 0.0;
    const std::size_t clicking = pattern;
    // Subsets of the clicking set, inclusion-exclusion.
    std::size_t sub = clicking;
    while (true) {
      const int bits = std::popcount(sub);
      acc += ((bits % 2) ? -1.0 : 1.0) * silent[silent_set | sub];
      if (sub == 0) break;
      sub = (sub - 1) & clicking;
    }
    probs[pattern] = acc;
  }
  return probs;
}

}  // namespace

TEST_CASE("sim config validation") {
  auto cfg = base_config(10, 0.1, 0, 1);
  CHECK_THROWS_AS(montecarlo::run(cfg), std::invalid_argument);
  cfg.bins = 100;
  cfg.duty_cycle = 0.0;
  CHECK_THROWS_AS(montecarlo::run(cfg), std::invalid_argument);
}

TEST_CASE("silent source gives silent tallies") {
  auto cfg = base_config(100, 0.0, 20'000, 7);
  const auto est = montecarlo::run(cfg);
  CHECK(est.counts[0] == est.open_bins);
  CHECK(est.log_p0m_hat == 0.0);
}

TEST_CASE("one photon never produces a coincidence") {
  auto cfg = base_config(1, 1.0, 50'000, 11);
  const auto est = montecarlo::run(cfg);
  CHECK(est.counts[3] == 0);  // both arms clicking is impossible
  CHECK(est.counts[0] == 0);  // the photon always lands somewhere
}

TEST_CASE("identical seed and config give identical tallies") {
  auto cfg = base_config(500, 0.01, 100'000, 42);
  cfg.spec.noise = sources::NoiseModel::common(0.1);
  const auto a = montecarlo::run(cfg);
  const auto b = montecarlo::run(cfg);
  CHECK(a.counts == b.counts);
  const auto c = montecarlo::run([&] {
    auto other = cfg;
    other.seed = 43;
    return other;
  }());
  CHECK(a.counts != c.counts);
}

TEST_CASE("estimates converge to the analytic log-probabilities") {
  auto cfg = base_config(1000, 0.002, 2'000'000, 2025);
  const auto est = montecarlo::run(cfg);
  sources::SourceSpec spec;
  spec.emitters = 1000;
  spec.eta1 = 0.002;
  const auto exact = sources::vacuum_logprobs(spec, 2, 1.0, 1.0);
  CHECK(std::abs(est.log_p0m_hat - exact.log_p0m) < 3.0 * est.se_log_p0m);
  CHECK(std::abs(est.log_p0_hat - exact.log_p0) < 3.0 * est.se_log_p0);
}

TEST_CASE("pattern tallies match inclusion-exclusion probabilities") {
  auto cfg = base_config(50, 0.02, 400'000, 99);
  cfg.net.dark_rate_hz = 2e5;  // visible dark-click probability
  cfg.spec.noise = sources::NoiseModel::common(0.3);
  const auto est = montecarlo::run(cfg);
  const auto comp = sources::to_composition(cfg.spec, cfg.transmittance);
  const auto probs = pattern_probs(cfg.net, comp);
  const double n = static_cast<double>(est.open_bins);
  double chi2 = 0.0;
  for (std::size_t p = 0; p < probs.size(); ++p) {
    const double expected = n * probs[p];
    REQUIRE(expected > 5.0);
    const double diff = static_cast<double>(est.counts[p]) - expected;
    chi2 += diff * diff / expected;
  }
  CHECK(chi2 < 11.345);  // chi-square, 3 dof, 1% point
}

TEST_CASE("duty cycling opens every k-th bin") {
  auto cfg = base_config(10, 0.1, 1'000, 3);
  cfg.duty_cycle = 0.25;
  const auto est = montecarlo::run(cfg);
  CHECK(est.open_bins == 250);
  CHECK(est.wall_bins == 1'000);
  std::uint64_t total = 0;
  for (auto c : est.counts) total += c;
  CHECK(total == est.open_bins);
}

TEST_CASE("dead time suppresses clicks and never raises the rate") {
  auto with = base_config(50, 0.2, 300'000, 5);
  with.net.dead_time_s = 25e-9;  // three bins at 10 ns
  auto without = with;
  without.dead_time_enabled = false;
  const auto est_with = montecarlo::run(with);
  const auto est_without = montecarlo::run(without);
  const auto clicks = [](const montecarlo::SimEstimate& est) {
    std::uint64_t total = 0;
    for (std::size_t p = 1; p < est.counts.size(); ++p) {
      total += est.counts[p] * static_cast<std::uint64_t>(std::popcount(p));
    }
    return total;
  };
  CHECK(clicks(est_with) < clicks(est_without));

  // With gating slower than the dead time the two models agree bin-by-bin.
  auto gated = with;
  gated.duty_cycle = 0.2;  // every 5th bin, dead window spans 3 bins
  auto gated_off = gated;
  gated_off.dead_time_enabled = false;
  CHECK(montecarlo::run(gated).counts == montecarlo::run(gated_off).counts);
}

TEST_CASE("standard error scales as the inverse square root of bins") {
  const std::array<std::uint64_t, 3> bins = {100'000, 400'000, 1'600'000};
  std::array<double, 3> ses{};
  for (std::size_t i = 0; i < bins.size(); ++i) {
    auto cfg = base_config(100, 0.01, bins[i], 17);
    ses[i] = montecarlo::run(cfg).se_log_p0m;
  }
  CHECK(ses[0] / ses[1] == doctest::Approx(2.0).epsilon(0.1));
  CHECK(ses[1] / ses[2] == doctest::Approx(2.0).epsilon(0.1));
}

TEST_CASE("partitioned run matches the analytic expectations") {
  auto cfg = base_config(200, 0.01, 1'000'000, 23);
  cfg.partitions = 4;
  const auto est = montecarlo::run(cfg);
  CHECK(est.open_bins == 1'000'000);
  sources::SourceSpec spec;
  spec.emitters = 200;
  spec.eta1 = 0.01;
  const auto exact = sources::vacuum_logprobs(spec, 2, 1.0, 1.0);
  CHECK(std::abs(est.log_p0m_hat - exact.log_p0m) < 4.0 * est.se_log_p0m);
}

TEST_CASE("significance of a violating run grows with bins") {
  auto small = base_config(100, 0.05, 200'000, 31);
  auto large = small;
  large.bins = 800'000;
  const auto sig_small =
      montecarlo::significance(montecarlo::run(small), 2);
  const auto sig_large =
      montecarlo::significance(montecarlo::run(large), 2);
  REQUIRE(sig_small.ratio > 0.0);
  CHECK(sig_large.ratio / sig_small.ratio == doctest::Approx(2.0).epsilon(0.2));
}

TEST_CASE("reported sigma_d matches the spread of repeated runs") {
  // The delta-method variance (including the covariance between the two
  // log estimates) should reproduce the run-to-run scatter of d-hat.
  auto cfg = base_config(20, 0.2, 50'000, 0);
  std::vector<double> ds;
  double sigma_sum = 0.0;
  const int runs = 200;
  for (int r = 0; r < runs; ++r) {
    cfg.seed = 5000 + static_cast<std::uint64_t>(r);
    const auto sig = montecarlo::significance(montecarlo::run(cfg), 2);
    REQUIRE(sig.ratio > 0.0);
    ds.push_back(sig.d);
    sigma_sum += sig.sigma_d;
  }
  double mean = 0.0;
  for (double d : ds) mean += d;
  mean /= runs;
  double var = 0.0;
  for (double d : ds) var += (d - mean) * (d - mean);
  var /= (runs - 1);
  const double empirical = std::sqrt(var);
  const double reported = sigma_sum / runs;
  CHECK(empirical / reported == doctest::Approx(1.0).epsilon(0.2));
}

TEST_CASE("significance of a classical source reports zero") {
  auto cfg = base_config(0, 0.0, 100'000, 13);
  cfg.spec.noise = sources::NoiseModel::common(0.5);
  const auto sig = montecarlo::significance(montecarlo::run(cfg), 2);
  CHECK(sig.ratio == 0.0);
  CHECK_FALSE(sig.note.empty());
}

TEST_CASE("two-photon emitters raise the coincidence rate") {
  auto pure = base_config(100, 0.01, 500'000, 57);
  auto doubled = pure;
  doubled.spec.eta2 = 0.002;
  const auto est_pure = montecarlo::run(pure);
  const auto est_doubled = montecarlo::run(doubled);
  CHECK(est_doubled.counts[3] > est_pure.counts[3]);
}

TEST_CASE("gating period helper respects both limits") {
  auto net = DetectorNetwork::symmetric(2);
  net.gate_length_s = 10e-9;
  net.saturation_rate_hz = 5e5;
  // Emission-cycle floor: never faster than once per 100 ns.
  CHECK(montecarlo::gating_period(net, 1e-6, 100e-9) == 10);
  // Rate-limited: P(any click)/(k*t_b) <= saturation.
  CHECK(montecarlo::gating_period(net, 1.0, 100e-9) == 200);
  CHECK(montecarlo::gating_period(net, 0.5, 100e-9) == 100);
}
