#include <cmath>
#include <random>
#include <vector>

#include <doctest.h>

#include "nclight/errors.hpp"
#include "nclight/fock.hpp"

using nclight::fock::attenuate;
using nclight::fock::convolve;
using nclight::fock::log_pgf_one_minus;
using nclight::fock::Mode;
using nclight::fock::no_click_prob;
using nclight::fock::pgf;
using nclight::fock::PhotonNumberDistribution;
using nclight::fock::SourceComposition;

namespace {

PhotonNumberDistribution random_distribution(std::mt19937_64& rng,
                                             int max_terms) {
  std::uniform_int_distribution<int> len(1, max_terms);
  std::uniform_real_distribution<double> mass(0.0, 1.0);
  std::vector<double> probs(static_cast<std::size_t>(len(rng)) + 1);
  double total = 0.0;
  for (double& p : probs) {
    p = mass(rng);
    total += p;
  }
  for (double& p : probs) p /= total;
  return PhotonNumberDistribution::from_probs(probs);
}

}  // namespace

TEST_CASE("single photon emitter construction") {
  CHECK(PhotonNumberDistribution::single_photon_emitter(0.0).probs() ==
        std::vector<double>{1.0});
  const auto pure = PhotonNumberDistribution::single_photon_emitter(1.0);
  CHECK(pure.prob(0) == 0.0);
  CHECK(pure.prob(1) == 1.0);
  const auto d = PhotonNumberDistribution::single_photon_emitter(0.2);
  CHECK(d.prob(0) == doctest::Approx(0.8).epsilon(1e-15));
  CHECK(d.prob(1) == doctest::Approx(0.2).epsilon(1e-15));
  CHECK_THROWS_AS(PhotonNumberDistribution::single_photon_emitter(-0.1),
                  std::invalid_argument);
  CHECK_THROWS_AS(PhotonNumberDistribution::single_photon_emitter(1.1),
                  std::invalid_argument);
}

TEST_CASE("imperfect emitter construction") {
  const auto a = PhotonNumberDistribution::imperfect_emitter(0.1, 0.0);
  CHECK(a.prob(0) == doctest::Approx(0.9).epsilon(1e-15));
  CHECK(a.prob(1) == doctest::Approx(0.1).epsilon(1e-15));
  CHECK(a.prob(2) == 0.0);
  const auto b = PhotonNumberDistribution::imperfect_emitter(0.01, 0.0001);
  CHECK(b.prob(0) == doctest::Approx(0.9899).epsilon(1e-15));
  CHECK(b.prob(2) == doctest::Approx(0.0001).epsilon(1e-15));
  CHECK_THROWS_AS(PhotonNumberDistribution::imperfect_emitter(0.5, 0.6),
                  std::invalid_argument);
}

TEST_CASE("thermal distribution") {
  CHECK(PhotonNumberDistribution::thermal(0.0).probs() ==
        std::vector<double>{1.0});
  const auto d = PhotonNumberDistribution::thermal(1.0);
  for (int n = 0; n <= 10; ++n) {
    CHECK(d.prob(n) == doctest::Approx(std::pow(2.0, -(n + 1))).epsilon(1e-9));
  }
  CHECK(PhotonNumberDistribution::thermal(0.3).mean() ==
        doctest::Approx(0.3).epsilon(1e-9));
  CHECK_THROWS_AS(PhotonNumberDistribution::thermal(-0.5),
                  std::invalid_argument);
  CHECK_THROWS_AS(PhotonNumberDistribution::thermal(1e6),
                  nclight::numeric_error);
}

TEST_CASE("poissonian distribution") {
  CHECK(PhotonNumberDistribution::poissonian(0.0).probs() ==
        std::vector<double>{1.0});
  const auto d = PhotonNumberDistribution::poissonian(1.0);
  CHECK(d.prob(0) == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));
  const auto two = PhotonNumberDistribution::poissonian(2.0);
  CHECK(two.variance() == doctest::Approx(2.0).epsilon(1e-9));
  CHECK(two.mean() == doctest::Approx(2.0).epsilon(1e-9));
  CHECK_THROWS_AS(PhotonNumberDistribution::poissonian(-1.0),
                  std::invalid_argument);
}

TEST_CASE("binomial distribution basics") {
  const auto d = PhotonNumberDistribution::binomial(5, 0.3);
  CHECK(d.mean() == doctest::Approx(1.5).epsilon(1e-12));
  CHECK(d.variance() == doctest::Approx(5 * 0.3 * 0.7).epsilon(1e-12));
  CHECK(PhotonNumberDistribution::binomial(3, 1.0).prob(3) ==
        doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("attenuation basics") {
  const auto d = PhotonNumberDistribution::thermal(0.8);
  const auto same = attenuate(d, 1.0);
  CHECK(same.probs() == d.probs());
  CHECK(attenuate(d, 0.0).probs() == std::vector<double>{1.0});

  // One photon under loss behaves like a dimmer emitter.
  const auto thinned =
      attenuate(PhotonNumberDistribution::single_photon_emitter(0.6), 0.5);
  CHECK(thinned.prob(1) == doctest::Approx(0.3).epsilon(1e-12));
  CHECK(thinned.prob(0) == doctest::Approx(0.7).epsilon(1e-12));
}

TEST_CASE("attenuation composes multiplicatively") {
  std::mt19937_64 rng(71);
  std::uniform_real_distribution<double> t(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    const auto d = random_distribution(rng, 12);
    const double t1 = t(rng), t2 = t(rng);
    const auto once = attenuate(d, t1 * t2);
    const auto twice = attenuate(attenuate(d, t1), t2);
    for (int n = 0; n <= std::max(once.n_max(), twice.n_max()); ++n) {
      CHECK(once.prob(n) == doctest::Approx(twice.prob(n)).epsilon(1e-12));
    }
  }
}

TEST_CASE("attenuation scales the mean") {
  const auto d = PhotonNumberDistribution::poissonian(3.0);
  CHECK(attenuate(d, 0.25).mean() ==
        doctest::Approx(0.25 * d.mean()).epsilon(1e-10));
}

TEST_CASE("pgf basics and closed forms") {
  const auto d = PhotonNumberDistribution::thermal(0.7);
  CHECK(pgf(d, 1.0) == doctest::Approx(1.0).epsilon(1e-12));
  // Geometric series: E[(1-s)^n] = 1/(1+s*nbar).
  CHECK(pgf(d, 1.0 - 0.3) == doctest::Approx(1.0 / 1.21).epsilon(1e-9));
  const auto e = PhotonNumberDistribution::single_photon_emitter(0.4);
  CHECK(pgf(e, 1.0 - 0.5) == doctest::Approx(1.0 - 0.4 * 0.5).epsilon(1e-15));
}

TEST_CASE("pgf is monotone in x") {
  std::mt19937_64 rng(1234);
  for (int trial = 0; trial < 50; ++trial) {
    const auto d = random_distribution(rng, 20);
    double prev = pgf(d, 0.0);
    for (int i = 1; i <= 20; ++i) {
      const double x = i / 20.0;
      const double value = pgf(d, x);
      CHECK(value >= prev - 1e-14);
      prev = value;
    }
  }
}

TEST_CASE("pgf commutes with attenuation") {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    const auto d = random_distribution(rng, 10);
    const double t = u(rng);
    const double x = u(rng);
    CHECK(pgf(attenuate(d, t), x) ==
          doctest::Approx(pgf(d, 1.0 - t * (1.0 - x))).epsilon(1e-12));
  }
}

TEST_CASE("no-click probability of identical emitters") {
  SourceComposition comp;
  comp.add(Mode::emitter(1.0), 40);
  const double eta_det = 0.37;
  CHECK(no_click_prob(comp, eta_det) ==
        doctest::Approx(40.0 * std::log1p(-eta_det)).epsilon(1e-12));
  const double per_arm = eta_det / 2.0;
  CHECK(no_click_prob(comp, per_arm) ==
        doctest::Approx(40.0 * std::log1p(-per_arm)).epsilon(1e-12));
}

TEST_CASE("no-click probability edge cases") {
  SourceComposition empty;
  CHECK(no_click_prob(empty, 0.5) == 0.0);
  SourceComposition comp;
  comp.add(PhotonNumberDistribution::thermal(2.0), 3);
  CHECK(no_click_prob(comp, 0.0) == 0.0);
}

TEST_CASE("composition law against the convolution oracle") {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 25; ++trial) {
    SourceComposition comp;
    PhotonNumberDistribution joint = PhotonNumberDistribution::vacuum();
    const int k = 2 + trial % 3;
    for (int i = 0; i < k; ++i) {
      const auto part = random_distribution(rng, 6);
      comp.add(part);
      joint = convolve(joint, part);
    }
    const double s = u(rng);
    // Product rule: the summed log no-click equals the joint-distribution
    // expectation E[(1-s)^n] computed the brute-force way.
    CHECK(no_click_prob(comp, s) ==
          doctest::Approx(std::log(pgf(joint, 1.0 - s))).epsilon(1e-12));
  }
}

TEST_CASE("analytic modes agree with their materialized distributions") {
  const std::vector<Mode> modes = {
      Mode::emitter(0.2, 0.05), Mode::thermal(0.9), Mode::poissonian(1.7)};
  for (const auto& mode : modes) {
    const auto dist = mode.to_distribution();
    for (double s : {0.0, 1e-6, 0.2, 0.77, 1.0}) {
      CHECK(mode.log_pgf_one_minus(s) ==
            doctest::Approx(log_pgf_one_minus(dist, s)).epsilon(1e-9));
    }
  }
}

TEST_CASE("analytic mode attenuation matches the loss channel") {
  const std::vector<Mode> modes = {
      Mode::emitter(0.3, 0.1), Mode::thermal(1.4), Mode::poissonian(0.6)};
  for (const auto& mode : modes) {
    const auto direct = mode.attenuated(0.35).to_distribution();
    const auto channel = attenuate(mode.to_distribution(), 0.35);
    for (int n = 0; n <= direct.n_max(); ++n) {
      CHECK(direct.prob(n) == doctest::Approx(channel.prob(n)).epsilon(1e-9));
    }
  }
}

TEST_CASE("log_pgf_one_minus survives tiny collection with huge counts") {
  // 1e4 emitters each deviating from vacuum by 1e-9: the product must keep
  // full precision instead of collapsing to log(1) = 0.
  SourceComposition comp;
  comp.add(Mode::emitter(1e-6), 10'000);
  const double s = 1e-3;
  CHECK(no_click_prob(comp, s) ==
        doctest::Approx(10'000 * std::log1p(-1e-6 * 1e-3)).epsilon(1e-12));
  CHECK(no_click_prob(comp, s) != 0.0);
}

TEST_CASE("distribution validation") {
  CHECK_THROWS_AS(PhotonNumberDistribution::from_probs({0.5, 0.4}),
                  std::invalid_argument);
  CHECK_THROWS_AS(PhotonNumberDistribution::from_probs({1.2, -0.2}),
                  std::invalid_argument);
  CHECK_THROWS_AS(PhotonNumberDistribution::from_probs({}),
                  std::invalid_argument);
}

TEST_CASE("mixture construction") {
  const std::vector<PhotonNumberDistribution> parts = {
      PhotonNumberDistribution::poissonian(1.0),
      PhotonNumberDistribution::poissonian(3.0)};
  const std::vector<double> weights = {0.5, 0.5};
  const auto mix = PhotonNumberDistribution::mixture(weights, parts);
  CHECK(mix.mean() == doctest::Approx(2.0).epsilon(1e-9));
  CHECK(pgf(mix, 0.4) ==
        doctest::Approx(0.5 * pgf(parts[0], 0.4) + 0.5 * pgf(parts[1], 0.4))
            .epsilon(1e-12));
}
