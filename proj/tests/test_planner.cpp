#include <cmath>
#include <cstring>
#include <stdexcept>
#include <vector>

#include <doctest.h>

#include "nclight/errors.hpp"
#include "nclight/montecarlo.hpp"
#include "nclight/planner.hpp"

using namespace nclight;
using detection::DetectorNetwork;
using planner::PlannerConfig;
using planner::Regime;

namespace {

sources::SourceSpec ensemble(std::int64_t n, double eta) {
  sources::SourceSpec spec;
  spec.emitters = n;
  spec.eta1 = eta;
  return spec;
}

DetectorNetwork trapped_ion_network() {
  auto net = DetectorNetwork::symmetric(2);
  net.gate_length_s = 10e-9;
  net.saturation_rate_hz = 500e3;
  return net;
}

}  // namespace

TEST_CASE("time scales with the square of the target ratio") {
  const auto net = trapped_ion_network();
  const auto spec = ensemble(100, 0.05);
  const double t3 = planner::time_to_significance(spec, net, 1.0, 3.0);
  const double t6 = planner::time_to_significance(spec, net, 1.0, 6.0);
  CHECK(t6 / t3 == doctest::Approx(4.0).epsilon(1e-9));
}

TEST_CASE("doubling the ensemble at fixed flux quadruples the time") {
  const auto net = trapped_ion_network();
  const double eta = 0.002;
  const double flux = 4.0;
  const std::int64_t n1 = 20'000, n2 = 40'000;
  const double t1 = planner::time_to_significance(
      ensemble(n1, eta), net, flux / (n1 * eta), 3.0);
  const double t2 = planner::time_to_significance(
      ensemble(n2, eta), net, flux / (n2 * eta), 3.0);
  CHECK(t2 / t1 == doctest::Approx(4.0).epsilon(0.15));
}

TEST_CASE("dark counts cost measurement time but never the verdict") {
  auto net = trapped_ion_network();
  const auto spec = ensemble(100, 0.05);
  const double clean = planner::time_to_significance(spec, net, 1.0, 3.0);
  net.dark_rate_hz = 1e5;
  const double noisy = planner::time_to_significance(spec, net, 1.0, 3.0);
  CHECK(noisy > clean);
}

TEST_CASE("non-violating sources are infeasible") {
  const auto net = trapped_ion_network();
  sources::SourceSpec noisy = ensemble(10, 0.01);
  noisy.noise = sources::NoiseModel::per_emitter(0.5);
  CHECK_THROWS_AS(planner::time_to_significance(noisy, net, 1.0, 3.0),
                  nclight::infeasible_error);
  CHECK_THROWS_AS(planner::optimize_attenuation(noisy, net, 3.0),
                  nclight::infeasible_error);
}

TEST_CASE("analytic time matches the simulated significance") {
  // At the predicted bin count the measured sigma_d should reproduce the
  // targeted one within the 25%-in-time band (12% in sigma), across
  // free-running and gated operating points.
  const auto net = trapped_ion_network();
  const PlannerConfig cfg;
  struct Case {
    std::int64_t n;
    double eta;
    double t;
  };
  const std::vector<Case> cases = {
      {1, 0.05, 1.0},   {1, 0.04, 1.0},  {10, 0.3, 1.0},  {20, 0.2, 1.0},
      {30, 0.15, 1.0},  {50, 0.1, 0.8},  {60, 0.1, 1.0},  {100, 0.05, 1.0},
      {40, 0.12, 0.9},  {120, 0.04, 1.0},
  };
  int checked = 0;
  for (const auto& c : cases) {
    const auto spec = ensemble(c.n, c.eta);
    const double wall =
        planner::time_to_significance(spec, net, c.t, 3.0, cfg);

    // Reconstruct the planner's operating point.
    const auto pair = sources::vacuum_logprobs(spec, 2, 1.0, c.t);
    const double any_click = -std::expm1(pair.log_p0m);
    const double rate =
        std::min(1.0 / cfg.emission_cycle_s, net.saturation_rate_hz / any_click);
    const double open_bins = wall * rate;
    REQUIRE(open_bins < 3e6);

    montecarlo::SimConfig sim;
    sim.seed = 1000 + static_cast<std::uint64_t>(checked);
    sim.bins = static_cast<std::uint64_t>(open_bins);
    sim.spec = spec;
    sim.net = net;
    sim.net.dead_time_s = 0.0;
    sim.transmittance = c.t;
    const auto est = montecarlo::run(sim);
    const auto sig = montecarlo::significance(est, 2);
    REQUIRE(sig.ratio > 0.0);

    const auto exact = criteria::evaluate(pair.log_p0, pair.log_p0m, 2);
    const double sigma_target = exact.d / 3.0;
    CHECK(sig.sigma_d / sigma_target == doctest::Approx(1.0).epsilon(0.12));
    ++checked;
  }
  CHECK(checked == static_cast<int>(cases.size()));
}

TEST_CASE("optimal attenuation at a bright ensemble") {
  const auto net = trapped_ion_network();
  const auto plan = planner::optimize_attenuation(ensemble(10'000, 0.002), net, 3.0);
  CHECK(plan.regime == Regime::gated_plus_attenuated);
  // Optimal flux per open bin sits near four detected photons.
  CHECK(plan.flux > 3.4);
  CHECK(plan.flux < 4.6);
  // Nearly every opening produces a click there.
  const auto pair = sources::vacuum_logprobs(ensemble(10'000, 0.002), 2, 1.0,
                                             plan.t_opt);
  CHECK(-std::expm1(pair.log_p0m) == doctest::Approx(0.98).epsilon(0.015));
  // The plan never overruns the saturation budget.
  CHECK(plan.opening_rate_hz * -std::expm1(pair.log_p0m) <=
        net.saturation_rate_hz * (1.0 + 1e-9));
}

TEST_CASE("small ensembles run free with full transmittance") {
  const auto net = trapped_ion_network();
  const auto plan = planner::optimize_attenuation(ensemble(10, 0.002), net, 3.0);
  CHECK(plan.t_opt == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(plan.regime == Regime::free_running);
  CHECK(plan.duty_cycle == doctest::Approx(0.1).epsilon(1e-9));
}

TEST_CASE("measurement-time curve shape") {
  const auto net = trapped_ion_network();
  const double eta = 0.002;
  std::vector<double> grid;
  for (double n = 4.0; n < 200.0; n *= 1.25) grid.push_back(std::round(n));
  for (double n : {500.0, 2000.0, 10000.0, 40000.0}) grid.push_back(n);
  const auto curve = planner::figure3_curve(eta, net, grid);
  REQUIRE(curve.size() == grid.size());

  // Gating never loses to beam-splitter-only attenuation.
  for (const auto& point : curve) {
    CHECK(point.t_bs_only_s >= point.t_gated_s * (1.0 - 1e-9));
  }

  // Continuity: adjacent grid points never jump by more than the local
  // slope can explain (the dense part of the grid is 1.25-spaced).
  for (std::size_t i = 1; i + 4 < curve.size(); ++i) {
    const double ratio = curve[i].t_gated_s / curve[i - 1].t_gated_s;
    CHECK(ratio < 2.0);
    CHECK(ratio > 0.5);
  }

  // Monotone non-increasing until the saturation kink (eta*N about 0.05).
  for (std::size_t i = 1; i < curve.size(); ++i) {
    if (eta * curve[i].emitters < 0.045) {
      CHECK(curve[i].t_gated_s <= curve[i - 1].t_gated_s * (1.0 + 1e-9));
    }
  }

  // Quadratic growth in the attenuated tail.
  const auto& a = curve[curve.size() - 2];
  const auto& b = curve.back();
  const double slope = std::log(b.t_gated_s / a.t_gated_s) /
                       std::log(b.emitters / a.emitters);
  CHECK(slope == doctest::Approx(2.0).epsilon(0.05));
}

TEST_CASE("free-running region ends where events saturate the detectors") {
  const auto net = trapped_ion_network();
  const PlannerConfig cfg;
  const double eta = 0.002;
  // Boundary condition: P(any click) * cycle rate = saturation rate.
  const double p_boundary = net.saturation_rate_hz * cfg.emission_cycle_s;
  const double n_kink = std::log1p(-p_boundary) / std::log1p(-eta);
  CHECK(eta * n_kink == doctest::Approx(0.0513).epsilon(0.01));

  const auto below = planner::optimize_attenuation(
      ensemble(static_cast<std::int64_t>(n_kink) - 3, eta), net, 3.0, cfg);
  const auto above = planner::optimize_attenuation(
      ensemble(static_cast<std::int64_t>(n_kink) + 3, eta), net, 3.0, cfg);
  CHECK(below.regime == Regime::free_running);
  CHECK(above.regime == Regime::gated);
}

TEST_CASE("stability guard") {
  // A day of storage, a hundred emitters, an hour of measurement: allowed
  // but without the comfortable margin.
  const auto report = planner::stability_guard(100, 86'400.0, 3'600.0);
  CHECK(report.ok);
  CHECK_FALSE(report.comfortable);
  CHECK(report.t_limit_s == doctest::Approx(8'640.0));
  CHECK(std::strcmp(report.binding, "number-stability-margin") == 0);

  // Vanishing measurement time is always safe.
  const auto instant = planner::stability_guard(100, 86'400.0, 1e-6);
  CHECK(instant.ok);
  CHECK(instant.comfortable);

  // Too many emitters for the decay-averaged window.
  const auto decayed = planner::stability_guard(50, 1.0, 1.0);
  CHECK_FALSE(decayed.ok);
  CHECK(std::strcmp(decayed.binding, "decay-averaging") == 0);
}
