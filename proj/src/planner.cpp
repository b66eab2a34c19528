#include "nclight/planner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "nclight/errors.hpp"

namespace nclight::planner {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct OperatingPoint {
  double margin = 0.0;
  double log_p0 = 0.0;
  double log_p0m = 0.0;
  double open_bins = kInf;
  double opening_rate_hz = 0.0;
  double wall_s = kInf;
  bool feasible = false;
};

void check_inputs(const sources::SourceSpec& spec,
                  const detection::DetectorNetwork& net, double target_ratio,
                  const PlannerConfig& cfg) {
  spec.validate();
  net.validate();
  if (net.arms < 2) {
    throw std::invalid_argument("planning needs at least two arms");
  }
  if (!net.symmetric_effective()) {
    throw unsupported_error("planning requires a symmetric effective split");
  }
  if (!(target_ratio > 0.0)) {
    throw std::invalid_argument("target ratio must be positive");
  }
  if (!(cfg.emission_cycle_s > 0.0) || !(cfg.switch_rate_cap_hz > 0.0)) {
    throw std::invalid_argument("planner rates must be positive");
  }
}

/// Analytic operating point at one transmittance. `max_rate_hz` caps the
/// opening rate (1/emission cycle when gating is available, lower when the
/// caller forbids it).
OperatingPoint operating_point(const sources::SourceSpec& spec,
                               const detection::DetectorNetwork& net,
                               double transmittance, double target_ratio,
                               double max_rate_hz) {
  OperatingPoint op;
  const int m_int = net.arms;
  const double m = static_cast<double>(m_int);
  const double collection = m * net.effective_collection(0);
  const auto pair =
      sources::vacuum_logprobs(spec, m_int, collection, transmittance);
  const double dark = net.dark_silence_log();
  op.log_p0 = pair.log_p0 + dark;
  op.log_p0m = pair.log_p0m + m * dark;
  op.margin = sources::criterion_margin(spec, m_int, collection, transmittance);
  if (!(op.margin > 0.0)) return op;
  op.feasible = true;

  const double p0 = std::exp(op.log_p0);
  const double p0m = std::exp(op.log_p0m);
  const double any_click = -std::expm1(op.log_p0m);
  const double delta = op.margin / m;  // log_p0 - log_p0m/m, natural log

  const double v00 = (1.0 - p0) / p0;
  const double vmm = (1.0 - p0m) / p0m;
  const double var1 = v00 * (1.0 - 2.0 / m) + vmm / (m * m);
  op.open_bins =
      target_ratio * target_ratio * std::max(var1, 0.0) / (delta * delta);

  op.opening_rate_hz =
      any_click > 0.0
          ? std::min(max_rate_hz, net.saturation_rate_hz / any_click)
          : max_rate_hz;
  op.wall_s = op.open_bins / op.opening_rate_hz;
  return op;
}

/// Golden-section minimum of wall time over log T within [lo, hi].
double golden_min_T(const std::function<double(double)>& wall, double lo,
                    double hi) {
  constexpr double kInvPhi = 0.6180339887498949;
  double a = std::log(lo), b = std::log(hi);
  double c = b - kInvPhi * (b - a);
  double d = a + kInvPhi * (b - a);
  double fc = wall(std::exp(c));
  double fd = wall(std::exp(d));
  while (b - a > 1e-4) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - kInvPhi * (b - a);
      fc = wall(std::exp(c));
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + kInvPhi * (b - a);
      fd = wall(std::exp(d));
    }
  }
  return std::exp(0.5 * (a + b));
}

PlanResult plan_at(const sources::SourceSpec& spec,
                   const detection::DetectorNetwork& net, double target_ratio,
                   const PlannerConfig& cfg, double transmittance,
                   double max_rate_hz) {
  const auto op = operating_point(spec, net, transmittance, target_ratio,
                                  max_rate_hz);
  PlanResult plan;
  plan.t_min_s = op.wall_s;
  plan.t_opt = transmittance;
  plan.flux = static_cast<double>(spec.emitters) * transmittance *
              spec.effective_eta1() *
              (net.arms * net.effective_collection(0));
  plan.open_bins = op.open_bins;
  plan.opening_rate_hz = op.opening_rate_hz;
  plan.duty_cycle = op.opening_rate_hz * net.gate_length_s;
  const double cycle_rate = 1.0 / cfg.emission_cycle_s;
  const bool gated = op.opening_rate_hz < cycle_rate * (1.0 - 1e-9);
  if (transmittance < 1.0 - 1e-9) {
    plan.regime = Regime::gated_plus_attenuated;
  } else {
    plan.regime = gated ? Regime::gated : Regime::free_running;
  }
  plan.gate_burst =
      gated ? static_cast<std::uint64_t>(std::max(
                  1.0, std::ceil(op.opening_rate_hz / cfg.switch_rate_cap_hz)))
            : 1;
  return plan;
}

PlanResult optimize_over_T(const sources::SourceSpec& spec,
                           const detection::DetectorNetwork& net,
                           double target_ratio, const PlannerConfig& cfg,
                           double max_rate_hz) {
  auto wall = [&](double t) {
    return operating_point(spec, net, t, target_ratio, max_rate_hz).wall_s;
  };

  // Coarse log scan for feasibility and a unimodal bracket.
  constexpr int kScan = 61;
  double best_t = -1.0;
  double best_wall = kInf;
  std::vector<double> ts(kScan), ws(kScan);
  for (int i = 0; i < kScan; ++i) {
    const double t = std::pow(10.0, -6.0 * (kScan - 1 - i) / (kScan - 1));
    ts[static_cast<std::size_t>(i)] = t;
    const double w = wall(t);
    ws[static_cast<std::size_t>(i)] = w;
    if (w < best_wall) {
      best_wall = w;
      best_t = t;
    }
  }
  if (!(best_wall < kInf)) {
    throw infeasible_error(
        "source does not violate the criterion at any transmittance");
  }
  int best_i = 0;
  for (int i = 0; i < kScan; ++i) {
    if (ts[static_cast<std::size_t>(i)] == best_t) best_i = i;
  }
  const double lo = ts[static_cast<std::size_t>(std::max(0, best_i - 1))];
  const double hi =
      ts[static_cast<std::size_t>(std::min(kScan - 1, best_i + 1))];
  const double t_opt = (lo < hi) ? golden_min_T(wall, lo, hi) : best_t;
  const double t_final = wall(t_opt) <= best_wall ? t_opt : best_t;
  return plan_at(spec, net, target_ratio, cfg, t_final, max_rate_hz);
}

}  // namespace

double time_to_significance(const sources::SourceSpec& spec,
                            const detection::DetectorNetwork& net,
                            double transmittance, double target_ratio,
                            const PlannerConfig& cfg) {
  check_inputs(spec, net, target_ratio, cfg);
  if (!(transmittance > 0.0 && transmittance <= 1.0)) {
    throw std::invalid_argument("transmittance must lie in (0,1]");
  }
  const auto op = operating_point(spec, net, transmittance, target_ratio,
                                  1.0 / cfg.emission_cycle_s);
  if (!op.feasible) {
    throw infeasible_error(
        "source does not violate the criterion at this transmittance");
  }
  return op.wall_s;
}

PlanResult optimize_attenuation(const sources::SourceSpec& spec,
                                const detection::DetectorNetwork& net,
                                double target_ratio,
                                const PlannerConfig& cfg) {
  check_inputs(spec, net, target_ratio, cfg);
  return optimize_over_T(spec, net, target_ratio, cfg,
                         1.0 / cfg.emission_cycle_s);
}

std::vector<CurvePoint> figure3_curve(double eta,
                                      const detection::DetectorNetwork& net,
                                      std::span<const double> emitter_grid,
                                      const PlannerConfig& cfg) {
  if (!(eta > 0.0 && eta <= 1.0)) {
    throw std::invalid_argument("eta must lie in (0,1]");
  }
  for (std::size_t i = 1; i < emitter_grid.size(); ++i) {
    if (!(emitter_grid[i] > emitter_grid[i - 1])) {
      throw std::invalid_argument("emitter grid must be ascending");
    }
  }

  const double cycle_rate = 1.0 / cfg.emission_cycle_s;
  std::vector<CurvePoint> curve;
  curve.reserve(emitter_grid.size());
  for (double n : emitter_grid) {
    sources::SourceSpec spec;
    spec.emitters = static_cast<std::int64_t>(std::llround(n));
    spec.eta1 = eta;
    check_inputs(spec, net, cfg.target_ratio, cfg);

    CurvePoint point;
    point.emitters = n;

    const auto gated =
        optimize_over_T(spec, net, cfg.target_ratio, cfg, cycle_rate);
    point.t_gated_s = gated.t_min_s;
    point.t_opt = gated.t_opt;
    point.flux = gated.flux;

    // Beam-splitter-only mode: detectors stay open every cycle, so the
    // event rate itself must fit under saturation; the wall time at a
    // feasible T is open_bins * emission_cycle.
    auto wall_bs = [&](double t) {
      const auto op = operating_point(spec, net, t, cfg.target_ratio,
                                      cycle_rate);
      if (!op.feasible) return kInf;
      if (op.opening_rate_hz < cycle_rate * (1.0 - 1e-12)) return kInf;
      return op.open_bins * cfg.emission_cycle_s;
    };
    // Largest admissible T first: the event rate grows with T.
    double t_cap = 1.0;
    if (!(wall_bs(1.0) < kInf)) {
      double lo = 1e-12, hi = 1.0;
      for (int iter = 0; iter < 100; ++iter) {
        const double mid = std::sqrt(lo * hi);
        if (wall_bs(mid) < kInf) {
          lo = mid;
        } else {
          hi = mid;
        }
      }
      t_cap = lo;
    }
    point.t_bs_only_s = wall_bs(golden_min_T(wall_bs, 1e-9, t_cap));
    point.t_bs_only_s = std::min(point.t_bs_only_s, wall_bs(t_cap));
    curve.push_back(point);
  }
  return curve;
}

StabilityReport stability_guard(double emitters, double storage_time_s,
                                double measurement_time_s) {
  if (!(emitters > 0.0) || !(storage_time_s > 0.0) ||
      !(measurement_time_s >= 0.0)) {
    throw std::invalid_argument("stability guard needs positive inputs");
  }
  StabilityReport report;
  report.t_limit_s = storage_time_s / std::sqrt(emitters);
  report.n_limit_decay =
      sources::max_emitters_decay(std::max(measurement_time_s, 1e-300),
                                  storage_time_s);
  const bool number_ok = measurement_time_s < report.t_limit_s;
  const bool decay_ok = emitters < report.n_limit_decay;
  report.ok = number_ok && decay_ok;
  report.comfortable = measurement_time_s * 10.0 <= report.t_limit_s;
  if (!decay_ok) {
    report.binding = "decay-averaging";
  } else if (!number_ok) {
    report.binding = "number-stability";
  } else if (!report.comfortable) {
    report.binding = "number-stability-margin";
  } else {
    report.binding = "none";
  }
  return report;
}

}  // namespace nclight::planner
