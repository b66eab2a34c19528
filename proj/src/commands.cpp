#include "nclight/commands.hpp"

#include <cmath>
#include <fstream>
#include <ostream>
#include <random>
#include <sstream>
#include <vector>

#include <json.hpp>

#include "nclight/errors.hpp"

namespace nclight::cli {

namespace {

using nlohmann::json;

constexpr double kLn10 = 2.302585092994045684;

void write_output(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write output file " + path);
  out << text;
}

std::string csv_row(const std::vector<std::string>& fields) {
  std::string row;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) row += ",";
    row += fields[i];
  }
  row += "\n";
  return row;
}

json criterion_to_json(const criteria::CriterionResult& r) {
  return json{{"detectors", r.detectors},
              {"log10_p0", r.log_p0 / kLn10},
              {"log10_p0m", r.log_p0m / kLn10},
              {"margin", r.margin},
              {"d0", r.d0},
              {"d0m", r.d0m},
              {"d", r.d},
              {"violated", r.violated},
              {"distance_unbounded", r.distance_unbounded}};
}

}  // namespace

int cmd_verdict(const ExperimentConfig& config, const CliOptions& options,
                std::ostream& report) {
  config.validate();
  const int detectors = config.network.arms;
  const double collection =
      detectors * config.network.effective_collection(0);
  if (!config.network.symmetric_effective()) {
    throw unsupported_error("verdict requires a symmetric effective split");
  }

  const auto pair = sources::vacuum_logprobs(config.source, detectors,
                                             collection, config.attenuation);
  const double dark = config.network.dark_silence_log();
  const double margin = sources::criterion_margin(
      config.source, detectors, collection, config.attenuation);
  const auto result = criteria::evaluate_margin(
      margin, pair.log_p0 + dark, pair.log_p0m + detectors * dark, detectors);

  report << "analytic criterion (M = " << detectors << ")\n";
  report << "  log10 P0   = " << format_double(result.log_p0 / kLn10) << "\n";
  report << "  log10 P0M  = " << format_double(result.log_p0m / kLn10) << "\n";
  report << "  margin     = " << format_double(result.margin) << "\n";
  report << "  d0 = " << format_double(result.d0)
         << "  d0m = " << format_double(result.d0m)
         << "  d = " << format_double(result.d) << "\n";
  report << "  violated   = " << (result.violated ? "yes" : "no") << "\n";

  json record;
  record["analytic"] = criterion_to_json(result);

  bool demonstrated = result.violated;
  if (config.sim) {
    std::uint64_t seed;
    if (options.seed) {
      seed = *options.seed;
    } else {
      std::random_device rd;
      seed = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
    }
    report << "seed = " << seed << "\n";

    double duty = 1.0;
    if (config.sim->duty_cycle) {
      duty = *config.sim->duty_cycle;
    } else {
      // Gate the detectors the way the experiment would: open at most once
      // per emission cycle and keep registered events below saturation.
      const double any_click =
          -std::expm1(result.log_p0m);
      const double cycle =
          config.plan ? config.plan->planner.emission_cycle_s : 100e-9;
      const auto period =
          montecarlo::gating_period(config.network, any_click, cycle);
      duty = 1.0 / static_cast<double>(period);
      report << "gating period = " << period << " bins (auto)\n";
    }

    montecarlo::SimConfig sim;
    sim.seed = seed;
    sim.bins = config.sim->bins;
    sim.duty_cycle = duty;
    sim.partitions = config.sim->partitions;
    sim.dead_time_enabled = config.sim->dead_time;
    sim.spec = config.source;
    sim.net = config.network;
    sim.transmittance = config.attenuation;
    const auto est = montecarlo::run(sim);
    const auto sig = montecarlo::significance(est, detectors);

    report << "monte carlo (" << est.open_bins << " open bins of "
           << est.wall_bins << ")\n";
    report << "  log10 P0M  = " << format_double(est.log_p0m_hat / kLn10)
           << " +- " << format_double(est.se_log_p0m / kLn10) << "\n";
    report << "  d = " << format_double(sig.d)
           << "  sigma_d = " << format_double(sig.sigma_d)
           << "  d/sigma_d = " << format_double(sig.ratio) << "\n";
    if (!sig.note.empty()) report << "  note: " << sig.note << "\n";

    record["seed"] = seed;
    record["mc"] = json{{"open_bins", est.open_bins},
                        {"wall_bins", est.wall_bins},
                        {"log10_p0", est.log_p0_hat / kLn10},
                        {"log10_p0m", est.log_p0m_hat / kLn10},
                        {"se_log10_p0", est.se_log_p0 / kLn10},
                        {"se_log10_p0m", est.se_log_p0m / kLn10},
                        {"counts", est.counts},
                        {"d", sig.d},
                        {"sigma_d", sig.sigma_d},
                        {"ratio", sig.ratio},
                        {"note", sig.note}};
    demonstrated = result.violated && (sig.unbounded ||
                                       sig.ratio >= options.significance);
  }

  if (!options.out_path.empty()) {
    if (options.format == OutputFormat::json) {
      write_output(options.out_path, record.dump(2) + "\n");
    } else {
      std::string csv = csv_row({"detectors", "log10_p0", "log10_p0m",
                                 "margin", "d0", "d0m", "d", "violated"});
      csv += csv_row({std::to_string(detectors),
                      format_double(result.log_p0 / kLn10),
                      format_double(result.log_p0m / kLn10),
                      format_double(result.margin), format_double(result.d0),
                      format_double(result.d0m), format_double(result.d),
                      result.violated ? "1" : "0"});
      write_output(options.out_path, csv);
    }
  }

  report << (demonstrated ? "verdict: nonclassical\n"
                          : "verdict: not demonstrated\n");
  return demonstrated ? kExitDemonstrated : kExitNotDemonstrated;
}

int cmd_thresholds(const ExperimentConfig& config, const CliOptions& options,
                   std::ostream& report) {
  config.validate();
  if (!config.thresholds || config.thresholds->nbar_values.empty() ||
      config.thresholds->emitter_values.empty()) {
    throw std::invalid_argument(
        "thresholds needs a [thresholds] section with nbar and emitters");
  }
  const double eta = config.source.eta1;

  std::string csv = "nbar,emitters,eta_threshold_rho1,eta_threshold_rho2,"
                    "T_robustness\n";
  json rows = json::array();
  for (double nbar : config.thresholds->nbar_values) {
    for (std::int64_t n : config.thresholds->emitter_values) {
      const double rho1 = sources::noise_threshold_per_emitter(nbar);
      const double rho2 =
          nbar > 0.0 ? sources::noise_threshold_common(nbar, n) : 0.0;
      double t_rob = 0.0;
      if (eta > 0.0 && nbar > 0.0) {
        t_rob = sources::attenuation_robustness(eta, nbar).t_min;
      }
      csv += csv_row({format_double(nbar), std::to_string(n),
                      format_double(rho1), format_double(rho2),
                      format_double(t_rob)});
      rows.push_back(json{{"nbar", nbar},
                          {"emitters", n},
                          {"eta_threshold_rho1", rho1},
                          {"eta_threshold_rho2", rho2},
                          {"T_robustness", t_rob}});
    }
  }

  if (!options.out_path.empty()) {
    write_output(options.out_path, options.format == OutputFormat::json
                                       ? rows.dump(2) + "\n"
                                       : csv);
  } else {
    report << csv;
  }
  return kExitDemonstrated;
}

int cmd_figure3(const ExperimentConfig& config, const CliOptions& options,
                std::ostream& report) {
  config.validate();
  if (!config.plan || config.plan->emitter_grid.empty()) {
    throw std::invalid_argument(
        "figure3 needs a [plan] section with n_grid or n_logspace");
  }
  const auto curve = planner::figure3_curve(
      config.source.eta1, config.network, config.plan->emitter_grid,
      config.plan->planner);

  std::string csv = "N,t_min_gated_s,t_min_bs_only_s,T_opt,flux\n";
  json rows = json::array();
  for (const auto& point : curve) {
    csv += csv_row({format_double(point.emitters),
                    format_double(point.t_gated_s),
                    format_double(point.t_bs_only_s),
                    format_double(point.t_opt), format_double(point.flux)});
    rows.push_back(json{{"N", point.emitters},
                        {"t_min_gated_s", point.t_gated_s},
                        {"t_min_bs_only_s", point.t_bs_only_s},
                        {"T_opt", point.t_opt},
                        {"flux", point.flux}});
  }

  if (!options.out_path.empty()) {
    write_output(options.out_path, options.format == OutputFormat::json
                                       ? rows.dump(2) + "\n"
                                       : csv);
  } else {
    report << csv;
  }
  return kExitDemonstrated;
}

}  // namespace nclight::cli
