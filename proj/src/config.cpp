#include "nclight/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <system_error>

namespace nclight::cli {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> items;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) items.push_back(item);
  }
  return items;
}

struct Parser {
  std::string filename;
  int line = 0;

  [[noreturn]] void fail(const std::string& what) const {
    throw config_error(filename, line, what);
  }

  double as_double(const std::string& value) const {
    double out = 0.0;
    const char* first = value.data();
    const char* last = value.data() + value.size();
    const auto res = std::from_chars(first, last, out);
    if (res.ec != std::errc() || res.ptr != last) {
      fail("expected a number, got '" + value + "'");
    }
    return out;
  }

  std::int64_t as_int(const std::string& value) const {
    std::int64_t out = 0;
    const char* first = value.data();
    const char* last = value.data() + value.size();
    const auto res = std::from_chars(first, last, out);
    if (res.ec != std::errc() || res.ptr != last) {
      fail("expected an integer, got '" + value + "'");
    }
    return out;
  }

  bool as_bool(const std::string& value) const {
    if (value == "on" || value == "true") return true;
    if (value == "off" || value == "false") return false;
    fail("expected on/off, got '" + value + "'");
  }
};

}  // namespace

std::string format_double(double value) {
  char buf[64];
  const auto res =
      std::to_chars(buf, buf + sizeof(buf), value,
                    std::chars_format::general);
  return std::string(buf, res.ptr);
}

void ExperimentConfig::validate() const {
  if (schema_version != 1) {
    throw std::invalid_argument("unsupported schema_version");
  }
  source.validate();
  network.validate();
  if (!(attenuation >= 0.0 && attenuation <= 1.0)) {
    throw std::invalid_argument("attenuation must lie in [0,1]");
  }
  if (sim) {
    if (sim->bins < 1) throw std::invalid_argument("sim bins must be >= 1");
    if (sim->duty_cycle &&
        !(*sim->duty_cycle > 0.0 && *sim->duty_cycle <= 1.0)) {
      throw std::invalid_argument("sim duty_cycle must lie in (0,1]");
    }
    if (sim->partitions < 1) {
      throw std::invalid_argument("sim partitions must be >= 1");
    }
  }
}

ExperimentConfig parse_config_text(const std::string& text,
                                   const std::string& filename) {
  ExperimentConfig cfg;
  Parser parser{filename, 0};

  bool saw_version = false;
  bool noise_set = false;
  std::string noise_kind;
  double noise_nbar = 0.0, noise_mean = 0.0;
  bool have_nbar = false, have_mean = false;
  std::optional<double> decay_tau, decay_t0, decay_tm;
  std::optional<double> fluct_lo, fluct_hi;
  std::string ns_kind = "none";
  double ns_mean = 0.0, ns_prob = 0.0;
  std::int64_t ns_trials = 0;
  std::optional<double> arm_efficiency;
  std::vector<double> arm_efficiencies;
  std::string split_spec = "symmetric";
  int arms = 2;
  detection::DetectorNetwork defaults = detection::DetectorNetwork::symmetric(2);
  double dark = defaults.dark_rate_hz;
  double gate = defaults.gate_length_s;
  double saturation = defaults.saturation_rate_hz;
  double dead = defaults.dead_time_s;

  std::string section;
  std::istringstream stream(text);
  std::string raw;
  while (std::getline(stream, raw)) {
    ++parser.line;
    std::string line = raw;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;

    if (line.front() == '[') {
      if (line.back() != ']') parser.fail("unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      static const char* known[] = {"source", "network", "run",
                                    "sim",    "plan",    "thresholds"};
      if (std::find_if(std::begin(known), std::end(known), [&](const char* k) {
            return section == k;
          }) == std::end(known)) {
        parser.fail("unknown section [" + section + "]");
      }
      if (section == "sim" && !cfg.sim) cfg.sim.emplace();
      if (section == "plan" && !cfg.plan) cfg.plan.emplace();
      if (section == "thresholds" && !cfg.thresholds) cfg.thresholds.emplace();
      continue;
    }

    const auto eq = line.find('=');
    if (eq == std::string::npos) parser.fail("expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty()) parser.fail("expected 'key = value'");

    if (section.empty()) {
      if (key == "schema_version") {
        cfg.schema_version = static_cast<int>(parser.as_int(value));
        saw_version = true;
        if (cfg.schema_version != 1) {
          parser.fail("unsupported schema_version " + value);
        }
      } else {
        parser.fail("unknown top-level key '" + key + "'");
      }
    } else if (section == "source") {
      if (key == "emitters") {
        cfg.source.emitters = parser.as_int(value);
      } else if (key == "eta1") {
        cfg.source.eta1 = parser.as_double(value);
      } else if (key == "eta2") {
        cfg.source.eta2 = parser.as_double(value);
      } else if (key == "noise") {
        noise_kind = value;
        noise_set = true;
      } else if (key == "nbar") {
        noise_nbar = parser.as_double(value);
        have_nbar = true;
      } else if (key == "poisson_mean") {
        noise_mean = parser.as_double(value);
        have_mean = true;
      } else if (key == "decay_tau_s") {
        decay_tau = parser.as_double(value);
      } else if (key == "decay_t0_s") {
        decay_t0 = parser.as_double(value);
      } else if (key == "decay_duration_s") {
        decay_tm = parser.as_double(value);
      } else if (key == "eta_fluct_lo") {
        fluct_lo = parser.as_double(value);
      } else if (key == "eta_fluct_hi") {
        fluct_hi = parser.as_double(value);
      } else if (key == "number_stats") {
        ns_kind = value;
      } else if (key == "ns_mean") {
        ns_mean = parser.as_double(value);
      } else if (key == "ns_trials") {
        ns_trials = parser.as_int(value);
      } else if (key == "ns_prob") {
        ns_prob = parser.as_double(value);
      } else {
        parser.fail("unknown key '" + key + "' in [source]");
      }
    } else if (section == "network") {
      if (key == "arms") {
        arms = static_cast<int>(parser.as_int(value));
      } else if (key == "arm_efficiency") {
        arm_efficiency = parser.as_double(value);
      } else if (key == "arm_efficiencies") {
        arm_efficiencies.clear();
        for (const auto& item : split_list(value)) {
          arm_efficiencies.push_back(parser.as_double(item));
        }
      } else if (key == "split") {
        split_spec = value;
      } else if (key == "dark_rate_hz") {
        dark = parser.as_double(value);
      } else if (key == "gate_length_s") {
        gate = parser.as_double(value);
      } else if (key == "saturation_rate_hz") {
        saturation = parser.as_double(value);
      } else if (key == "dead_time_s") {
        dead = parser.as_double(value);
      } else {
        parser.fail("unknown key '" + key + "' in [network]");
      }
    } else if (section == "run") {
      if (key == "attenuation") {
        cfg.attenuation = parser.as_double(value);
      } else {
        parser.fail("unknown key '" + key + "' in [run]");
      }
    } else if (section == "sim") {
      if (key == "bins") {
        cfg.sim->bins = static_cast<std::uint64_t>(parser.as_int(value));
      } else if (key == "duty_cycle") {
        cfg.sim->duty_cycle = parser.as_double(value);
      } else if (key == "partitions") {
        cfg.sim->partitions = static_cast<int>(parser.as_int(value));
      } else if (key == "dead_time") {
        cfg.sim->dead_time = parser.as_bool(value);
      } else {
        parser.fail("unknown key '" + key + "' in [sim]");
      }
    } else if (section == "plan") {
      if (key == "target_ratio") {
        cfg.plan->planner.target_ratio = parser.as_double(value);
      } else if (key == "emission_cycle_s") {
        cfg.plan->planner.emission_cycle_s = parser.as_double(value);
      } else if (key == "switch_rate_cap_hz") {
        cfg.plan->planner.switch_rate_cap_hz = parser.as_double(value);
      } else if (key == "n_grid") {
        cfg.plan->emitter_grid.clear();
        for (const auto& item : split_list(value)) {
          cfg.plan->emitter_grid.push_back(parser.as_double(item));
        }
      } else if (key == "n_logspace") {
        const auto items = split_list(value);
        if (items.size() != 3) parser.fail("n_logspace needs lo,hi,points");
        const double lo = parser.as_double(items[0]);
        const double hi = parser.as_double(items[1]);
        const int points = static_cast<int>(parser.as_int(items[2]));
        if (!(lo > 0.0 && hi > lo && points >= 2)) {
          parser.fail("n_logspace needs 0 < lo < hi and points >= 2");
        }
        cfg.plan->emitter_grid.clear();
        for (int i = 0; i < points; ++i) {
          const double f = static_cast<double>(i) / (points - 1);
          cfg.plan->emitter_grid.push_back(
              std::round(lo * std::pow(hi / lo, f)));
        }
        auto& g = cfg.plan->emitter_grid;
        g.erase(std::unique(g.begin(), g.end()), g.end());
      } else {
        parser.fail("unknown key '" + key + "' in [plan]");
      }
    } else if (section == "thresholds") {
      if (key == "nbar") {
        cfg.thresholds->nbar_values.clear();
        for (const auto& item : split_list(value)) {
          cfg.thresholds->nbar_values.push_back(parser.as_double(item));
        }
      } else if (key == "emitters") {
        cfg.thresholds->emitter_values.clear();
        for (const auto& item : split_list(value)) {
          cfg.thresholds->emitter_values.push_back(parser.as_int(item));
        }
      } else {
        parser.fail("unknown key '" + key + "' in [thresholds]");
      }
    }
  }

  parser.line = 0;
  if (!saw_version) parser.fail("missing required key schema_version");

  // Assemble the source spec pieces gathered above.
  if (noise_set) {
    if (noise_kind == "none") {
      cfg.source.noise = sources::NoiseModel::none();
    } else if (noise_kind == "per_emitter") {
      if (!have_nbar) parser.fail("[source] noise per_emitter needs nbar");
      cfg.source.noise = sources::NoiseModel::per_emitter(noise_nbar);
    } else if (noise_kind == "common") {
      if (!have_nbar) parser.fail("[source] noise common needs nbar");
      cfg.source.noise = sources::NoiseModel::common(noise_nbar);
    } else if (noise_kind == "poissonian") {
      if (!have_mean) {
        parser.fail("[source] noise poissonian needs poisson_mean");
      }
      cfg.source.noise = sources::NoiseModel::poissonian(noise_mean);
    } else {
      parser.fail("unknown noise model '" + noise_kind + "'");
    }
  } else if (have_nbar || have_mean) {
    parser.fail("[source] nbar/poisson_mean given without a noise model");
  }
  if (decay_tau || decay_tm) {
    if (!decay_tau || !decay_tm) {
      parser.fail("[source] decay needs decay_tau_s and decay_duration_s");
    }
    cfg.source.decay = sources::DecayModel{*decay_tau, decay_t0.value_or(0.0),
                                           *decay_tm};
  }
  if (fluct_lo || fluct_hi) {
    if (!fluct_lo || !fluct_hi) {
      parser.fail("[source] eta fluctuation needs both lo and hi");
    }
    cfg.source.eta_fluctuation = sources::EtaFluctuation{*fluct_lo, *fluct_hi};
  }
  if (ns_kind != "none") {
    NumberStatsSpec ns;
    ns.mean = ns_mean;
    ns.trials = static_cast<int>(ns_trials);
    ns.prob = ns_prob;
    if (ns_kind == "poissonian") {
      ns.kind = NumberStatsSpec::Kind::poissonian;
      cfg.source.number_stats = sources::NumberStatistics::poissonian(ns_mean);
    } else if (ns_kind == "binomial") {
      ns.kind = NumberStatsSpec::Kind::binomial;
      cfg.source.number_stats = sources::NumberStatistics::binomial(
          static_cast<int>(ns_trials), ns_prob);
    } else if (ns_kind == "geometric") {
      ns.kind = NumberStatsSpec::Kind::geometric;
      cfg.source.number_stats = sources::NumberStatistics::geometric(ns_mean);
    } else {
      parser.fail("unknown number_stats '" + ns_kind + "'");
    }
    cfg.number_stats_spec = ns;
  }

  detection::DetectorNetwork net;
  net.arms = arms;
  if (split_spec == "symmetric") {
    net.split_fractions.assign(static_cast<std::size_t>(arms), 1.0 / arms);
  } else {
    net.split_fractions.clear();
    for (const auto& item : split_list(split_spec)) {
      net.split_fractions.push_back(parser.as_double(item));
    }
  }
  if (!arm_efficiencies.empty()) {
    net.arm_efficiencies = arm_efficiencies;
  } else {
    net.arm_efficiencies.assign(static_cast<std::size_t>(arms),
                                arm_efficiency.value_or(1.0));
  }
  net.dark_rate_hz = dark;
  net.gate_length_s = gate;
  net.saturation_rate_hz = saturation;
  net.dead_time_s = dead;
  cfg.network = net;

  try {
    cfg.validate();
  } catch (const std::exception& e) {
    throw config_error(filename, 0, e.what());
  }
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw config_error(path, 0, "cannot open config file");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_config_text(buffer.str(), path);
}

std::string serialize_config(const ExperimentConfig& config) {
  std::ostringstream out;
  out << "schema_version = " << config.schema_version << "\n\n";

  out << "[source]\n";
  out << "emitters = " << config.source.emitters << "\n";
  out << "eta1 = " << format_double(config.source.eta1) << "\n";
  out << "eta2 = " << format_double(config.source.eta2) << "\n";
  switch (config.source.noise.kind) {
    case sources::NoiseModel::Kind::none:
      out << "noise = none\n";
      break;
    case sources::NoiseModel::Kind::per_emitter:
      out << "noise = per_emitter\n";
      out << "nbar = " << format_double(config.source.noise.nbar) << "\n";
      break;
    case sources::NoiseModel::Kind::common:
      out << "noise = common\n";
      out << "nbar = " << format_double(config.source.noise.nbar) << "\n";
      break;
    case sources::NoiseModel::Kind::poissonian:
      out << "noise = poissonian\n";
      out << "poisson_mean = " << format_double(config.source.noise.mean)
          << "\n";
      break;
  }
  if (config.source.decay) {
    out << "decay_tau_s = " << format_double(config.source.decay->storage_time_s)
        << "\n";
    out << "decay_t0_s = " << format_double(config.source.decay->start_time_s)
        << "\n";
    out << "decay_duration_s = "
        << format_double(config.source.decay->duration_s) << "\n";
  }
  if (config.source.eta_fluctuation) {
    out << "eta_fluct_lo = " << format_double(config.source.eta_fluctuation->lo)
        << "\n";
    out << "eta_fluct_hi = " << format_double(config.source.eta_fluctuation->hi)
        << "\n";
  }
  if (config.number_stats_spec) {
    const auto& ns = *config.number_stats_spec;
    switch (ns.kind) {
      case NumberStatsSpec::Kind::poissonian:
        out << "number_stats = poissonian\n";
        out << "ns_mean = " << format_double(ns.mean) << "\n";
        break;
      case NumberStatsSpec::Kind::binomial:
        out << "number_stats = binomial\n";
        out << "ns_trials = " << ns.trials << "\n";
        out << "ns_prob = " << format_double(ns.prob) << "\n";
        break;
      case NumberStatsSpec::Kind::geometric:
        out << "number_stats = geometric\n";
        out << "ns_mean = " << format_double(ns.mean) << "\n";
        break;
    }
  }

  out << "\n[network]\n";
  out << "arms = " << config.network.arms << "\n";
  out << "split = ";
  for (int i = 0; i < config.network.arms; ++i) {
    if (i) out << ",";
    out << format_double(config.network.split_fractions[static_cast<std::size_t>(i)]);
  }
  out << "\n";
  out << "arm_efficiencies = ";
  for (int i = 0; i < config.network.arms; ++i) {
    if (i) out << ",";
    out << format_double(
        config.network.arm_efficiencies[static_cast<std::size_t>(i)]);
  }
  out << "\n";
  out << "dark_rate_hz = " << format_double(config.network.dark_rate_hz)
      << "\n";
  out << "gate_length_s = " << format_double(config.network.gate_length_s)
      << "\n";
  out << "saturation_rate_hz = "
      << format_double(config.network.saturation_rate_hz) << "\n";
  out << "dead_time_s = " << format_double(config.network.dead_time_s) << "\n";

  out << "\n[run]\n";
  out << "attenuation = " << format_double(config.attenuation) << "\n";

  if (config.sim) {
    out << "\n[sim]\n";
    out << "bins = " << config.sim->bins << "\n";
    if (config.sim->duty_cycle) {
      out << "duty_cycle = " << format_double(*config.sim->duty_cycle) << "\n";
    }
    out << "partitions = " << config.sim->partitions << "\n";
    out << "dead_time = " << (config.sim->dead_time ? "on" : "off") << "\n";
  }
  if (config.plan) {
    out << "\n[plan]\n";
    out << "target_ratio = " << format_double(config.plan->planner.target_ratio)
        << "\n";
    out << "emission_cycle_s = "
        << format_double(config.plan->planner.emission_cycle_s) << "\n";
    out << "switch_rate_cap_hz = "
        << format_double(config.plan->planner.switch_rate_cap_hz) << "\n";
    if (!config.plan->emitter_grid.empty()) {
      out << "n_grid = ";
      for (std::size_t i = 0; i < config.plan->emitter_grid.size(); ++i) {
        if (i) out << ",";
        out << format_double(config.plan->emitter_grid[i]);
      }
      out << "\n";
    }
  }
  if (config.thresholds) {
    out << "\n[thresholds]\n";
    if (!config.thresholds->nbar_values.empty()) {
      out << "nbar = ";
      for (std::size_t i = 0; i < config.thresholds->nbar_values.size(); ++i) {
        if (i) out << ",";
        out << format_double(config.thresholds->nbar_values[i]);
      }
      out << "\n";
    }
    if (!config.thresholds->emitter_values.empty()) {
      out << "emitters = ";
      for (std::size_t i = 0; i < config.thresholds->emitter_values.size();
           ++i) {
        if (i) out << ",";
        out << config.thresholds->emitter_values[i];
      }
      out << "\n";
    }
  }
  return out.str();
}

}  // namespace nclight::cli
