#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "nclight/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"photon-counting nonclassicality toolkit"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_path;
  std::string format = "csv";
  double significance = 3.0;
  std::uint64_t seed = 0;
  bool seed_given = false;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "experiment config file")
        ->required();
    cmd->add_option("--out", out_path, "structured output path");
    cmd->add_option("--format", format, "output format")
        ->check(CLI::IsMember({"csv", "json"}));
    cmd->add_option("--significance", significance,
                    "required d/sigma_d for a positive verdict");
    cmd->add_option("--seed", seed, "random seed for simulation")
        ->each([&](const std::string&) { seed_given = true; });
  };

  auto* verdict = app.add_subcommand(
      "verdict", "decide nonclassicality for one configuration");
  auto* thresholds = app.add_subcommand(
      "thresholds", "noise-threshold sweep table");
  auto* figure3 = app.add_subcommand(
      "figure3", "measurement-time curve over emitter count");
  add_common(verdict);
  add_common(thresholds);
  add_common(figure3);

  CLI11_PARSE(app, argc, argv);

  try {
    const auto config = nclight::cli::load_config(config_path);
    nclight::cli::CliOptions options;
    if (seed_given) options.seed = seed;
    options.out_path = out_path;
    options.format = format == "json" ? nclight::cli::OutputFormat::json
                                      : nclight::cli::OutputFormat::csv;
    options.significance = significance;

    if (verdict->parsed()) {
      return nclight::cli::cmd_verdict(config, options, std::cout);
    }
    if (thresholds->parsed()) {
      return nclight::cli::cmd_thresholds(config, options, std::cout);
    }
    return nclight::cli::cmd_figure3(config, options, std::cout);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return nclight::cli::kExitError;
  }
}
