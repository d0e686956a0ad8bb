// Command-line front end: run, validate and list experiments.
#include <iostream>
#include <string>
#include <thread>

#include <CLI11.hpp>

#include "zerostat/errors.hpp"
#include "zerostat/experiments.hpp"

int main(int argc, char** argv) {
  CLI::App app{"zerostat: statistics of zeros of random sections"};
  app.set_version_flag("--version", zerostat::version());
  app.require_subcommand(1);

  std::string run_config, validate_config, out_dir;
  int workers = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));

  auto* run = app.add_subcommand("run", "run an experiment described by a JSON config");
  run->add_option("config", run_config, "config file")->required()->check(CLI::ExistingFile);
  run->add_option("--out", out_dir, "override output_dir");
  run->add_option("--workers", workers, "worker threads")->check(CLI::PositiveNumber);

  auto* validate = app.add_subcommand("validate", "check a config against the experiment schema");
  validate->add_option("config", validate_config, "config file")->required()->check(CLI::ExistingFile);

  app.add_subcommand("list-experiments", "list experiment names");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : zerostat::kExitConfigError;
  }

  if (app.got_subcommand("list-experiments")) {
    for (const auto& e : zerostat::list_experiments())
      std::cout << e.name << "\t" << e.zero_domain << "\t" << (e.has_verdict ? "verdict" : "-") << "\t"
                << e.summary << "\n";
    return zerostat::kExitOk;
  }

  if (app.got_subcommand("validate")) {
    try {
      zerostat::ExperimentConfig::load(validate_config);
    } catch (const zerostat::ConfigError& e) {
      std::cerr << e.what() << "\n";
      return zerostat::kExitConfigError;
    }
    std::cout << "ok\n";
    return zerostat::kExitOk;
  }

  zerostat::ExperimentConfig config;
  try {
    config = zerostat::ExperimentConfig::load(run_config);
  } catch (const zerostat::ConfigError& e) {
    std::cerr << e.what() << "\n";
    return zerostat::kExitConfigError;
  }
  if (!out_dir.empty()) config.output_dir = out_dir;
  const auto result = zerostat::run(config, workers);
  if (result.exit_code == zerostat::kExitConfigError) {
    std::cerr << result.message;
    return result.exit_code;
  }
  for (const auto& f : result.files) std::cout << (config.output_dir / f).string() << "\n";
  if (!result.verdict.empty()) std::cout << result.verdict << "\n";
  if (result.exit_code != zerostat::kExitOk) std::cerr << result.message << "\n";
  return result.exit_code;
}
