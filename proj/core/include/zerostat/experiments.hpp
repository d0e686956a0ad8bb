#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace zerostat {

/// One declarative run: experiment name, its parameters, seed and output dir.
struct ExperimentConfig {
  std::string experiment;
  nlohmann::json parameters = nlohmann::json::object();
  std::uint64_t master_seed = 0;
  std::filesystem::path output_dir = "out";

  static ExperimentConfig from_json(const nlohmann::json& j);
  static ExperimentConfig load(const std::filesystem::path& file);
  nlohmann::json to_json() const;
};

struct ExperimentInfo {
  std::string name;
  std::string summary;
  /// Domain over which zeros are counted ("CP^m", "C^*m" or "-").
  std::string zero_domain;
  bool has_verdict = false;
};

const std::vector<ExperimentInfo>& list_experiments();

/// Library version string.
std::string version();

/// Parameters with defaults filled in (assumes a valid config).
nlohmann::json resolved_parameters(const ExperimentConfig& config);

/// Schema violations; empty iff run() would accept the config.
std::vector<std::string> validate(const ExperimentConfig& config);
/// Same, starting from raw JSON (also checks the envelope fields).
std::vector<std::string> validate_json(const nlohmann::json& j);

enum ExitCode : int {
  kExitOk = 0,
  kExitConfigError = 2,
  kExitSolverBudget = 3,
  kExitAcceptanceFail = 4,
};

struct RunResult {
  int exit_code = kExitOk;
  std::vector<std::filesystem::path> files;
  std::string verdict;  // "PASS", "FAIL" or empty
  std::string message;
};

/// Runs the experiment and writes manifest.json, the CSV data products and,
/// for experiments with a built-in bound, verdict.txt. Data files are
/// byte-for-byte reproducible for a fixed config; only the manifest carries
/// wall time.
RunResult run(const ExperimentConfig& config, int workers = 1);

}  // namespace zerostat
