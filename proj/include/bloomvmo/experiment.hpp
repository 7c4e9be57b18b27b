#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"

namespace bloomvmo {

inline constexpr const char* kConfigSchema = "bloomvmo.config/1";
inline constexpr const char* kSummarySchema = "bloomvmo.summary/1";

/// Process exit codes of the runner.
enum ExitCode : int {
  kExitOk = 0,
  kExitInvariant = 2,
  kExitPrecondition = 3,
  kExitUnknownName = 4,
};

/// Names accepted in the "diagnostic" field (and as CLI subcommands).
const std::vector<std::string>& diagnostic_names();

/// Experiment configuration. parse() fills every default so that to_json()
/// is a complete replay copy. q is never accepted; it is derived from
/// 1/q = 1/p - alpha/n.
///
/// {
///   "schema": "bloomvmo.config/1",
///   "grid": {"n": 1, "L": 10},
///   "triple": {"alpha": 0.5, "p": 1.3333, "lambda1": {weight}, "lambda2": {weight}},
///   "symbol": {symbol spec},            the b of the commutators
///   "input": {symbol spec} | {"path": "f.bin"},
///   "operator": "M_alpha_b",
///   "diagnostic": "norm",
///   "settings": {...},                  diagnostic-specific
///   "seed": 1,
///   "output_dir": "out"
/// }
struct ExperimentConfig {
  int n = 1;
  int depth = 8;
  nlohmann::json triple;
  nlohmann::json symbol;
  nlohmann::json input;
  std::string op = "M_alpha_b";
  std::string diagnostic;
  nlohmann::json settings = nlohmann::json::object();
  std::uint64_t seed = 1;
  std::string output_dir;
  int threads = 1;

  static ExperimentConfig parse(const nlohmann::json& j);
  /// Replay copy (output_dir and threads excluded; they do not affect results).
  nlohmann::json to_json() const;
};

struct RunOutcome {
  int exit_code = kExitOk;
  nlohmann::json summary;
  std::filesystem::path output_dir;
  std::string headline;  // one line for the terminal
  std::string message;   // failure detail when exit_code != 0
};

/// Resolves the output directory: explicit value, then config, then the
/// BLOOMVMO_OUT environment variable, then "bloomvmo-out".
std::filesystem::path resolve_output_dir(const std::string& explicit_dir, const std::string& config_dir);

/// Runs the configured diagnostic and writes summary.json, config.replay.json
/// and any CSV/grid artifacts into the output directory. Library errors
/// propagate as exceptions; see exit_code_for().
RunOutcome run_experiment(const ExperimentConfig& cfg, const std::filesystem::path& out_dir);

/// Maps an exception from the library to the documented exit code and prints it.
int exit_code_for(const std::exception& e, std::ostream& err);

}  // namespace bloomvmo
