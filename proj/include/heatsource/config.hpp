#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "heatsource/cgm_solver.hpp"

namespace heatsource {

/// Process exit statuses. Each failure class has exactly one code.
enum class ExitCode : int {
  ok = 0,
  internal_error = 1,
  usage = 2,
  not_converged = 3,
  diverged = 4,
  io_failure = 5,
  missing_config = 10,
  parse_error = 11,
  invalid_config = 12,
  unknown_key = 13,
};

/// Configuration failure carrying its exit code. `line` is the 1-based line
/// in the config file, 0 when the problem is not tied to one.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(ExitCode code, const std::string& what, int line = 0)
      : std::runtime_error(what), code_(code), line_(line) {}
  ExitCode code() const { return code_; }
  int line() const { return line_; }

 private:
  ExitCode code_;
  int line_;
};

enum class Command { forward, invert, sweep, sensitivity };

std::string_view to_string(Command command);

/// Initial parameters: `zeros`, `exact` (least-squares fit of the case's
/// exact functions) or `given` (the phi/theta lists).
enum class InitPolicy { zeros, exact, given };

std::string_view to_string(InitPolicy policy);

struct SweepSize {
  int n_x = 0;
  int n_t = 0;
  bool operator==(const SweepSize&) const = default;
};

/// Fully resolved settings for one invocation. Every field is concrete after
/// parsing, so the echo reproduces the run without consulting defaults.
struct RunConfig {
  Command command = Command::invert;
  std::string case_name = "example1";
  Geometry geometry;
  int n_x = 12;
  int n_t = 9;
  double alpha = 1e-6;
  double epsilon = 1e-3;
  int max_iters = 10000;
  int intervals_x = 100;
  int intervals_t = 100;
  double noise_level = 0.0;
  std::uint64_t seed = 42;
  InitPolicy init = InitPolicy::zeros;
  std::vector<double> phi;
  std::vector<double> theta;
  Scaling scaling = Scaling::none;
  StepRule step_rule = StepRule::joint;
  int restart_period = 0;  // 0 disables periodic restarts
  double trunc_tol = 1e-12;
  int max_terms = 10000;
  std::string run_id = "run";
  std::filesystem::path outdir = ".";
  int jobs = 1;
  std::vector<SweepSize> sweep_sizes;
  std::vector<double> sweep_sensors;
  std::vector<double> sweep_alphas;

  bool operator==(const RunConfig&) const = default;

  SolverConfig solver_config() const;
  TruncationPolicy truncation() const;
};

using KeyValues = std::map<std::string, std::string>;

/// Every recognised key, in echo order.
const std::vector<std::string>& config_keys();

/// Parses flat `key = value` text. `#` starts a comment; blank lines are
/// skipped. Malformed lines and repeated keys raise parse_error with the line
/// number, unrecognised keys raise unknown_key.
KeyValues parse_key_values(const std::string& text);

/// Reads and parses a config file; missing_config when it cannot be opened.
KeyValues load_config_file(const std::filesystem::path& path);

/// Applies command-dependent defaults to `kv` and validates the result.
/// `env_outdir` is used when no outdir key is present.
RunConfig resolve_config(const KeyValues& kv,
                         const std::optional<std::string>& env_outdir = {});

/// Command line: `<command> [--config PATH] [--key value ...]`. Flags
/// override file values. Reads HEATSOURCE_OUTDIR as the outdir fallback.
RunConfig parse_config(int argc, const char* const* argv);

/// key=value pairs that resolve_config maps back to an equal RunConfig.
std::vector<std::pair<std::string, std::string>> echo_config(
    const RunConfig& cfg);

}  // namespace heatsource
