#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "heatsource/config.hpp"

namespace heatsource {

struct DispatchOutcome {
  ExitCode code = ExitCode::ok;
  std::string message;
  std::vector<std::filesystem::path> files;  // artifacts written, in order
};

/// Runs one command and writes its CSVs plus `{run_id}_summary.txt` into
/// cfg.outdir. Solver outcomes map to exit codes; I/O failures surface as
/// io_failure. Other exceptions propagate.
DispatchOutcome dispatch(const RunConfig& cfg);

std::filesystem::path summary_path(const RunConfig& cfg);

/// Reads a flat key=value summary file.
KeyValues read_summary(const std::filesystem::path& path);

/// Rebuilds the RunConfig from the `config.` entries of a summary.
RunConfig config_from_summary(const KeyValues& summary);

/// Full command-line entry point. Returns the process exit status.
int run_cli(int argc, const char* const* argv, std::ostream& out,
            std::ostream& err);

}  // namespace heatsource
