#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace heatsource {

/// Raised when an output file cannot be created, written or renamed.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Numeric table written as comma-separated text with a mandatory header row.
/// Values use scientific notation with 10 significant digits.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  std::string to_string() const;
};

std::string format_number(double value);

/// Writes `content` to `path` through a sibling temporary file and a rename,
/// so readers never observe a partial file. Throws IoError with the path on
/// failure.
void write_file_atomic(const std::filesystem::path& path,
                       const std::string& content);

/// `{dir}/{run_id}_{table}.csv`
std::filesystem::path csv_path(const std::filesystem::path& dir,
                               const std::string& run_id,
                               const std::string& table);

}  // namespace heatsource
