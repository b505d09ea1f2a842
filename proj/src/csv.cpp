#include "heatsource/csv.hpp"

#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <system_error>

namespace heatsource {

std::string format_number(double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9e", value);
  return buf;
}

std::string CsvTable::to_string() const {
  std::string out;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (c) out += ',';
    out += header[c];
  }
  out += '\n';
  for (const auto& row : rows) {
    if (row.size() != header.size()) {
      throw std::logic_error("csv row width does not match header");
    }
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) out += ',';
      out += format_number(row[c]);
    }
    out += '\n';
  }
  return out;
}

void write_file_atomic(const std::filesystem::path& path,
                       const std::string& content) {
  namespace fs = std::filesystem;
  std::error_code ec;
  if (path.has_parent_path()) {
    fs::create_directories(path.parent_path(), ec);
    if (ec) {
      throw IoError("cannot create directory " +
                               path.parent_path().string() + ": " +
                               ec.message());
    }
  }
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw IoError("failed writing " + tmp.string());
  }
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp);
    throw IoError("cannot rename " + tmp.string() + " to " +
                             path.string() + ": " + ec.message());
  }
}

std::filesystem::path csv_path(const std::filesystem::path& dir,
                               const std::string& run_id,
                               const std::string& table) {
  return dir / (run_id + "_" + table + ".csv");
}

}  // namespace heatsource
