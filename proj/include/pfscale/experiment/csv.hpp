#pragma once

#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace pfscale::experiment {

/// %.9g, with "inf", "-inf" and "nan" spelled out.
std::string format_number(double value);
std::string format_optional(const std::optional<double>& value, const std::string& missing = "na");

/// Writes a header on construction and one comma-separated row per call.
/// Cells must not contain commas or newlines.
class CsvWriter {
 public:
  CsvWriter(const std::string& path, std::vector<std::string> header);

  void row(const std::vector<std::string>& cells);
  /// Flushes and closes the file; further rows are rejected.
  void close();
  std::size_t rows() const noexcept { return rows_; }
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
  std::ofstream out_;
  std::size_t columns_;
  std::size_t rows_ = 0;
};

/// A parsed CSV file with a header row.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Column index, or nullopt if absent.
  std::optional<std::size_t> column(const std::string& name) const;
  const std::string& cell(std::size_t row, const std::string& name) const;
};

CsvTable read_csv(const std::string& path);

}  // namespace pfscale::experiment
