#include "pfscale/experiment/csv.hpp"

#include "pfscale/core.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

namespace pfscale::experiment {

std::string format_number(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buffer[32];
  std::snprintf(buffer, sizeof buffer, "%.9g", value);
  return buffer;
}

std::string format_optional(const std::optional<double>& value, const std::string& missing) {
  return value ? format_number(*value) : missing;
}

CsvWriter::CsvWriter(const std::string& path, std::vector<std::string> header)
    : path_(path), out_(path, std::ios::binary), columns_(header.size()) {
  if (!out_) throw std::runtime_error("cannot write '" + path + "'");
  row(header);
  rows_ = 0;
}

void CsvWriter::row(const std::vector<std::string>& cells) {
  require(cells.size() == columns_, "CsvWriter: wrong number of cells");
  require(out_.is_open(), "CsvWriter: file already closed");
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) out_ << ',';
    out_ << cells[i];
  }
  out_ << '\n';
  ++rows_;
}

void CsvWriter::close() {
  out_.close();
  if (out_.fail()) throw std::runtime_error("error writing '" + path_ + "'");
}

std::optional<std::size_t> CsvTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  return std::nullopt;
}

const std::string& CsvTable::cell(std::size_t row, const std::string& name) const {
  const auto c = column(name);
  if (!c) throw InvalidInput("CSV has no column '" + name + "'");
  return rows.at(row).at(*c);
}

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream in(line);
  std::string cell;
  while (std::getline(in, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read '" + path + "'");
  CsvTable table;
  std::string line;
  if (!std::getline(in, line)) throw InvalidInput("'" + path + "' is empty");
  table.header = split(line);
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto cells = split(line);
    if (cells.size() != table.header.size()) {
      throw InvalidInput("'" + path + "': row " + std::to_string(table.rows.size() + 2) +
                         " has the wrong number of cells");
    }
    table.rows.push_back(std::move(cells));
  }
  return table;
}

}  // namespace pfscale::experiment
