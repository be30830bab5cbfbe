#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace incpen {

// Minimal comma-separated table: header row plus data rows, no quoting.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  // Throws FormatError if the column is missing.
  std::size_t column(const std::string& name) const;
  bool has_column(const std::string& name) const;
  // Empty cell -> nullopt.
  std::optional<double> number(std::size_t row, std::size_t col) const;
};

CsvTable read_csv(std::istream& in);

std::string csv_field(const std::optional<double>& v);

}  // namespace incpen
