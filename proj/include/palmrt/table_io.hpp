#pragma once

#include "palmrt/types.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace palmrt::io {

/// Malformed-input failures carry a message naming the offending column or
/// line; the CLI maps them to exit code 2.
class TableError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct LoadedDataset {
  Dataset data;
  std::vector<std::string> x_names;
  std::vector<std::string> z_names;
  bool intercept_added = false;
};

/// Reads a delimited table (comma, semicolon, tab, or whitespace, sniffed
/// from the header) whose header names exactly one `y` column, interest
/// columns prefixed `x`, and control columns prefixed `z`. An intercept
/// column of ones is appended to z unless some z column is already constant.
LoadedDataset load_dataset_table(const std::string& path);
LoadedDataset parse_dataset_table(std::istream& in, const std::string& origin);

/// Shortest decimal form that round-trips; '.' separator, C locale.
std::string format_number(double v);
std::string format_number(int v);

/// RFC-style CSV: fields holding the delimiter, quotes, or newlines are
/// quoted, embedded quotes doubled.
void write_csv_row(std::ostream& os, const std::vector<std::string>& fields);

}  // namespace palmrt::io
