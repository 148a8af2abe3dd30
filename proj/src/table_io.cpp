#include "palmrt/table_io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>

namespace palmrt::io {

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split(const std::string& line, char delim) {
  std::vector<std::string> out;
  if (delim == ' ') {
    std::istringstream is(line);
    std::string tok;
    while (is >> tok) out.push_back(tok);
    return out;
  }
  std::string cur;
  for (char c : line) {
    if (c == delim) {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(trim(cur));
  return out;
}

char sniff_delimiter(const std::string& header) {
  for (char c : {',', ';', '\t'})
    if (header.find(c) != std::string::npos) return c;
  return ' ';
}

double parse_double(const std::string& tok, size_t line_no,
                    const std::string& origin) {
  double v = 0.0;
  const char* first = tok.data();
  const char* last = tok.data() + tok.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last)
    throw TableError(origin + ": line " + std::to_string(line_no) +
                     ": cannot parse value '" + tok + "'");
  return v;
}

}  // namespace

LoadedDataset parse_dataset_table(std::istream& in, const std::string& origin) {
  std::string header;
  if (!std::getline(in, header))
    throw TableError(origin + ": empty input, expected a header line");
  const char delim = sniff_delimiter(header);
  const auto names = split(header, delim);
  if (names.empty()) throw TableError(origin + ": empty header");

  int y_col = -1;
  std::vector<int> x_cols, z_cols;
  for (size_t j = 0; j < names.size(); ++j) {
    const std::string& nm = names[j];
    if (nm == "y") {
      if (y_col >= 0)
        throw TableError(origin + ": more than one column named 'y'");
      y_col = static_cast<int>(j);
    } else if (!nm.empty() && nm[0] == 'x') {
      x_cols.push_back(static_cast<int>(j));
    } else if (!nm.empty() && nm[0] == 'z') {
      z_cols.push_back(static_cast<int>(j));
    } else {
      throw TableError(origin + ": column '" + nm +
                       "' is not 'y' and has no x/z prefix");
    }
  }
  if (y_col < 0) throw TableError(origin + ": missing required column 'y'");
  if (x_cols.empty())
    throw TableError(origin + ": need at least one interest column ('x...')");

  std::vector<std::vector<double>> rows;
  std::string line;
  size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto toks = split(line, delim);
    if (toks.size() != names.size())
      throw TableError(origin + ": line " + std::to_string(line_no) + ": got " +
                       std::to_string(toks.size()) + " fields, expected " +
                       std::to_string(names.size()));
    std::vector<double> row(toks.size());
    for (size_t j = 0; j < toks.size(); ++j)
      row[j] = parse_double(toks[j], line_no, origin);
    rows.push_back(std::move(row));
  }
  const auto n = static_cast<Index>(rows.size());
  if (n < 2) throw TableError(origin + ": need at least 2 data rows");

  LoadedDataset out;
  out.data.y.resize(n);
  out.data.x.resize(n, static_cast<Index>(x_cols.size()));
  for (int j : x_cols) out.x_names.push_back(names[j]);
  for (int j : z_cols) out.z_names.push_back(names[j]);

  Matrix zraw(n, static_cast<Index>(z_cols.size()));
  for (Index i = 0; i < n; ++i) {
    out.data.y[i] = rows[i][y_col];
    for (size_t k = 0; k < x_cols.size(); ++k)
      out.data.x(i, static_cast<Index>(k)) = rows[i][x_cols[k]];
    for (size_t k = 0; k < z_cols.size(); ++k)
      zraw(i, static_cast<Index>(k)) = rows[i][z_cols[k]];
  }

  bool has_constant = false;
  for (Index j = 0; j < zraw.cols() && !has_constant; ++j)
    has_constant = (zraw.col(j).array() == zraw(0, j)).all() && zraw(0, j) != 0.0;

  if (has_constant) {
    out.data.z = std::move(zraw);
  } else {
    out.data.z.resize(n, zraw.cols() + 1);
    out.data.z.col(0).setOnes();
    out.data.z.rightCols(zraw.cols()) = zraw;
    out.z_names.insert(out.z_names.begin(), "z_intercept");
    out.intercept_added = true;
  }

  try {
    out.data.validate();
  } catch (const std::exception& e) {
    throw TableError(origin + ": " + e.what());
  }
  return out;
}

LoadedDataset load_dataset_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw TableError(path + ": cannot open file");
  return parse_dataset_table(in, path);
}

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  const auto [ptr, ec] =
      std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, ptr);
}

std::string format_number(int v) { return std::to_string(v); }

void write_csv_row(std::ostream& os, const std::vector<std::string>& fields) {
  for (size_t i = 0; i < fields.size(); ++i) {
    if (i) os << ',';
    const std::string& f = fields[i];
    if (f.find_first_of(",\"\n") != std::string::npos) {
      os << '"';
      for (char c : f) {
        if (c == '"') os << '"';
        os << c;
      }
      os << '"';
    } else {
      os << f;
    }
  }
  os << '\n';
}

}  // namespace palmrt::io
