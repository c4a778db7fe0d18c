#ifndef SLOPECP_CSV_HPP
#define SLOPECP_CSV_HPP

#include <Eigen/Dense>

#include <charconv>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "slopecp/error.hpp"

namespace slopecp::csv {

inline std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

// RFC-4180-ish: double quotes delimit fields, "" is an escaped quote.
inline std::vector<std::string> split_line(std::string_view line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(trim(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  fields.push_back(trim(cur));
  return fields;
}

inline bool parse_double(std::string_view s, double& out) {
  const std::string t = trim(s);
  if (t.empty()) return false;
  // from_chars for double is available in libstdc++ >= 11
  const char* b = t.data();
  const char* e = t.data() + t.size();
  if (*b == '+') ++b;
  auto [ptr, ec] = std::from_chars(b, e, out);
  return ec == std::errc() && ptr == e;
}

/// Shortest text that parses back to exactly the same double.
inline std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

inline std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open '" + path + "' for reading");
  return in;
}

inline std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot open '" + path + "' for writing");
  return out;
}

/// Plain numeric matrix with an optional header row of column names.
inline void write_matrix(const std::string& path, const Eigen::MatrixXd& m,
                         const std::vector<std::string>& header = {}) {
  auto out = open_out(path);
  if (!header.empty()) {
    for (std::size_t j = 0; j < header.size(); ++j) out << (j ? "," : "") << header[j];
    out << '\n';
  }
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) out << (j ? "," : "") << format_double(m(i, j));
    out << '\n';
  }
}

inline Eigen::MatrixXd read_matrix(const std::string& path, bool has_header,
                                   std::vector<std::string>* header = nullptr) {
  auto in = open_in(path);
  std::string line;
  std::vector<std::vector<double>> rows;
  bool first = true;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty() || line[0] == '#') continue;
    auto f = split_line(line);
    if (first && has_header) {
      if (header) *header = f;
      first = false;
      continue;
    }
    first = false;
    std::vector<double> row(f.size());
    for (std::size_t j = 0; j < f.size(); ++j) {
      if (!parse_double(f[j], row[j])) {
        if (f[j] == "NA" || f[j] == "nan") {
          row[j] = std::numeric_limits<double>::quiet_NaN();
        } else {
          throw ValidationError(path + ":" + std::to_string(lineno) + ": not a number: '" + f[j] + "'");
        }
      }
    }
    if (!rows.empty() && row.size() != rows.front().size())
      throw ValidationError(path + ":" + std::to_string(lineno) + ": ragged row");
    rows.push_back(std::move(row));
  }
  Eigen::MatrixXd m(rows.size(), rows.empty() ? 0 : rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j) m(i, j) = rows[i][j];
  return m;
}

}  // namespace slopecp::csv

#endif
