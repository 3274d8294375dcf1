#pragma once

#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "compound/coefficient_map.hpp"
#include "compound/errors.hpp"

namespace compound {

// Shortest decimal form that round-trips the exact double.
inline std::string format_double(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, p);
}

inline double parse_double(const std::string& s) {
  const char* b = s.c_str();
  char* end = nullptr;
  double v = std::strtod(b, &end);
  if (end == b) throw FormatError("not a number: '" + s + "'");
  return v;
}

inline long parse_long(const std::string& s) {
  const char* b = s.c_str();
  char* end = nullptr;
  long v = std::strtol(b, &end, 10);
  if (end == b) throw FormatError("not an integer: '" + s + "'");
  return v;
}

inline std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

inline std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

// Coefficient CSV: header "j_1,...,j_d,theta", one row per stored
// coefficient, rows in lexicographic index order (map order).
inline void write_coefficients(std::ostream& os, const CoefficientMap& f,
                               const char* value_column = "theta") {
  for (int i = 1; i <= f.dim; ++i) os << "j_" << i << ",";
  os << value_column << "\n";
  for (const auto& [j, v] : f.values) {
    for (int e : j.entries) os << e << ",";
    os << format_double(v) << "\n";
  }
}

inline void write_coefficients(const std::filesystem::path& path, const CoefficientMap& f,
                               const char* value_column = "theta") {
  std::ofstream os(path);
  if (!os) throw FormatError("cannot open for writing: " + path.string());
  write_coefficients(os, f, value_column);
}

// Reads the CSV produced above.  Lines starting with '#' are skipped so the
// observation format (which carries a metadata comment) shares this parser.
inline CoefficientMap read_coefficients(std::istream& is) {
  std::string line;
  std::string header;
  while (std::getline(is, line)) {
    if (trim(line).empty() || line[0] == '#') continue;
    header = line;
    break;
  }
  if (header.empty()) throw FormatError("coefficient csv: missing header");
  auto cols = split(trim(header), ',');
  if (cols.size() < 2) throw FormatError("coefficient csv: header needs j_1..j_d plus a value column");
  int d = static_cast<int>(cols.size()) - 1;
  for (int i = 0; i < d; ++i)
    if (cols[i] != "j_" + std::to_string(i + 1))
      throw FormatError("coefficient csv: unexpected header column '" + cols[i] + "'");
  CoefficientMap f(d);
  while (std::getline(is, line)) {
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    auto parts = split(t, ',');
    if (static_cast<int>(parts.size()) != d + 1)
      throw FormatError("coefficient csv: row has " + std::to_string(parts.size()) +
                        " fields, expected " + std::to_string(d + 1));
    std::vector<int> e(d);
    for (int i = 0; i < d; ++i) e[i] = static_cast<int>(parse_long(parts[i]));
    f.set(MultiIndex(std::move(e)), parse_double(parts[d]));
  }
  return f;
}

inline CoefficientMap read_coefficients(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw FormatError("cannot open: " + path.string());
  return read_coefficients(is);
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("cannot open: " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

inline void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw FormatError("cannot open for writing: " + path.string());
  os << content;
}

}  // namespace compound
