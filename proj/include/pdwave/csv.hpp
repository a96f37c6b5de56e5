#pragma once

// Result tables and their CSV form: comma separated, quoted per RFC 4180 when
// needed, doubles with 17 significant digits, LF line endings.

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <system_error>
#include <variant>
#include <vector>

namespace pdwave::harness {

using Cell = std::variant<std::monostate, long long, double, std::string>;

struct TableArtifact {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;

  void add_row(std::vector<Cell> row) {
    if (row.size() != columns.size()) throw std::invalid_argument("TableArtifact: row width does not match header");
    rows.push_back(std::move(row));
  }

  [[nodiscard]] std::size_t column(const std::string& name_) const {
    for (std::size_t i = 0; i < columns.size(); ++i)
      if (columns[i] == name_) return i;
    throw std::out_of_range("TableArtifact: no column '" + name_ + "'");
  }

  [[nodiscard]] double number(std::size_t row, const std::string& col) const {
    const Cell& c = rows.at(row).at(column(col));
    if (const auto* d = std::get_if<double>(&c)) return *d;
    if (const auto* i = std::get_if<long long>(&c)) return static_cast<double>(*i);
    throw std::invalid_argument("TableArtifact: cell is not numeric");
  }
};

[[nodiscard]] inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.16e", v);
  return buf;
}

[[nodiscard]] inline std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

[[nodiscard]] inline std::string format_cell(const Cell& c) {
  struct V {
    std::string operator()(std::monostate) const { return {}; }
    std::string operator()(long long v) const { return std::to_string(v); }
    std::string operator()(double v) const { return format_double(v); }
    std::string operator()(const std::string& s) const { return csv_quote(s); }
  };
  return std::visit(V{}, c);
}

inline void write_csv(std::ostream& os, const TableArtifact& t) {
  for (std::size_t i = 0; i < t.columns.size(); ++i) os << (i ? "," : "") << csv_quote(t.columns[i]);
  os << '\n';
  for (const auto& row : t.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << format_cell(row[i]);
    os << '\n';
  }
}

/// Writes the table; parent directories are created. I/O errors are raised
/// with the system message.
inline void emit_csv(const TableArtifact& t, const std::filesystem::path& path) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) throw std::runtime_error("emit_csv: " + path.parent_path().string() + ": " + ec.message());
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("emit_csv: cannot open " + path.string() + ": " + std::strerror(errno));
  write_csv(out, t);
  out.flush();
  if (!out) throw std::runtime_error("emit_csv: write to " + path.string() + " failed: " + std::strerror(errno));
}

/// Splits CSV text into fields (quoted fields unescaped).
[[nodiscard]] inline std::vector<std::vector<std::string>> parse_csv(std::istream& is) {
  std::vector<std::vector<std::string>> out;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false;
  bool any = false;
  char c;
  while (is.get(c)) {
    any = true;
    if (quoted) {
      if (c == '"') {
        if (is.peek() == '"') {
          is.get(c);
          field += '"';
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      row.push_back(std::move(field));
      field.clear();
    } else if (c == '\n') {
      row.push_back(std::move(field));
      field.clear();
      out.push_back(std::move(row));
      row.clear();
      any = false;
    } else if (c != '\r') {
      field += c;
    }
  }
  if (any) {
    row.push_back(std::move(field));
    out.push_back(std::move(row));
  }
  return out;
}

}  // namespace pdwave::harness
