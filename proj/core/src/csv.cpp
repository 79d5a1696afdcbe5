#include "semroute/csv.hpp"

#include <charconv>
#include <cmath>
#include <istream>

#include "semroute/errors.hpp"

namespace semroute::csv {

std::string escape(std::string_view field) {
  if (field.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::string number(double x) {
  if (std::isnan(x)) return "nan";
  if (x == 0.0) return "0";
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, end);
}

std::vector<std::string> parse_line(std::string_view line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  fields.push_back(std::move(cur));
  return fields;
}

Table read(std::istream& in) {
  Table t;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    auto fields = parse_line(line);
    if (t.header.empty()) {
      t.header = std::move(fields);
      continue;
    }
    if (fields.size() != t.header.size()) {
      throw ParseError("expected " + std::to_string(t.header.size()) + " fields, got " +
                           std::to_string(fields.size()),
                       lineno);
    }
    t.rows.push_back(std::move(fields));
  }
  if (t.header.empty()) throw ParseError("CSV input has no header");
  return t;
}

bool Table::has_column(std::string_view column) const {
  for (const auto& h : header) {
    if (h == column) return true;
  }
  return false;
}

std::string Table::get(const std::vector<std::string>& row, std::string_view column) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == column) return row.at(i);
  }
  throw ParseError("missing CSV column '" + std::string(column) + "'");
}

std::string Table::get(const std::vector<std::string>& row, std::string_view column,
                       std::string_view fallback) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == column) return row.at(i);
  }
  return std::string(fallback);
}

}  // namespace semroute::csv
