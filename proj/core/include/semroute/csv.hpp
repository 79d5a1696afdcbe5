#pragma once
// Minimal RFC 4180 reading/writing for the result and log tables.

#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace semroute::csv {

std::string escape(std::string_view field);

// Shortest round-trip decimal form; stable across runs.
std::string number(double x);

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  // Throws ParseError when the column is missing and no fallback is given.
  std::string get(const std::vector<std::string>& row, std::string_view column) const;
  std::string get(const std::vector<std::string>& row, std::string_view column,
                  std::string_view fallback) const;
  bool has_column(std::string_view column) const;
};

std::vector<std::string> parse_line(std::string_view line);
Table read(std::istream& in);

}  // namespace semroute::csv
