#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace exmorph::csv {

// Minimal comma-separated table: a header row and string cells. No quoting;
// none of the formats read here carry commas inside fields.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  // Column index by name; Error("bad-csv") if absent.
  std::size_t column(std::string_view name) const;
  std::optional<std::size_t> find_column(std::string_view name) const;
};

Table read(const std::filesystem::path& path);
Table parse(std::string_view text, const std::string& source = "<memory>");

// Throws Error("bad-csv") unless the header starts with `expected` in order.
void require_header(const Table& table, const std::vector<std::string>& expected,
                    const std::string& source);

std::vector<std::string> split(std::string_view line, char sep = ',');
std::string trim(std::string_view s);

double to_double(const std::string& cell, const std::string& what);
std::optional<double> to_optional_double(const std::string& cell, const std::string& what);

// Six significant digits, "%.6g"; empty string for nullopt.
std::string format(double value);
std::string format(std::optional<double> value);

void write(const std::filesystem::path& path, const std::vector<std::string>& header,
           const std::vector<std::vector<std::string>>& rows);
std::string render(const std::vector<std::string>& header,
                   const std::vector<std::vector<std::string>>& rows);

}  // namespace exmorph::csv
