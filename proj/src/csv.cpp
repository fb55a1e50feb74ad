#include "exmorph/csv.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "exmorph/error.hpp"

namespace exmorph::csv {

std::size_t Table::column(std::string_view name) const {
  if (auto c = find_column(name)) return *c;
  throw Error("bad-csv", "missing column '" + std::string(name) + "'");
}

std::optional<std::size_t> Table::find_column(std::string_view name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  return std::nullopt;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(std::string_view line, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(trim(line.substr(start)));
      return out;
    }
    out.push_back(trim(line.substr(start, pos - start)));
    start = pos + 1;
  }
}

Table parse(std::string_view text, const std::string& source) {
  Table t;
  std::size_t start = 0;
  std::size_t line_no = 0;
  while (start <= text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    const std::string line = trim(text.substr(start, end - start));
    start = end + 1;
    ++line_no;
    if (line.empty() || line[0] == '#') {
      if (end == text.size()) break;
      continue;
    }
    auto cells = split(line);
    if (t.header.empty()) {
      t.header = std::move(cells);
    } else {
      if (cells.size() != t.header.size()) {
        throw Error("bad-csv", source + ":" + std::to_string(line_no) + ": expected " +
                                   std::to_string(t.header.size()) + " fields, got " +
                                   std::to_string(cells.size()));
      }
      t.rows.push_back(std::move(cells));
    }
    if (end == text.size()) break;
  }
  if (t.header.empty()) throw Error("bad-csv", source + ": empty table");
  return t;
}

Table read(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("missing-file", "cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path.string());
}

void require_header(const Table& table, const std::vector<std::string>& expected,
                    const std::string& source) {
  bool ok = table.header.size() >= expected.size();
  for (std::size_t i = 0; ok && i < expected.size(); ++i) ok = table.header[i] == expected[i];
  if (!ok) {
    std::string want;
    for (const auto& e : expected) want += (want.empty() ? "" : ",") + e;
    throw Error("bad-csv", source + ": header must be '" + want + "'");
  }
}

double to_double(const std::string& cell, const std::string& what) {
  const std::string text = trim(cell);
  double v = 0.0;
  const char* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (text.empty() || ec != std::errc{} || ptr != end || !std::isfinite(v)) {
    throw Error("bad-csv", "invalid number '" + cell + "' for " + what);
  }
  return v;
}

std::optional<double> to_optional_double(const std::string& cell, const std::string& what) {
  const std::string text = trim(cell);
  if (text.empty() || text == "NA" || text == "-") return std::nullopt;
  return to_double(text, what);
}

std::string format(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  if (value == 0.0) value = 0.0;  // no "-0"
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", value);
  return buf;
}

std::string format(std::optional<double> value) { return value ? format(*value) : std::string{}; }

std::string render(const std::vector<std::string>& header,
                   const std::vector<std::vector<std::string>>& rows) {
  std::string out;
  auto line = [&out](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out += ',';
      out += cells[i];
    }
    out += '\n';
  };
  line(header);
  for (const auto& r : rows) line(r);
  return out;
}

void write(const std::filesystem::path& path, const std::vector<std::string>& header,
           const std::vector<std::vector<std::string>>& rows) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("io-error", "cannot write " + path.string());
  out << render(header, rows);
  if (!out) throw Error("io-error", "short write to " + path.string());
}

}  // namespace exmorph::csv
