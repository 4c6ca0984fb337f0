#pragma once

// Versioned CSV files. The first line is "# lfmap <kind> v<version>", the
// second the column names. Fields are plain (no quoting), so identifiers
// must not contain commas, quotes or line breaks. Doubles are written in the
// shortest form that parses back to the same value.

#include <charconv>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "lfmap/error.hpp"

namespace lfmap::io {

inline constexpr int kCsvVersion = 1;

inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  if (res.ec != std::errc{}) throw FormatError("cannot format number");
  return {buf, res.ptr};
}

inline double parse_double(std::string_view s) {
  double v = 0.0;
  const auto* end = s.data() + s.size();
  const auto res = std::from_chars(s.data(), end, v);
  if (res.ec != std::errc{} || res.ptr != end) {
    throw FormatError("not a number: '" + std::string(s) + "'");
  }
  return v;
}

template <class Int>
Int parse_int(std::string_view s) {
  Int v{};
  const auto* end = s.data() + s.size();
  const auto res = std::from_chars(s.data(), end, v);
  if (res.ec != std::errc{} || res.ptr != end) {
    throw FormatError("not an integer: '" + std::string(s) + "'");
  }
  return v;
}

inline bool parse_bool(std::string_view s) {
  if (s == "1" || s == "true") return true;
  if (s == "0" || s == "false") return false;
  throw FormatError("not a boolean: '" + std::string(s) + "'");
}

inline std::string check_field(std::string s) {
  if (s.find_first_of(",\"\r\n") != std::string::npos) {
    throw FormatError("field may not contain commas, quotes or line breaks: '" + s + "'");
  }
  return s;
}

inline std::string version_line(const std::string& kind) {
  return "# lfmap " + kind + " v" + std::to_string(kCsvVersion);
}

class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::string& kind, const std::vector<std::string>& columns)
      : out_(path, std::ios::binary | std::ios::trunc), columns_(columns.size()) {
    if (!out_) throw Error("cannot open '" + path + "' for writing");
    out_ << version_line(kind) << '\n';
    row(columns);
  }

  void row(const std::vector<std::string>& fields) {
    if (fields.size() != columns_) throw FormatError("row width does not match the header");
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i) out_ << ',';
      out_ << check_field(fields[i]);
    }
    out_ << '\n';
  }

  void close() {
    out_.flush();
    if (!out_) throw Error("write failed");
    out_.close();
  }

 private:
  std::ofstream out_;
  std::size_t columns_;
};

struct CsvTable {
  std::string kind;
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(const std::string& name) const {
    for (std::size_t i = 0; i < columns.size(); ++i) {
      if (columns[i] == name) return i;
    }
    throw FormatError("missing column '" + name + "'");
  }
};

inline std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

/// Reads a CSV file. When `kind` is non-empty the version line must name
/// it; files without a version line are accepted only when `kind` is empty.
inline CsvTable read_csv(const std::string& path, const std::string& kind = "") {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "'");
  CsvTable table;
  std::string line;
  auto next = [&]() -> bool {
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (!line.empty()) return true;
    }
    return false;
  };
  if (!next()) throw FormatError(path + ": empty file");
  if (line.rfind("# lfmap ", 0) == 0) {
    std::istringstream head(line.substr(8));
    std::string version;
    head >> table.kind >> version;
    if (version != "v" + std::to_string(kCsvVersion)) {
      throw FormatError(path + ": unsupported version '" + version + "'");
    }
    if (!next()) throw FormatError(path + ": missing column header");
  }
  if (!kind.empty() && table.kind != kind) {
    throw FormatError(path + ": expected an lfmap " + kind + " file");
  }
  table.columns = split_line(line);
  while (next()) {
    if (line.front() == '#') continue;
    auto fields = split_line(line);
    if (fields.size() != table.columns.size()) {
      throw FormatError(path + ": row " + std::to_string(table.rows.size() + 1) + " has " +
                        std::to_string(fields.size()) + " fields, expected " + std::to_string(table.columns.size()));
    }
    table.rows.push_back(std::move(fields));
  }
  return table;
}

}  // namespace lfmap::io
