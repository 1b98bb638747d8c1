#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "gridsynth/errors.hpp"

namespace gridsynth::internal {

/// Header-keyed CSV without quoting (none of our schemas needs it).
class CsvTable {
 public:
  static CsvTable read(const std::filesystem::path& path, const std::vector<std::string>& required) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open " + path.string());
    CsvTable t;
    t.name_ = path.filename().string();
    std::string line;
    if (!std::getline(in, line)) throw ValidationError(t.name_ + ": missing header row");
    strip_bom_and_cr(line);
    const auto header = split(line);
    for (std::size_t i = 0; i < header.size(); ++i) t.columns_[header[i]] = i;
    for (const auto& c : required) {
      if (!t.columns_.contains(c)) throw ValidationError(t.name_ + ": missing column '" + c + "'");
    }
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
      ++line_no;
      strip_bom_and_cr(line);
      if (line.empty()) continue;
      auto fields = split(line);
      if (fields.size() != header.size()) {
        throw ValidationError(t.name_ + " row " + std::to_string(line_no) + ": expected " +
                              std::to_string(header.size()) + " fields, found " +
                              std::to_string(fields.size()));
      }
      t.rows_.push_back(std::move(fields));
      t.line_numbers_.push_back(line_no);
    }
    return t;
  }

  std::size_t rows() const { return rows_.size(); }
  bool has_column(const std::string& c) const { return columns_.contains(c); }
  const std::string& field(std::size_t row, const std::string& column) const {
    return rows_[row][columns_.at(column)];
  }
  /// "file.csv row N" using 1-based file line numbers (the header is row 1).
  std::string where(std::size_t row) const {
    return name_ + " row " + std::to_string(line_numbers_[row]);
  }

 private:
  static void strip_bom_and_cr(std::string& s) {
    if (s.size() >= 3 && s.compare(0, 3, "\xEF\xBB\xBF") == 0) s.erase(0, 3);
    if (!s.empty() && s.back() == '\r') s.pop_back();
  }
  static std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
      if (c == ',') {
        out.push_back(trim(cur));
        cur.clear();
      } else {
        cur.push_back(c);
      }
    }
    out.push_back(trim(cur));
    return out;
  }
  static std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t");
    return s.substr(b, e - b + 1);
  }

  std::string name_;
  std::map<std::string, std::size_t> columns_;
  std::vector<std::vector<std::string>> rows_;
  std::vector<std::size_t> line_numbers_;
};

inline std::int64_t parse_int(const CsvTable& t, std::size_t row, const std::string& col) {
  const std::string& s = t.field(row, col);
  std::int64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw ValidationError(t.where(row) + ": column '" + col + "' is not an integer: '" + s + "'");
  }
  return v;
}

inline double parse_number(const CsvTable& t, std::size_t row, const std::string& col) {
  const std::string& s = t.field(row, col);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) {
    throw ValidationError(t.where(row) + ": column '" + col + "' is not a number: '" + s + "'");
  }
  return v;
}

/// Shortest representation that parses back to the same double.
inline std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

inline std::ofstream open_for_write(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path.string());
  return out;
}

}  // namespace gridsynth::internal
