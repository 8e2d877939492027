#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "csar/errors.hpp"

// Deterministic CSV assembly. Numbers are formatted with %.12g so identical
// runs produce byte-identical files; metadata travels in leading '#' comment
// lines.

namespace csar {

inline std::string fmt_num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

inline std::string fmt_num(std::int64_t v) { return std::to_string(v); }
inline std::string fmt_num(int v) { return std::to_string(v); }

class Csv {
 public:
  explicit Csv(std::vector<std::string> columns) : columns_(std::move(columns)) {
    require(!columns_.empty(), Errc::invalid_params, "CSV needs at least one column");
  }

  void comment(const std::string& line) { comments_.push_back(line); }

  void add_cells(const std::vector<std::string>& cells) {
    require(cells.size() == columns_.size(), Errc::invalid_params,
            "row width does not match the header");
    rows_.push_back(cells);
  }

  template <typename... Ts>
  void row(const Ts&... cells) {
    add_cells({cell(cells)...});
  }

  std::size_t row_count() const { return rows_.size(); }

  std::string str() const {
    std::string out;
    for (const auto& c : comments_) out += "# " + c + "\n";
    out += join(columns_);
    for (const auto& r : rows_) out += join(r);
    return out;
  }

  void save(const std::string& path) const {
    std::ofstream f(path, std::ios::binary);
    require(f.good(), Errc::invalid_params, "cannot open '" + path + "' for writing");
    f << str();
  }

 private:
  static std::string cell(const std::string& s) { return s; }
  static std::string cell(const char* s) { return s; }
  static std::string cell(double v) { return fmt_num(v); }
  static std::string cell(int v) { return std::to_string(v); }
  static std::string cell(std::int64_t v) { return std::to_string(v); }
  static std::string cell(std::uint64_t v) { return std::to_string(v); }
  static std::string cell(bool b) { return b ? "1" : "0"; }

  static std::string join(const std::vector<std::string>& cells) {
    std::string line;
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) line += ',';
      line += cells[i];
    }
    line += '\n';
    return line;
  }

  std::vector<std::string> columns_;
  std::vector<std::string> comments_;
  std::vector<std::vector<std::string>> rows_;
};

}  // namespace csar
