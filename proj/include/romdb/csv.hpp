// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "romdb/core.hpp"

#include <cstdio>
#include <ostream>

namespace romdb {

/// Shortest round-trippable text for a double (17 significant digits).
inline std::string format_real(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// Comma-separated output: '#' comment lines, one header row, data rows.
class CsvWriter {
 public:
  explicit CsvWriter(std::ostream& os, const std::vector<std::string>& comments = {}) : os_(os) {
    for (const auto& c : comments) os_ << "# " << c << '\n';
  }

  void header(const std::vector<std::string>& columns) {
    columns_ = columns.size();
    row(columns);
  }

  void row(const std::vector<std::string>& cells) {
    if (columns_ && cells.size() != columns_) throw Error("CSV row width differs from the header");
    for (std::size_t i = 0; i < cells.size(); ++i) os_ << (i ? "," : "") << cells[i];
    os_ << '\n';
  }

 private:
  std::ostream& os_;
  std::size_t columns_ = 0;
};

}  // namespace romdb
