#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace pdml::csv {

/// Header plus rows of a comma-separated file; `#` lines and blank lines are
/// skipped.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  [[nodiscard]] std::size_t column(std::string_view name) const;
  [[nodiscard]] std::vector<double> numeric(std::string_view name) const;
};

[[nodiscard]] Table read(const std::string& file);
[[nodiscard]] Table parse(std::string_view text);

/// Shortest round-trip representation.
[[nodiscard]] std::string fmt(double v);

}  // namespace pdml::csv
