// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace htgnn::csv {

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Column position by header name; throws DataError when absent.
  std::size_t column(std::string_view name) const;
};

/// Plain comma-separated reader: first line is the header, no quoting.
Table read(const std::filesystem::path& path);
Table parse(std::string_view text);

double to_double(const std::string& field);
long to_long(const std::string& field);

/// Shortest round-trip decimal representation.
std::string format(double value);
/// Fixed number of decimals.
std::string format_fixed(double value, int decimals);

}  // namespace htgnn::csv
