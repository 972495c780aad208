#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace boneage::csv {

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Column index by name; throws DataError when absent.
  std::size_t column(std::string_view name) const;
  bool has_column(std::string_view name) const;
};

/// RFC-4180 reader (quoted fields, doubled quotes, embedded newlines). Every
/// row must have the header's column count.
Table read(const std::filesystem::path& path);
Table parse(std::string_view text);

std::string quote(std::string_view field);
std::string join_row(const std::vector<std::string>& fields);

/// Shortest text that parses back to exactly `v` (17 significant digits max).
std::string format_double(double v);
double parse_double(std::string_view s);

void write(const std::filesystem::path& path, const std::vector<std::string>& header,
           const std::vector<std::vector<std::string>>& rows);

}  // namespace boneage::csv
