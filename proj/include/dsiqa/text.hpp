#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace dsiqa {

/// Shortest round-trip decimal; infinities render as "inf" / "-inf".
std::string format_double(double v);

/// Threshold multipliers keep at least one decimal ("2.0", "1.6", "2.25").
std::string format_lambda(double lambda);

/// Parses a full decimal token (also "inf", "-inf"); nullopt on garbage.
std::optional<double> parse_double(std::string_view s);

std::vector<std::string> split(std::string_view line, char sep);
std::string_view trim(std::string_view s);

/// Comma-separated reals, e.g. "1.6,2.0,2.4,2.8".
std::vector<double> parse_real_list(std::string_view s);

/// Reads a CSV file with a header row. Blank lines are skipped.
struct CsvFile {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> line_numbers;
};
CsvFile read_csv(const std::filesystem::path& path);

void write_text_file(const std::filesystem::path& path, std::string_view content);
std::string read_text_file(const std::filesystem::path& path);

/// FNV-1a 64-bit string hash.
std::uint64_t fnv1a64(std::string_view s) noexcept;
/// SplitMix64 finalizer.
std::uint64_t splitmix64(std::uint64_t x) noexcept;

}  // namespace dsiqa
