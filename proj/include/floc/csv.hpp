#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace floc::csv {

/// Shortest round-trip decimal form; infinities serialize as inf/-inf.
std::string format_double(double value);

/// Inverse of format_double. `context` names the offending cell in errors.
double parse_double(std::string_view text, const std::string& context);

long long parse_int(std::string_view text, const std::string& context);

/// Plain comma split. The file formats forbid commas inside ids, so no
/// quoting layer is needed.
std::vector<std::string> split_line(std::string_view line);

std::string_view trim(std::string_view text);

/// Whole-file line reader; strips trailing \r and drops a final empty line.
std::vector<std::string> read_lines(const std::filesystem::path& file);

void write_file(const std::filesystem::path& file, const std::string& content);

}  // namespace floc::csv
