#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace cqasum {

using Json = nlohmann::ordered_json;

/// Version stamped into every file the toolkit writes.
inline constexpr std::string_view kFormatVersion = "cqasum-1";

/// Calls `on_record(object, line_number)` for each non-blank line.
/// Malformed JSON or a non-object line raises ParseError naming file and line.
void read_jsonl(const std::filesystem::path& path,
                const std::function<void(const Json&, std::size_t)>& on_record);

/// Writes to a sibling temporary file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

std::string to_jsonl(const std::vector<Json>& records);

Json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const Json& value);

std::string read_text_file(const std::filesystem::path& path);

/// Fixed two-decimal rendering used by every report.
std::string format_fixed2(double value);

} // namespace cqasum
