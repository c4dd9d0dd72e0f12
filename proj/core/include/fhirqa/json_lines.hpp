#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace fhirqa {

using Json = nlohmann::json;

/// Parses a whole document; malformed input raises ParseError with the byte offset.
Json parse_json(std::string_view text);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view content);

/// One JSON value per non-blank line. Errors name the file and line number.
std::vector<Json> read_json_lines(const std::filesystem::path& path);

/// Compact single-line serialization (sorted keys, no trailing newline).
std::string to_line(const Json& value);

void write_json_lines(const std::filesystem::path& path, const std::vector<Json>& rows);

template <typename T>
std::vector<Json> to_json_rows(const std::vector<T>& items) {
    std::vector<Json> rows;
    rows.reserve(items.size());
    for (const auto& item : items) rows.push_back(to_json(item));
    return rows;
}

}  // namespace fhirqa
