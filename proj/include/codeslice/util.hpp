#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace codeslice {

std::string sha256_hex(std::string_view data);

// Line-delimited JSON. Blank lines are skipped on read; malformed lines throw
// SchemaMismatch naming the file and line.
std::vector<nlohmann::json> read_jsonl(const std::string &path);
void write_jsonl(const std::string &path, const std::vector<nlohmann::json> &rows);
void append_jsonl(const std::string &path, const nlohmann::json &row);

std::string read_file(const std::string &path);
// Writes via a temporary file and rename so readers never see a partial file.
void write_file_atomic(const std::string &path, std::string_view content);

// Canonical single-line JSON text (object keys sorted). Throws
// SchemaMismatch for strings that are not valid UTF-8.
std::string canonical(const nlohmann::json &j);

} // namespace codeslice
