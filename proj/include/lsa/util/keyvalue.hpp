#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

namespace lsa {

// Flat "key = value" text: one pair per line, '#' starts a comment, blank lines
// ignored. Keys are unique. Serialization is sorted by key, so it is canonical.
using KeyValues = std::map<std::string, std::string>;

KeyValues parse_key_values(const std::string& text, const std::string& source = "<text>");
KeyValues read_key_values(const std::filesystem::path& path);
std::string format_key_values(const KeyValues& kv);

// Typed accessors raising SchemaError that names the key.
double kv_double(const KeyValues& kv, const std::string& key);
std::int64_t kv_int(const KeyValues& kv, const std::string& key);
bool kv_bool(const KeyValues& kv, const std::string& key);

// Shortest decimal text that parses back to the same double.
std::string format_double(double value);

// 64-bit FNV-1a, hex-encoded. Used for content hashes in run manifests.
std::string fnv1a_hex(const std::string& bytes);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& bytes);

}  // namespace lsa
