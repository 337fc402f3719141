#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace mwgan {

/// Shortest round-trip decimal form, identical bytes on every run.
std::string format_double(double v);

std::string format_u64(std::uint64_t v);

using KeyValues = std::vector<std::pair<std::string, std::string>>;

/// Plain `key = value` manifest, one entry per line, '#' comments allowed.
void write_manifest(const std::string& path, const KeyValues& entries);
KeyValues read_manifest(const std::string& path);
const std::string* find_key(const KeyValues& kv, const std::string& key);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

CsvTable read_csv(const std::string& path);

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

}  // namespace mwgan
