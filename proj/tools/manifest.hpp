#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace pinmix::cli {

// Lowercase hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);

// Writes to a sibling temporary file and renames it into place.
void write_atomic(const std::filesystem::path& path, const std::string& content);

// UTC timestamp, ISO 8601 with seconds.
std::string utc_now();

struct OutputFile {
  std::filesystem::path path;
  std::string sha256;
  std::uintmax_t bytes;
};

OutputFile describe_output(const std::filesystem::path& path);

nlohmann::json to_json(const std::vector<OutputFile>& files);

}  // namespace pinmix::cli
