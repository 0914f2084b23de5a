#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace aes {

inline constexpr std::string_view kToolVersion = "0.3.0";

/// Record of one CLI invocation, written as manifest.json in its --out dir.
struct RunManifest {
  std::string command;
  std::vector<std::string> argv;
  /// Input path -> SHA-256 of its contents (directories hash their sorted
  /// file list and contents).
  std::map<std::string, std::string> config_hashes;
  std::map<std::string, std::uint64_t> seeds;
  std::vector<std::string> inputs;
  /// Paths relative to the output directory.
  std::vector<std::string> outputs;
  std::string started_at;
  std::string finished_at;
  std::string tool_version{kToolVersion};
  int exit_code = 0;

  void add_input(const std::filesystem::path& path);
  std::string to_json() const;
};

/// UTC, second resolution, ISO 8601.
std::string utc_timestamp();

std::string hash_path(const std::filesystem::path& path);

}  // namespace aes
