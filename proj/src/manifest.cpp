#include "aes/manifest.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "aes/errors.hpp"
#include "aes/llmgrade.hpp"

namespace aes {

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw ValidationError("cannot read " + p.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

std::string hash_path(const std::filesystem::path& path) {
  namespace fs = std::filesystem;
  if (!fs::exists(path)) throw ValidationError("no such file or directory: " + path.string());
  if (!fs::is_directory(path)) return sha256_hex(slurp(path));
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(path)) {
    if (e.is_regular_file()) files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  std::string material;
  for (const auto& f : files) {
    material += fs::relative(f, path).generic_string();
    material += '\n';
    material += sha256_hex(slurp(f));
    material += '\n';
  }
  return sha256_hex(material);
}

void RunManifest::add_input(const std::filesystem::path& path) {
  inputs.push_back(path.string());
  config_hashes[path.string()] = hash_path(path);
}

std::string RunManifest::to_json() const {
  nlohmann::json j = {{"command", command},
                      {"argv", argv},
                      {"config_hashes", config_hashes},
                      {"seeds", seeds},
                      {"inputs", inputs},
                      {"outputs", outputs},
                      {"started_at", started_at},
                      {"finished_at", finished_at},
                      {"tool_version", tool_version},
                      {"exit_code", exit_code}};
  return j.dump(2) + "\n";
}

}  // namespace aes
