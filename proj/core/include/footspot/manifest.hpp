#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace footspot {

// 64-bit FNV-1a content hash; stable across platforms.
uint64_t fnv1a_bytes(std::string_view bytes);
uint64_t fnv1a_file(const std::filesystem::path& path);  // throws IoError

// Record of one CLI run: command, config snapshot, seed, content hashes of
// every input and produced artifact, and wall-clock timings. Two runs with
// the same config and seed produce manifests identical except for the
// timings block.
class RunManifest {
 public:
  // config_json must be a valid JSON document (it is embedded verbatim into
  // the manifest); throws FormatError otherwise on write().
  RunManifest(std::string command, std::string config_json, uint64_t seed);

  void add_input(const std::filesystem::path& path);
  void add_output(const std::filesystem::path& path);
  void add_timing(const std::string& stage, double seconds);

  std::string to_json() const;
  void write(const std::filesystem::path& path) const;

 private:
  std::string command_, config_json_;
  uint64_t seed_;
  std::vector<std::pair<std::string, uint64_t>> inputs_, outputs_;
  std::vector<std::pair<std::string, double>> timings_;
};

}  // namespace footspot
