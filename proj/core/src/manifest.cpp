#include "footspot/manifest.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "footspot/errors.hpp"
#include "json.hpp"

namespace footspot {
namespace {

constexpr const char* kToolVersion = "footspot 0.1.0";

std::string hex_hash(uint64_t h) {
  char buf[24];
  std::snprintf(buf, sizeof(buf), "fnv1a:%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace

uint64_t fnv1a_bytes(std::string_view bytes) {
  uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char ch : bytes) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  return h;
}

uint64_t fnv1a_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return fnv1a_bytes(buf.str());
}

RunManifest::RunManifest(std::string command, std::string config_json, uint64_t seed)
    : command_(std::move(command)), config_json_(std::move(config_json)), seed_(seed) {}

void RunManifest::add_input(const std::filesystem::path& path) {
  inputs_.push_back({path.generic_string(), fnv1a_file(path)});
}

void RunManifest::add_output(const std::filesystem::path& path) {
  outputs_.push_back({path.generic_string(), fnv1a_file(path)});
}

void RunManifest::add_timing(const std::string& stage, double seconds) {
  timings_.push_back({stage, seconds});
}

std::string RunManifest::to_json() const {
  nlohmann::ordered_json j;
  j["command"] = command_;
  j["tool_version"] = kToolVersion;
  j["seed"] = seed_;
  try {
    j["config"] = nlohmann::ordered_json::parse(config_json_);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(std::string("manifest config snapshot is not JSON: ") + e.what());
  }

  for (const char* key : {"inputs", "outputs"}) {
    j[key] = nlohmann::ordered_json::array();
    for (const auto& [path, hash] : key[0] == 'i' ? inputs_ : outputs_) {
      nlohmann::ordered_json entry;
      entry["path"] = path;
      entry["hash"] = hex_hash(hash);
      j[key].push_back(std::move(entry));
    }
  }

  j["timings_s"] = nlohmann::ordered_json::object();
  for (const auto& [stage, seconds] : timings_) j["timings_s"][stage] = seconds;
  return j.dump(2) + "\n";
}

void RunManifest::write(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << to_json();
  if (!out.flush()) throw IoError("short write to " + path.string());
}

}  // namespace footspot
