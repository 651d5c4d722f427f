#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "footspot/tensor.hpp"

namespace footspot {

// Flat binary container for named tensors plus a free-form JSON metadata
// string. Values are stored as raw little-endian doubles, so save/load
// round-trips bit-exactly.
void save_checkpoint(const std::filesystem::path& path, const std::string& meta_json,
                     const std::vector<std::pair<std::string, Tensor>>& tensors);

struct LoadedCheckpoint {
  std::string meta_json;
  std::map<std::string, Tensor> tensors;
};

// Throws IoError on filesystem trouble, FormatError on a corrupt file.
LoadedCheckpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace footspot
