#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "footspot/data_model.hpp"

namespace footspot {

struct GeneratorConfig {
  uint64_t seed = 7;
  double duration_s = 900.0;  // fits the default 24 events at >= 30 s spacing
  double fps = 5.0;
  std::array<int, kNumEventClasses> events_per_class = {2, 2, 2, 2, 2, 2,
                                                        2, 2, 2, 2, 2, 2};
  double pitch_length_m = 105.0;
  double pitch_width_m = 68.0;
  double ball_coverage_fraction = 0.12;
  double noise_std_m = 0.3;
  std::string match_id;  // derived from the seed when empty
};

// Deterministic synthetic match: 22 drifting players plus a partially
// observed ball, with planted events. Each event class is an ordered pair of
// "gather" patterns, one in the 3 s before the timestamp and one in the 3 s
// after, so class identity is only fully recoverable from temporal order.
// Throws ConfigError when the requested events cannot fit the duration.
TrackedMatch generate_match(const GeneratorConfig& config);

struct DatasetPaths {
  std::vector<std::filesystem::path> train, val, test;
};

// Writes train/, val/ and test/ splits under out_dir, one JSON-lines file
// per match, each match seeded independently from base_seed.
DatasetPaths generate_dataset(uint64_t base_seed, int n_train, int n_val, int n_test,
                              const GeneratorConfig& base,
                              const std::filesystem::path& out_dir);

}  // namespace footspot
