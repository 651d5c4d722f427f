#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "footspot/data_model.hpp"
#include "footspot/encoder.hpp"
#include "footspot/pooling.hpp"
#include "footspot/tensor.hpp"

namespace footspot {

struct ModelConfig {
  std::string method = "netvlad++";
  int clusters = 64;       // total cluster budget, split across halves for "++"
  double window_s = 10.0;
  double fps = 2.0;
  int n_classes = kNumEventClasses;
};

// GCN encoder, temporal pooling, and a sigmoid multi-label head.
struct SpottingModel {
  ModelConfig cfg;
  PoolSpec pool_spec;
  GcnEncoderParams encoder;
  std::optional<NetVladParams> pool;         // plain VLAD variants
  std::optional<NetVladParams> pool_before;  // "++" variants
  std::optional<NetVladParams> pool_after;
  Tensor head_w, head_b;

  static SpottingModel init(const ModelConfig& cfg, uint64_t seed);

  int64_t descriptor_len() const;

  // Window of embeddings for one chunk (frames stacked in order).
  Tensor embed_frames(const WindowChunk& chunk, Mode mode);
  // (N, D) window embeddings -> pooled descriptor -> sigmoid probabilities
  // (rank-1, n_classes).
  Tensor head_forward(const Tensor& embeddings);
  // Full probability forward pass for one chunk.
  Tensor forward_chunk(const WindowChunk& chunk, Mode mode);

  // Pooling over an (N, D) embedding matrix per this model's method.
  Tensor pool_window(const Tensor& embeddings);

  std::vector<std::pair<std::string, Tensor>> named_parameters();
  std::vector<std::pair<std::string, Tensor>> named_buffers();

  // Deep copy; used for best-epoch snapshots.
  SpottingModel clone() const;

  void save(const std::filesystem::path& path) const;
  static SpottingModel load(const std::filesystem::path& path);
};

// Summed binary cross-entropy over classes with probabilities clamped to
// [1e-7, 1 - 1e-7]; all-0.5 probabilities score n_classes * ln 2. Optional
// per-class positive weights (class balancing).
Tensor bce_loss(const Tensor& probs, const std::array<uint8_t, kNumEventClasses>& label,
                const std::array<double, kNumEventClasses>* pos_weight = nullptr);

}  // namespace footspot
