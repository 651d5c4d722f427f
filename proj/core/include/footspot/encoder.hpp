#pragma once

#include <string>
#include <utility>
#include <vector>

#include "footspot/graph.hpp"
#include "footspot/rng.hpp"
#include "footspot/tensor.hpp"

namespace footspot {

enum class Mode { Train, Eval };

inline constexpr int kEncoderHidden = 64;
inline constexpr int kEmbeddingDim = 32;

// Per-feature batch normalization over the node dimension.
struct BatchNormParams {
  Tensor gamma, beta;              // trainable
  Tensor running_mean, running_var;  // buffers updated in train mode
  double eps = 1e-5;
  double momentum = 0.1;

  static BatchNormParams init(int dim);
};

// Two GCN layers (5 -> 64 -> 64) with batch norm + ReLU, then a linear
// projection to the 32-dim frame embedding, read out as the node mean.
struct GcnEncoderParams {
  Tensor w1, b1;  // 5x64, 64
  Tensor w2, b2;  // 64x64, 64
  Tensor w3, b3;  // 64x32, 32
  BatchNormParams bn1, bn2;

  // Xavier-uniform weights, zero biases, unit-gamma batch norms.
  static GcnEncoderParams init(Rng& rng);

  std::vector<std::pair<std::string, Tensor>> named_parameters();
  std::vector<std::pair<std::string, Tensor>> named_buffers();
};

// A_norm * H * W + b for one graph; A_norm is constant wrt the tape.
Tensor gcn_layer(const Tensor& h, const Tensor& a_norm, const Tensor& w, const Tensor& b);

// Fused batch-norm op with a hand-written backward. Train mode normalizes by
// biased batch statistics and updates the running buffers in place; eval mode
// uses the stored running statistics and mutates nothing. Throws EmptyBatch
// on zero rows. A single-row batch in train mode normalizes to zeros.
Tensor batch_norm(const Tensor& h, BatchNormParams& bn, Mode mode);

struct FrameEmbedding {
  Tensor vec;               // 32-dim
  bool empty_frame = false; // true when the graph had no nodes
};

// Empty graphs embed to a constant zero vector and are flagged.
FrameEmbedding encode_frame(const FrameGraph& graph, GcnEncoderParams& params, Mode mode);

}  // namespace footspot
