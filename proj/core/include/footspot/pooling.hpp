#pragma once

#include <cstdint>
#include <string>

#include "footspot/rng.hpp"
#include "footspot/tensor.hpp"

namespace footspot {

enum class PoolMethod { Avg, Max, NetVlad, NetRVlad };

// Parsed form of a method string such as "netvlad++" or "avg".
struct PoolSpec {
  PoolMethod method = PoolMethod::NetVlad;
  bool temporal_split = false;  // the "++" variants
};

// Accepts avg, max, netvlad, netrvlad, each with an optional "++" suffix.
// Throws ConfigError on anything else.
PoolSpec parse_pool_method(const std::string& name);
std::string pool_method_name(const PoolSpec& spec);

// Learned soft-assignment parameters for NetVLAD/NetRVLAD. NetRVLAD leaves
// the centers tensor undefined.
struct NetVladParams {
  Tensor w;  // K x D assignment weights
  Tensor b;  // K   assignment biases
  Tensor c;  // K x D cluster centers (undefined for NetRVLAD)

  // Centers are drawn from 0.1 * N(0,1); w and b follow the hard-assignment
  // initialization w_k = 2*alpha*c_k, b_k = -alpha*|c_k|^2.
  static NetVladParams init(int k, int d, Rng& rng, bool with_centers,
                            double alpha_init = 1.0);
};

// All pooling ops consume an (N, D) window of frame embeddings and emit a
// rank-1 descriptor; they throw EmptyWindow on N = 0.
Tensor pool_avg(const Tensor& x);
Tensor pool_max(const Tensor& x);

// softmax over clusters of x_i . w_k + b_k, one row per frame.
Tensor soft_assign(const Tensor& x, const Tensor& w, const Tensor& b);

// Soft-assigned residual aggregation, L2-normalized per cluster, flattened
// cluster-major, then L2-normalized globally.
Tensor pool_netvlad(const Tensor& x, const NetVladParams& p);
// Same but aggregates raw embeddings (no centers).
Tensor pool_netrvlad(const Tensor& x, const NetVladParams& p);

struct WindowSplit {
  double t_before = 5.0;
  double t_after = 5.0;
};

// floor(n * t_before / (t_before + t_after)); the center frame falls in the
// after half.
int64_t split_index(int64_t n, const WindowSplit& split);

// Temporally-split "++" pooling: the window is split into before/after
// halves, each pooled with its own parameters, and the two descriptors are
// concatenated. Throws EmptyWindow if either half would be empty.
Tensor pool_pp(const Tensor& x, const WindowSplit& split, PoolMethod method,
               const NetVladParams* before, const NetVladParams* after);

// Descriptor length for a given configuration; k is the total cluster count
// (split across halves for "++" variants).
int64_t descriptor_length(const PoolSpec& spec, int64_t d, int64_t k);

}  // namespace footspot
