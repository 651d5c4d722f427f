#include "footspot/model.hpp"

#include <algorithm>
#include <cmath>

#include "footspot/checkpoint.hpp"
#include "footspot/errors.hpp"
#include "footspot/graph.hpp"
#include "json.hpp"

namespace footspot {

namespace {

Tensor xavier_uniform_2d(int64_t fan_in, int64_t fan_out, Rng& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::vector<double> values(static_cast<size_t>(fan_in * fan_out));
  for (double& v : values) {
    v = rng.uniform(-bound, bound);
  }
  return Tensor::from_values({fan_in, fan_out}, std::move(values), /*requires_grad=*/true);
}

// Assignment sharpness at init. Frame embeddings start with norms well below
// 1, so a unit alpha would leave the softmax assignments near uniform and the
// cluster gradients vanishingly small; this keeps them moderately peaked.
constexpr double kPoolAlphaInit = 30.0;

NetVladParams clone_vlad(const NetVladParams& p) {
  NetVladParams out;
  out.w = p.w.clone();
  out.b = p.b.clone();
  if (p.c.defined()) {
    out.c = p.c.clone();
  }
  return out;
}

}  // namespace

SpottingModel SpottingModel::init(const ModelConfig& cfg, uint64_t seed) {
  SpottingModel m;
  m.cfg = cfg;
  m.pool_spec = parse_pool_method(cfg.method);
  const bool is_vlad = m.pool_spec.method == PoolMethod::NetVlad ||
                       m.pool_spec.method == PoolMethod::NetRVlad;
  if (is_vlad) {
    if (cfg.clusters <= 0) {
      throw ConfigError("cluster count must be positive");
    }
    if (m.pool_spec.temporal_split && cfg.clusters % 2 != 0) {
      throw ConfigError("temporally-split pooling needs an even cluster count, got " +
                        std::to_string(cfg.clusters));
    }
  }
  Rng enc_rng(Rng::mix(seed, 0));
  m.encoder = GcnEncoderParams::init(enc_rng);
  const bool with_centers = m.pool_spec.method == PoolMethod::NetVlad;
  if (is_vlad) {
    if (m.pool_spec.temporal_split) {
      Rng rb(Rng::mix(seed, 1));
      Rng ra(Rng::mix(seed, 2));
      m.pool_before = NetVladParams::init(cfg.clusters / 2, kEmbeddingDim, rb, with_centers,
                                         kPoolAlphaInit);
      m.pool_after = NetVladParams::init(cfg.clusters / 2, kEmbeddingDim, ra, with_centers,
                                        kPoolAlphaInit);
    } else {
      Rng rp(Rng::mix(seed, 1));
      m.pool = NetVladParams::init(cfg.clusters, kEmbeddingDim, rp, with_centers,
                                  kPoolAlphaInit);
    }
  }
  Rng head_rng(Rng::mix(seed, 3));
  m.head_w = xavier_uniform_2d(m.descriptor_len(), cfg.n_classes, head_rng);
  m.head_b = Tensor::zeros({cfg.n_classes}, /*requires_grad=*/true);
  return m;
}

int64_t SpottingModel::descriptor_len() const {
  return descriptor_length(pool_spec, kEmbeddingDim, cfg.clusters);
}

Tensor SpottingModel::embed_frames(const WindowChunk& chunk, Mode mode) {
  if (chunk.frames.empty()) {
    throw EmptyWindow("chunk has no frames");
  }
  std::vector<Tensor> rows;
  rows.reserve(chunk.frames.size());
  for (const TrackedFrame* f : chunk.frames) {
    FrameGraph g = build_graph(*f, chunk.pitch_length_m, chunk.pitch_width_m);
    rows.push_back(encode_frame(g, encoder, mode).vec);
  }
  return stack_rows(rows);
}

Tensor SpottingModel::pool_window(const Tensor& embeddings) {
  if (pool_spec.temporal_split) {
    const WindowSplit split{cfg.window_s / 2.0, cfg.window_s / 2.0};
    return pool_pp(embeddings, split, pool_spec.method,
                   pool_before ? &*pool_before : nullptr,
                   pool_after ? &*pool_after : nullptr);
  }
  switch (pool_spec.method) {
    case PoolMethod::Avg:
      return pool_avg(embeddings);
    case PoolMethod::Max:
      return pool_max(embeddings);
    case PoolMethod::NetVlad:
      return pool_netvlad(embeddings, *pool);
    case PoolMethod::NetRVlad:
      return pool_netrvlad(embeddings, *pool);
  }
  throw ConfigError("unreachable pooling method");
}

Tensor SpottingModel::head_forward(const Tensor& embeddings) {
  Tensor desc = pool_window(embeddings);
  Tensor logits = add(matmul(reshape(desc, {1, desc.dim(0)}), head_w), head_b);
  return reshape(sigmoid(logits), {cfg.n_classes});
}

Tensor SpottingModel::forward_chunk(const WindowChunk& chunk, Mode mode) {
  return head_forward(embed_frames(chunk, mode));
}

std::vector<std::pair<std::string, Tensor>> SpottingModel::named_parameters() {
  std::vector<std::pair<std::string, Tensor>> out = encoder.named_parameters();
  auto add_vlad = [&out](const std::string& prefix, const NetVladParams& p) {
    out.emplace_back(prefix + ".w", p.w);
    out.emplace_back(prefix + ".b", p.b);
    if (p.c.defined()) {
      out.emplace_back(prefix + ".c", p.c);
    }
  };
  if (pool) {
    add_vlad("pool", *pool);
  }
  if (pool_before) {
    add_vlad("pool.before", *pool_before);
  }
  if (pool_after) {
    add_vlad("pool.after", *pool_after);
  }
  out.emplace_back("head.W", head_w);
  out.emplace_back("head.b", head_b);
  return out;
}

std::vector<std::pair<std::string, Tensor>> SpottingModel::named_buffers() {
  return encoder.named_buffers();
}

SpottingModel SpottingModel::clone() const {
  SpottingModel m;
  m.cfg = cfg;
  m.pool_spec = pool_spec;
  m.encoder.w1 = encoder.w1.clone();
  m.encoder.b1 = encoder.b1.clone();
  m.encoder.w2 = encoder.w2.clone();
  m.encoder.b2 = encoder.b2.clone();
  m.encoder.w3 = encoder.w3.clone();
  m.encoder.b3 = encoder.b3.clone();
  auto clone_bn = [](const BatchNormParams& bn) {
    BatchNormParams out;
    out.gamma = bn.gamma.clone();
    out.beta = bn.beta.clone();
    out.running_mean = bn.running_mean.clone();
    out.running_var = bn.running_var.clone();
    out.eps = bn.eps;
    out.momentum = bn.momentum;
    return out;
  };
  m.encoder.bn1 = clone_bn(encoder.bn1);
  m.encoder.bn2 = clone_bn(encoder.bn2);
  if (pool) {
    m.pool = clone_vlad(*pool);
  }
  if (pool_before) {
    m.pool_before = clone_vlad(*pool_before);
  }
  if (pool_after) {
    m.pool_after = clone_vlad(*pool_after);
  }
  m.head_w = head_w.clone();
  m.head_b = head_b.clone();
  return m;
}

void SpottingModel::save(const std::filesystem::path& path) const {
  nlohmann::ordered_json meta;
  meta["format"] = "footspot-model";
  meta["version"] = 1;
  meta["method"] = cfg.method;
  meta["clusters"] = cfg.clusters;
  meta["window_s"] = cfg.window_s;
  meta["fps"] = cfg.fps;
  meta["n_classes"] = cfg.n_classes;
  // save() must not disturb training state, so clone const-safely.
  SpottingModel snapshot = clone();
  std::vector<std::pair<std::string, Tensor>> tensors = snapshot.named_parameters();
  for (auto& [name, t] : snapshot.named_buffers()) {
    tensors.emplace_back(name, t);
  }
  save_checkpoint(path, meta.dump(), tensors);
}

SpottingModel SpottingModel::load(const std::filesystem::path& path) {
  LoadedCheckpoint ckpt = load_checkpoint(path);
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(ckpt.meta_json);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError("checkpoint metadata is not JSON: " + std::string(e.what()));
  }
  if (meta.value("format", "") != "footspot-model") {
    throw FormatError("'" + path.string() + "' is not a model checkpoint");
  }
  ModelConfig cfg;
  cfg.method = meta.at("method").get<std::string>();
  cfg.clusters = meta.at("clusters").get<int>();
  cfg.window_s = meta.at("window_s").get<double>();
  cfg.fps = meta.at("fps").get<double>();
  cfg.n_classes = meta.at("n_classes").get<int>();
  SpottingModel m = init(cfg, /*seed=*/0);
  std::vector<std::pair<std::string, Tensor>> slots = m.named_parameters();
  for (auto& [name, t] : m.named_buffers()) {
    slots.emplace_back(name, t);
  }
  for (auto& [name, slot] : slots) {
    auto it = ckpt.tensors.find(name);
    if (it == ckpt.tensors.end()) {
      throw FormatError("checkpoint missing tensor '" + name + "'");
    }
    if (it->second.shape() != slot.shape()) {
      throw FormatError("checkpoint tensor '" + name + "' has the wrong shape");
    }
    slot.values() = it->second.values();
  }
  return m;
}

Tensor bce_loss(const Tensor& probs, const std::array<uint8_t, kNumEventClasses>& label,
                const std::array<double, kNumEventClasses>* pos_weight) {
  if (probs.ndim() != 1 || probs.dim(0) != kNumEventClasses) {
    throw ShapeMismatch("bce_loss expects a rank-1 tensor of " +
                        std::to_string(kNumEventClasses) + " probabilities");
  }
  constexpr double kLo = 1e-7;
  constexpr double kHi = 1.0 - 1e-7;
  const double* p = probs.values().data();
  std::array<double, kNumEventClasses> weights;
  for (int c = 0; c < kNumEventClasses; ++c) {
    weights[static_cast<size_t>(c)] =
        (label[static_cast<size_t>(c)] && pos_weight) ? (*pos_weight)[static_cast<size_t>(c)]
                                                      : 1.0;
  }
  double acc = 0.0;
  for (int c = 0; c < kNumEventClasses; ++c) {
    const double pc = std::clamp(p[c], kLo, kHi);
    const double y = static_cast<double>(label[static_cast<size_t>(c)]);
    acc -= weights[static_cast<size_t>(c)] *
           (y * std::log(pc) + (1.0 - y) * std::log(1.0 - pc));
  }
  Tensor out = Tensor::from_values({1}, {acc});
  if (GradientTape::current() != nullptr && probs.requires_grad()) {
    out.set_requires_grad(true);
    auto pi = probs.impl();
    auto oi = out.impl();
    GradientTape::current()->record([pi, oi, label, weights] {
      const double g = oi->grad[0];
      if (pi->grad.empty()) {
        pi->grad.assign(pi->values.size(), 0.0);
      }
      for (int c = 0; c < kNumEventClasses; ++c) {
        const double raw = pi->values[static_cast<size_t>(c)];
        if (raw <= kLo || raw >= kHi) {
          continue;  // clamped region contributes no gradient
        }
        const double y = static_cast<double>(label[static_cast<size_t>(c)]);
        pi->grad[static_cast<size_t>(c)] +=
            g * weights[static_cast<size_t>(c)] * (raw - y) / (raw * (1.0 - raw));
      }
    });
  }
  return out;
}

}  // namespace footspot
