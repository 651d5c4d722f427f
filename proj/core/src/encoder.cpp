#include "footspot/encoder.hpp"

#include <cmath>

#include "footspot/errors.hpp"

namespace footspot {

namespace {

Tensor xavier_uniform(int64_t fan_in, int64_t fan_out, Rng& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::vector<double> values(static_cast<size_t>(fan_in * fan_out));
  for (double& v : values) {
    v = rng.uniform(-bound, bound);
  }
  return Tensor::from_values({fan_in, fan_out}, std::move(values), /*requires_grad=*/true);
}

}  // namespace

BatchNormParams BatchNormParams::init(int dim) {
  BatchNormParams bn;
  bn.gamma = Tensor::from_values({dim}, std::vector<double>(static_cast<size_t>(dim), 1.0),
                                 /*requires_grad=*/true);
  bn.beta = Tensor::zeros({dim}, /*requires_grad=*/true);
  bn.running_mean = Tensor::zeros({dim});
  bn.running_var =
      Tensor::from_values({dim}, std::vector<double>(static_cast<size_t>(dim), 1.0));
  return bn;
}

GcnEncoderParams GcnEncoderParams::init(Rng& rng) {
  GcnEncoderParams p;
  p.w1 = xavier_uniform(kNodeFeatureDim, kEncoderHidden, rng);
  p.b1 = Tensor::zeros({kEncoderHidden}, /*requires_grad=*/true);
  p.w2 = xavier_uniform(kEncoderHidden, kEncoderHidden, rng);
  p.b2 = Tensor::zeros({kEncoderHidden}, /*requires_grad=*/true);
  p.w3 = xavier_uniform(kEncoderHidden, kEmbeddingDim, rng);
  p.b3 = Tensor::zeros({kEmbeddingDim}, /*requires_grad=*/true);
  p.bn1 = BatchNormParams::init(kEncoderHidden);
  p.bn2 = BatchNormParams::init(kEncoderHidden);
  return p;
}

std::vector<std::pair<std::string, Tensor>> GcnEncoderParams::named_parameters() {
  return {
      {"gcn1.W", w1},        {"gcn1.b", b1},       {"gcn2.W", w2},
      {"gcn2.b", b2},        {"lin.W", w3},        {"lin.b", b3},
      {"bn1.gamma", bn1.gamma}, {"bn1.beta", bn1.beta},
      {"bn2.gamma", bn2.gamma}, {"bn2.beta", bn2.beta},
  };
}

std::vector<std::pair<std::string, Tensor>> GcnEncoderParams::named_buffers() {
  return {
      {"bn1.running_mean", bn1.running_mean},
      {"bn1.running_var", bn1.running_var},
      {"bn2.running_mean", bn2.running_mean},
      {"bn2.running_var", bn2.running_var},
  };
}

Tensor gcn_layer(const Tensor& h, const Tensor& a_norm, const Tensor& w, const Tensor& b) {
  return add(matmul(a_norm, matmul(h, w)), b);
}

Tensor batch_norm(const Tensor& h, BatchNormParams& bn, Mode mode) {
  if (h.ndim() != 2) {
    throw ShapeMismatch("batch_norm: expected rank-2 input");
  }
  const int64_t n = h.dim(0), d = h.dim(1);
  if (n == 0) {
    throw EmptyBatch("batch_norm over zero rows");
  }
  if (bn.gamma.dim(0) != d) {
    throw ShapeMismatch("batch_norm: feature dim " + std::to_string(d) +
                        " vs params dim " + std::to_string(bn.gamma.dim(0)));
  }
  const double* x = h.values().data();
  std::vector<double> inv_std(static_cast<size_t>(d));
  std::vector<double> xhat(static_cast<size_t>(n * d));
  if (mode == Mode::Train) {
    std::vector<double> mu(static_cast<size_t>(d), 0.0);
    std::vector<double> var(static_cast<size_t>(d), 0.0);
    for (int64_t i = 0; i < n; ++i) {
      for (int64_t j = 0; j < d; ++j) {
        mu[static_cast<size_t>(j)] += x[i * d + j];
      }
    }
    for (int64_t j = 0; j < d; ++j) {
      mu[static_cast<size_t>(j)] /= static_cast<double>(n);
    }
    for (int64_t i = 0; i < n; ++i) {
      for (int64_t j = 0; j < d; ++j) {
        const double c = x[i * d + j] - mu[static_cast<size_t>(j)];
        var[static_cast<size_t>(j)] += c * c;
      }
    }
    for (int64_t j = 0; j < d; ++j) {
      var[static_cast<size_t>(j)] /= static_cast<double>(n);  // biased variance
      inv_std[static_cast<size_t>(j)] =
          1.0 / std::sqrt(var[static_cast<size_t>(j)] + bn.eps);
    }
    for (int64_t i = 0; i < n; ++i) {
      for (int64_t j = 0; j < d; ++j) {
        xhat[static_cast<size_t>(i * d + j)] =
            (x[i * d + j] - mu[static_cast<size_t>(j)]) * inv_std[static_cast<size_t>(j)];
      }
    }
    // Running buffers track batch statistics; not part of the tape.
    std::vector<double>& rm = bn.running_mean.values();
    std::vector<double>& rv = bn.running_var.values();
    for (int64_t j = 0; j < d; ++j) {
      rm[static_cast<size_t>(j)] = (1.0 - bn.momentum) * rm[static_cast<size_t>(j)] +
                                   bn.momentum * mu[static_cast<size_t>(j)];
      rv[static_cast<size_t>(j)] = (1.0 - bn.momentum) * rv[static_cast<size_t>(j)] +
                                   bn.momentum * var[static_cast<size_t>(j)];
    }
  } else {
    const std::vector<double>& rm = bn.running_mean.values();
    const std::vector<double>& rv = bn.running_var.values();
    for (int64_t j = 0; j < d; ++j) {
      inv_std[static_cast<size_t>(j)] = 1.0 / std::sqrt(rv[static_cast<size_t>(j)] + bn.eps);
    }
    for (int64_t i = 0; i < n; ++i) {
      for (int64_t j = 0; j < d; ++j) {
        xhat[static_cast<size_t>(i * d + j)] =
            (x[i * d + j] - rm[static_cast<size_t>(j)]) * inv_std[static_cast<size_t>(j)];
      }
    }
  }
  Tensor out = Tensor::zeros({n, d});
  {
    double* o = out.values().data();
    const double* gm = bn.gamma.values().data();
    const double* bt = bn.beta.values().data();
    for (int64_t i = 0; i < n; ++i) {
      for (int64_t j = 0; j < d; ++j) {
        o[i * d + j] = gm[j] * xhat[static_cast<size_t>(i * d + j)] + bt[j];
      }
    }
  }
  GradientTape* tape = GradientTape::current();
  const bool needs = tape != nullptr && (h.requires_grad() || bn.gamma.requires_grad() ||
                                         bn.beta.requires_grad());
  if (needs) {
    out.set_requires_grad(true);
    auto hi = h.impl();
    auto gi = bn.gamma.impl();
    auto bi = bn.beta.impl();
    auto oi = out.impl();
    const bool train = mode == Mode::Train;
    tape->record([hi, gi, bi, oi, n, d, train, inv_std = std::move(inv_std),
                  xhat = std::move(xhat)] {
      const double* g = oi->grad.data();
      const double* gm = gi->values.data();
      if (gi->requires_grad) {
        if (gi->grad.empty()) {
          gi->grad.assign(gi->values.size(), 0.0);
        }
        for (int64_t i = 0; i < n; ++i) {
          for (int64_t j = 0; j < d; ++j) {
            gi->grad[static_cast<size_t>(j)] +=
                g[i * d + j] * xhat[static_cast<size_t>(i * d + j)];
          }
        }
      }
      if (bi->requires_grad) {
        if (bi->grad.empty()) {
          bi->grad.assign(bi->values.size(), 0.0);
        }
        for (int64_t i = 0; i < n; ++i) {
          for (int64_t j = 0; j < d; ++j) {
            bi->grad[static_cast<size_t>(j)] += g[i * d + j];
          }
        }
      }
      if (!hi->requires_grad) {
        return;
      }
      if (hi->grad.empty()) {
        hi->grad.assign(hi->values.size(), 0.0);
      }
      double* gh = hi->grad.data();
      if (!train) {
        // Running statistics are constants: dx = g * gamma * inv_std.
        for (int64_t i = 0; i < n; ++i) {
          for (int64_t j = 0; j < d; ++j) {
            gh[i * d + j] += g[i * d + j] * gm[j] * inv_std[static_cast<size_t>(j)];
          }
        }
        return;
      }
      // Train mode: gradient flows through the batch mean and variance.
      std::vector<double> sum_dxhat(static_cast<size_t>(d), 0.0);
      std::vector<double> sum_dxhat_xhat(static_cast<size_t>(d), 0.0);
      for (int64_t i = 0; i < n; ++i) {
        for (int64_t j = 0; j < d; ++j) {
          const double dxh = g[i * d + j] * gm[j];
          sum_dxhat[static_cast<size_t>(j)] += dxh;
          sum_dxhat_xhat[static_cast<size_t>(j)] +=
              dxh * xhat[static_cast<size_t>(i * d + j)];
        }
      }
      const double inv_n = 1.0 / static_cast<double>(n);
      for (int64_t i = 0; i < n; ++i) {
        for (int64_t j = 0; j < d; ++j) {
          const double dxh = g[i * d + j] * gm[j];
          gh[i * d + j] += inv_std[static_cast<size_t>(j)] *
                           (dxh - inv_n * sum_dxhat[static_cast<size_t>(j)] -
                            inv_n * xhat[static_cast<size_t>(i * d + j)] *
                                sum_dxhat_xhat[static_cast<size_t>(j)]);
        }
      }
    });
  }
  return out;
}

FrameEmbedding encode_frame(const FrameGraph& graph, GcnEncoderParams& params, Mode mode) {
  if (graph.n_nodes == 0) {
    return {Tensor::zeros({kEmbeddingDim}), /*empty_frame=*/true};
  }
  const int64_t n = graph.n_nodes;
  Tensor features = Tensor::from_values({n, kNodeFeatureDim}, graph.features);
  Tensor a_norm = Tensor::from_values({n, n}, graph.norm_adjacency);
  Tensor h1 = relu(batch_norm(gcn_layer(features, a_norm, params.w1, params.b1),
                              params.bn1, mode));
  Tensor h2 = relu(batch_norm(gcn_layer(h1, a_norm, params.w2, params.b2),
                              params.bn2, mode));
  Tensor h3 = add(matmul(h2, params.w3), params.b3);
  return {mean(h3, 0), /*empty_frame=*/false};
}

}  // namespace footspot
