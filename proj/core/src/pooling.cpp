#include "footspot/pooling.hpp"

#include "footspot/errors.hpp"

namespace footspot {

PoolSpec parse_pool_method(const std::string& name) {
  PoolSpec spec;
  std::string base = name;
  if (base.size() > 2 && base.substr(base.size() - 2) == "++") {
    spec.temporal_split = true;
    base = base.substr(0, base.size() - 2);
  }
  if (base == "avg") {
    spec.method = PoolMethod::Avg;
  } else if (base == "max") {
    spec.method = PoolMethod::Max;
  } else if (base == "netvlad") {
    spec.method = PoolMethod::NetVlad;
  } else if (base == "netrvlad") {
    spec.method = PoolMethod::NetRVlad;
  } else {
    throw ConfigError("unknown pooling method '" + name + "'");
  }
  return spec;
}

std::string pool_method_name(const PoolSpec& spec) {
  std::string base;
  switch (spec.method) {
    case PoolMethod::Avg:
      base = "avg";
      break;
    case PoolMethod::Max:
      base = "max";
      break;
    case PoolMethod::NetVlad:
      base = "netvlad";
      break;
    case PoolMethod::NetRVlad:
      base = "netrvlad";
      break;
  }
  return spec.temporal_split ? base + "++" : base;
}

NetVladParams NetVladParams::init(int k, int d, Rng& rng, bool with_centers,
                                  double alpha_init) {
  std::vector<double> centers(static_cast<size_t>(k) * static_cast<size_t>(d));
  for (double& v : centers) {
    v = 0.1 * rng.normal();
  }
  NetVladParams p;
  std::vector<double> w(centers.size());
  std::vector<double> b(static_cast<size_t>(k), 0.0);
  for (int i = 0; i < k; ++i) {
    double sq = 0.0;
    for (int j = 0; j < d; ++j) {
      const double c = centers[static_cast<size_t>(i * d + j)];
      w[static_cast<size_t>(i * d + j)] = 2.0 * alpha_init * c;
      sq += c * c;
    }
    b[static_cast<size_t>(i)] = -alpha_init * sq;
  }
  p.w = Tensor::from_values({k, d}, std::move(w), /*requires_grad=*/true);
  p.b = Tensor::from_values({k}, std::move(b), /*requires_grad=*/true);
  if (with_centers) {
    p.c = Tensor::from_values({k, d}, std::move(centers), /*requires_grad=*/true);
  }
  return p;
}

namespace {

void require_window(const Tensor& x) {
  if (x.ndim() != 2) {
    throw ShapeMismatch("pooling expects an (N, D) window");
  }
  if (x.dim(0) == 0) {
    throw EmptyWindow("pooling over an empty window");
  }
}

}  // namespace

Tensor pool_avg(const Tensor& x) {
  require_window(x);
  return mean(x, 0);
}

Tensor pool_max(const Tensor& x) {
  require_window(x);
  return max(x, 0);
}

Tensor soft_assign(const Tensor& x, const Tensor& w, const Tensor& b) {
  return softmax_rows(add(matmul(x, transpose(w)), b));
}

namespace {

Tensor vlad_core(const Tensor& x, const NetVladParams& p, bool with_centers) {
  require_window(x);
  const int64_t k = p.w.dim(0), d = x.dim(1);
  Tensor a = soft_assign(x, p.w, p.b);           // N x K
  Tensor v = matmul(transpose(a), x);            // K x D, soft-assigned sums
  if (with_centers) {
    // Subtract each center scaled by its cluster's total assignment mass.
    v = sub(v, scale_rows(p.c, sum(a, 0)));
  }
  Tensor flat = reshape(l2_normalize_rows(v), {k * d});
  return l2_normalize(flat);
}

}  // namespace

Tensor pool_netvlad(const Tensor& x, const NetVladParams& p) {
  if (!p.c.defined()) {
    throw ShapeMismatch("pool_netvlad called without cluster centers");
  }
  return vlad_core(x, p, /*with_centers=*/true);
}

Tensor pool_netrvlad(const Tensor& x, const NetVladParams& p) {
  return vlad_core(x, p, /*with_centers=*/false);
}

int64_t split_index(int64_t n, const WindowSplit& split) {
  return static_cast<int64_t>(static_cast<double>(n) * split.t_before /
                              (split.t_before + split.t_after));
}

Tensor pool_pp(const Tensor& x, const WindowSplit& split, PoolMethod method,
               const NetVladParams* before, const NetVladParams* after) {
  require_window(x);
  const int64_t n = x.dim(0);
  const int64_t s = split_index(n, split);
  if (s <= 0 || s >= n) {
    throw EmptyWindow("temporal split leaves an empty half (n=" + std::to_string(n) +
                      ", split=" + std::to_string(s) + ")");
  }
  Tensor xb = slice_rows(x, 0, s);
  Tensor xa = slice_rows(x, s, n);
  auto apply = [method](const Tensor& part, const NetVladParams* p) {
    switch (method) {
      case PoolMethod::Avg:
        return pool_avg(part);
      case PoolMethod::Max:
        return pool_max(part);
      case PoolMethod::NetVlad:
        return pool_netvlad(part, *p);
      case PoolMethod::NetRVlad:
        return pool_netrvlad(part, *p);
    }
    throw ConfigError("unreachable pooling method");
  };
  return concat({apply(xb, before), apply(xa, after)}, 0);
}

int64_t descriptor_length(const PoolSpec& spec, int64_t d, int64_t k) {
  switch (spec.method) {
    case PoolMethod::Avg:
    case PoolMethod::Max:
      return spec.temporal_split ? 2 * d : d;
    case PoolMethod::NetVlad:
    case PoolMethod::NetRVlad:
      // "++" splits the cluster budget across the two halves, so the total
      // descriptor length is d*k either way.
      return d * k;
  }
  return 0;
}

}  // namespace footspot
