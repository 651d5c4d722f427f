#include "footspot/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "footspot/errors.hpp"

namespace footspot {

namespace {

thread_local GradientTape* t_current_tape = nullptr;

std::string shape_str(const std::vector<int64_t>& s) {
  std::string out = "(";
  for (size_t i = 0; i < s.size(); ++i) {
    if (i) {
      out += ",";
    }
    out += std::to_string(s[i]);
  }
  return out + ")";
}

int64_t shape_size(const std::vector<int64_t>& s) {
  int64_t n = 1;
  for (int64_t d : s) {
    n *= d;
  }
  return n;
}

std::vector<double>& ensure_grad(detail::TensorImpl* t) {
  if (t->grad.empty()) {
    t->grad.assign(t->values.size(), 0.0);
  }
  return t->grad;
}

// True when the active tape should record an op over these inputs.
bool recording(std::initializer_list<const Tensor*> inputs) {
  if (t_current_tape == nullptr) {
    return false;
  }
  for (const Tensor* t : inputs) {
    if (t->requires_grad()) {
      return true;
    }
  }
  return false;
}

void require_rank(const Tensor& a, int rank, const char* op) {
  if (a.ndim() != rank) {
    throw ShapeMismatch(std::string(op) + ": expected rank " + std::to_string(rank) +
                        " tensor, got " + shape_str(a.shape()));
  }
}

// C(n,m) += A(n,k) * B(k,m)
void mm_nn(const double* a, const double* b, double* c, int64_t n, int64_t k, int64_t m) {
  for (int64_t i = 0; i < n; ++i) {
    const double* ai = a + i * k;
    double* ci = c + i * m;
    for (int64_t p = 0; p < k; ++p) {
      const double av = ai[p];
      const double* bp = b + p * m;
      for (int64_t j = 0; j < m; ++j) {
        ci[j] += av * bp[j];
      }
    }
  }
}

// C(n,m) += A(n,k) * B(m,k)^T
void mm_nt(const double* a, const double* b, double* c, int64_t n, int64_t k, int64_t m) {
  for (int64_t i = 0; i < n; ++i) {
    const double* ai = a + i * k;
    double* ci = c + i * m;
    for (int64_t j = 0; j < m; ++j) {
      const double* bj = b + j * k;
      double acc = 0.0;
      for (int64_t p = 0; p < k; ++p) {
        acc += ai[p] * bj[p];
      }
      ci[j] += acc;
    }
  }
}

// C(k,m) += A(n,k)^T * B(n,m)
void mm_tn(const double* a, const double* b, double* c, int64_t n, int64_t k, int64_t m) {
  for (int64_t i = 0; i < n; ++i) {
    const double* ai = a + i * k;
    const double* bi = b + i * m;
    for (int64_t p = 0; p < k; ++p) {
      const double av = ai[p];
      double* cp = c + p * m;
      for (int64_t j = 0; j < m; ++j) {
        cp[j] += av * bi[j];
      }
    }
  }
}

using Impl = std::shared_ptr<detail::TensorImpl>;

}  // namespace

// ---- Tensor ---------------------------------------------------------------

Tensor Tensor::zeros(std::vector<int64_t> shape, bool requires_grad) {
  auto impl = std::make_shared<detail::TensorImpl>();
  impl->values.assign(static_cast<size_t>(shape_size(shape)), 0.0);
  impl->shape = std::move(shape);
  impl->requires_grad = requires_grad;
  return Tensor(std::move(impl));
}

Tensor Tensor::from_values(std::vector<int64_t> shape, std::vector<double> values,
                           bool requires_grad) {
  if (shape_size(shape) != static_cast<int64_t>(values.size())) {
    throw ShapeMismatch("from_values: shape " + shape_str(shape) + " needs " +
                        std::to_string(shape_size(shape)) + " values, got " +
                        std::to_string(values.size()));
  }
  auto impl = std::make_shared<detail::TensorImpl>();
  impl->shape = std::move(shape);
  impl->values = std::move(values);
  impl->requires_grad = requires_grad;
  return Tensor(std::move(impl));
}

Tensor Tensor::scalar(double v) { return from_values({1}, {v}); }

std::vector<double>& Tensor::grad() { return ensure_grad(impl_.get()); }

const std::vector<double>& Tensor::grad() const { return ensure_grad(impl_.get()); }

void Tensor::zero_grad() {
  if (!impl_->grad.empty()) {
    std::fill(impl_->grad.begin(), impl_->grad.end(), 0.0);
  }
}

double Tensor::item() const {
  if (size() != 1) {
    throw NotScalar("item() on tensor of shape " + shape_str(shape()));
  }
  return impl_->values[0];
}

Tensor Tensor::clone() const {
  auto impl = std::make_shared<detail::TensorImpl>();
  impl->shape = impl_->shape;
  impl->values = impl_->values;
  impl->requires_grad = impl_->requires_grad;
  return Tensor(std::move(impl));
}

// ---- GradientTape -----------------------------------------------------------

GradientTape::GradientTape() : prev_(t_current_tape) { t_current_tape = this; }

GradientTape::~GradientTape() { t_current_tape = prev_; }

GradientTape* GradientTape::current() { return t_current_tape; }

void GradientTape::record(std::function<void()> backward_fn) {
  nodes_.push_back(std::move(backward_fn));
}

void GradientTape::backward(const Tensor& loss) {
  if (loss.size() != 1) {
    throw NotScalar("backward: loss has shape " + shape_str(loss.shape()));
  }
  ensure_grad(loss.impl().get())[0] += 1.0;
  for (size_t i = nodes_.size(); i > 0; --i) {
    nodes_[i - 1]();
  }
}

// ---- primitives -------------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_rank(a, 2, "matmul");
  require_rank(b, 2, "matmul");
  const int64_t n = a.dim(0), k = a.dim(1), m = b.dim(1);
  if (b.dim(0) != k) {
    throw ShapeMismatch("matmul: " + shape_str(a.shape()) + " x " + shape_str(b.shape()));
  }
  Tensor out = Tensor::zeros({n, m});
  mm_nn(a.values().data(), b.values().data(), out.values().data(), n, k, m);
  if (recording({&a, &b})) {
    out.set_requires_grad(true);
    Impl ai = a.impl(), bi = b.impl(), oi = out.impl();
    GradientTape::current()->record([ai, bi, oi, n, k, m] {
      const double* g = oi->grad.data();
      if (ai->requires_grad) {
        mm_nt(g, bi->values.data(), ensure_grad(ai.get()).data(), n, m, k);
      }
      if (bi->requires_grad) {
        mm_tn(ai->values.data(), g, ensure_grad(bi.get()).data(), n, k, m);
      }
    });
  }
  return out;
}

Tensor add(const Tensor& a, const Tensor& b) {
  const bool row_broadcast = a.ndim() == 2 && b.ndim() == 1 && b.dim(0) == a.dim(1);
  if (!row_broadcast && a.shape() != b.shape()) {
    throw ShapeMismatch("add: " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  }
  Tensor out = Tensor::from_values(a.shape(), a.values());
  double* o = out.values().data();
  const double* bv = b.values().data();
  const int64_t total = a.size();
  if (row_broadcast) {
    const int64_t d = b.dim(0);
    for (int64_t i = 0; i < total; ++i) {
      o[i] += bv[i % d];
    }
  } else {
    for (int64_t i = 0; i < total; ++i) {
      o[i] += bv[i];
    }
  }
  if (recording({&a, &b})) {
    out.set_requires_grad(true);
    Impl ai = a.impl(), bi = b.impl(), oi = out.impl();
    GradientTape::current()->record([ai, bi, oi, row_broadcast, total] {
      const double* g = oi->grad.data();
      if (ai->requires_grad) {
        double* ga = ensure_grad(ai.get()).data();
        for (int64_t i = 0; i < total; ++i) {
          ga[i] += g[i];
        }
      }
      if (bi->requires_grad) {
        double* gb = ensure_grad(bi.get()).data();
        if (row_broadcast) {
          const int64_t d = static_cast<int64_t>(bi->values.size());
          for (int64_t i = 0; i < total; ++i) {
            gb[i % d] += g[i];
          }
        } else {
          for (int64_t i = 0; i < total; ++i) {
            gb[i] += g[i];
          }
        }
      }
    });
  }
  return out;
}

Tensor sub(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) {
    throw ShapeMismatch("sub: " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  }
  Tensor out = Tensor::from_values(a.shape(), a.values());
  double* o = out.values().data();
  const double* bv = b.values().data();
  const int64_t total = a.size();
  for (int64_t i = 0; i < total; ++i) {
    o[i] -= bv[i];
  }
  if (recording({&a, &b})) {
    out.set_requires_grad(true);
    Impl ai = a.impl(), bi = b.impl(), oi = out.impl();
    GradientTape::current()->record([ai, bi, oi, total] {
      const double* g = oi->grad.data();
      if (ai->requires_grad) {
        double* ga = ensure_grad(ai.get()).data();
        for (int64_t i = 0; i < total; ++i) {
          ga[i] += g[i];
        }
      }
      if (bi->requires_grad) {
        double* gb = ensure_grad(bi.get()).data();
        for (int64_t i = 0; i < total; ++i) {
          gb[i] -= g[i];
        }
      }
    });
  }
  return out;
}

Tensor mul(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) {
    throw ShapeMismatch("mul: " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  }
  Tensor out = Tensor::from_values(a.shape(), a.values());
  double* o = out.values().data();
  const double* bv = b.values().data();
  const int64_t total = a.size();
  for (int64_t i = 0; i < total; ++i) {
    o[i] *= bv[i];
  }
  if (recording({&a, &b})) {
    out.set_requires_grad(true);
    Impl ai = a.impl(), bi = b.impl(), oi = out.impl();
    GradientTape::current()->record([ai, bi, oi, total] {
      const double* g = oi->grad.data();
      if (ai->requires_grad) {
        double* ga = ensure_grad(ai.get()).data();
        const double* bvv = bi->values.data();
        for (int64_t i = 0; i < total; ++i) {
          ga[i] += g[i] * bvv[i];
        }
      }
      if (bi->requires_grad) {
        double* gb = ensure_grad(bi.get()).data();
        const double* avv = ai->values.data();
        for (int64_t i = 0; i < total; ++i) {
          gb[i] += g[i] * avv[i];
        }
      }
    });
  }
  return out;
}

Tensor scale(const Tensor& a, double c) {
  Tensor out = Tensor::from_values(a.shape(), a.values());
  for (double& v : out.values()) {
    v *= c;
  }
  if (recording({&a})) {
    out.set_requires_grad(true);
    Impl ai = a.impl(), oi = out.impl();
    GradientTape::current()->record([ai, oi, c] {
      double* ga = ensure_grad(ai.get()).data();
      const double* g = oi->grad.data();
      const int64_t total = static_cast<int64_t>(ai->values.size());
      for (int64_t i = 0; i < total; ++i) {
        ga[i] += c * g[i];
      }
    });
  }
  return out;
}

Tensor add_scalar(const Tensor& a, double c) {
  Tensor out = Tensor::from_values(a.shape(), a.values());
  for (double& v : out.values()) {
    v += c;
  }
  if (recording({&a})) {
    out.set_requires_grad(true);
    Impl ai = a.impl(), oi = out.impl();
    GradientTape::current()->record([ai, oi] {
      double* ga = ensure_grad(ai.get()).data();
      const double* g = oi->grad.data();
      const int64_t total = static_cast<int64_t>(ai->values.size());
      for (int64_t i = 0; i < total; ++i) {
        ga[i] += g[i];
      }
    });
  }
  return out;
}

Tensor relu(const Tensor& a) {
  Tensor out = Tensor::from_values(a.shape(), a.values());
  for (double& v : out.values()) {
    v = v > 0.0 ? v : 0.0;
  }
  if (recording({&a})) {
    out.set_requires_grad(true);
    Impl ai = a.impl(), oi = out.impl();
    GradientTape::current()->record([ai, oi] {
      double* ga = ensure_grad(ai.get()).data();
      const double* g = oi->grad.data();
      const double* x = ai->values.data();
      const int64_t total = static_cast<int64_t>(ai->values.size());
      for (int64_t i = 0; i < total; ++i) {
        if (x[i] > 0.0) {
          ga[i] += g[i];
        }
      }
    });
  }
  return out;
}

Tensor sigmoid(const Tensor& a) {
  Tensor out = Tensor::from_values(a.shape(), a.values());
  for (double& v : out.values()) {
    v = 1.0 / (1.0 + std::exp(-v));
  }
  if (recording({&a})) {
    out.set_requires_grad(true);
    Impl ai = a.impl(), oi = out.impl();
    GradientTape::current()->record([ai, oi] {
      double* ga = ensure_grad(ai.get()).data();
      const double* g = oi->grad.data();
      const double* s = oi->values.data();
      const int64_t total = static_cast<int64_t>(ai->values.size());
      for (int64_t i = 0; i < total; ++i) {
        ga[i] += g[i] * s[i] * (1.0 - s[i]);
      }
    });
  }
  return out;
}

Tensor exp(const Tensor& a) {
  Tensor out = Tensor::from_values(a.shape(), a.values());
  for (double& v : out.values()) {
    v = std::exp(v);
  }
  if (recording({&a})) {
    out.set_requires_grad(true);
    Impl ai = a.impl(), oi = out.impl();
    GradientTape::current()->record([ai, oi] {
      double* ga = ensure_grad(ai.get()).data();
      const double* g = oi->grad.data();
      const double* y = oi->values.data();
      const int64_t total = static_cast<int64_t>(ai->values.size());
      for (int64_t i = 0; i < total; ++i) {
        ga[i] += g[i] * y[i];
      }
    });
  }
  return out;
}

Tensor log(const Tensor& a) {
  Tensor out = Tensor::from_values(a.shape(), a.values());
  for (double& v : out.values()) {
    v = std::log(v);
  }
  if (recording({&a})) {
    out.set_requires_grad(true);
    Impl ai = a.impl(), oi = out.impl();
    GradientTape::current()->record([ai, oi] {
      double* ga = ensure_grad(ai.get()).data();
      const double* g = oi->grad.data();
      const double* x = ai->values.data();
      const int64_t total = static_cast<int64_t>(ai->values.size());
      for (int64_t i = 0; i < total; ++i) {
        ga[i] += g[i] / x[i];
      }
    });
  }
  return out;
}

Tensor softmax_rows(const Tensor& a) {
  require_rank(a, 2, "softmax_rows");
  const int64_t n = a.dim(0), k = a.dim(1);
  Tensor out = Tensor::zeros({n, k});
  const double* x = a.values().data();
  double* o = out.values().data();
  for (int64_t i = 0; i < n; ++i) {
    const double* xi = x + i * k;
    double* oi = o + i * k;
    double mx = xi[0];
    for (int64_t j = 1; j < k; ++j) {
      mx = std::max(mx, xi[j]);
    }
    double sum = 0.0;
    for (int64_t j = 0; j < k; ++j) {
      oi[j] = std::exp(xi[j] - mx);
      sum += oi[j];
    }
    for (int64_t j = 0; j < k; ++j) {
      oi[j] /= sum;
    }
  }
  if (recording({&a})) {
    out.set_requires_grad(true);
    Impl ai = a.impl(), oi = out.impl();
    GradientTape::current()->record([ai, oi, n, k] {
      double* ga = ensure_grad(ai.get()).data();
      const double* g = oi->grad.data();
      const double* s = oi->values.data();
      for (int64_t i = 0; i < n; ++i) {
        const double* gi = g + i * k;
        const double* si = s + i * k;
        double dot = 0.0;
        for (int64_t j = 0; j < k; ++j) {
          dot += gi[j] * si[j];
        }
        double* gai = ga + i * k;
        for (int64_t j = 0; j < k; ++j) {
          gai[j] += si[j] * (gi[j] - dot);
        }
      }
    });
  }
  return out;
}

namespace {

enum class Reduce { Sum, Mean, Max };

Tensor reduce_axis(const Tensor& a, int axis, Reduce kind) {
  require_rank(a, 2, "reduce");
  if (axis != 0 && axis != 1) {
    throw ShapeMismatch("reduce: axis must be 0 or 1, got " + std::to_string(axis));
  }
  const int64_t n = a.dim(0), d = a.dim(1);
  const int64_t out_len = axis == 0 ? d : n;
  const int64_t reduced = axis == 0 ? n : d;
  Tensor out = Tensor::zeros({out_len});
  const double* x = a.values().data();
  double* o = out.values().data();
  // argmax indices (flat into a) for the max reduction
  std::vector<int64_t> arg;
  if (kind == Reduce::Max) {
    arg.assign(static_cast<size_t>(out_len), 0);
    for (int64_t t = 0; t < out_len; ++t) {
      const int64_t stride = axis == 0 ? d : 1;
      const int64_t base = axis == 0 ? t : t * d;
      int64_t best = base;
      for (int64_t r = 1; r < reduced; ++r) {
        const int64_t idx = base + r * stride;
        if (x[idx] > x[best]) {  // ties keep the first index
          best = idx;
        }
      }
      arg[static_cast<size_t>(t)] = best;
      o[t] = x[best];
    }
  } else {
    for (int64_t i = 0; i < n; ++i) {
      for (int64_t j = 0; j < d; ++j) {
        o[axis == 0 ? j : i] += x[i * d + j];
      }
    }
    if (kind == Reduce::Mean) {
      for (int64_t t = 0; t < out_len; ++t) {
        o[t] /= static_cast<double>(reduced);
      }
    }
  }
  if (recording({&a})) {
    out.set_requires_grad(true);
    Impl ai = a.impl(), oi = out.impl();
    GradientTape::current()->record([ai, oi, axis, n, d, kind, reduced,
                                     arg = std::move(arg)] {
      double* ga = ensure_grad(ai.get()).data();
      const double* g = oi->grad.data();
      if (kind == Reduce::Max) {
        for (size_t t = 0; t < arg.size(); ++t) {
          ga[arg[t]] += g[t];
        }
        return;
      }
      const double f = kind == Reduce::Mean ? 1.0 / static_cast<double>(reduced) : 1.0;
      for (int64_t i = 0; i < n; ++i) {
        for (int64_t j = 0; j < d; ++j) {
          ga[i * d + j] += f * g[axis == 0 ? j : i];
        }
      }
    });
  }
  return out;
}

}  // namespace

Tensor sum(const Tensor& a, int axis) { return reduce_axis(a, axis, Reduce::Sum); }
Tensor mean(const Tensor& a, int axis) { return reduce_axis(a, axis, Reduce::Mean); }
Tensor max(const Tensor& a, int axis) { return reduce_axis(a, axis, Reduce::Max); }

Tensor sum_all(const Tensor& a) {
  Tensor out = Tensor::zeros({1});
  double acc = 0.0;
  for (double v : a.values()) {
    acc += v;
  }
  out.values()[0] = acc;
  if (recording({&a})) {
    out.set_requires_grad(true);
    Impl ai = a.impl(), oi = out.impl();
    GradientTape::current()->record([ai, oi] {
      const double g = oi->grad[0];
      double* ga = ensure_grad(ai.get()).data();
      const int64_t total = static_cast<int64_t>(ai->values.size());
      for (int64_t i = 0; i < total; ++i) {
        ga[i] += g;
      }
    });
  }
  return out;
}

namespace {

// Shared kernel for row-wise and whole-tensor L2 normalization.
Tensor l2_normalize_impl(const Tensor& a, int64_t rows, int64_t cols, double eps) {
  Tensor out = Tensor::from_values(a.shape(), a.values());
  std::vector<double> denoms(static_cast<size_t>(rows));
  std::vector<char> guarded(static_cast<size_t>(rows));
  double* o = out.values().data();
  for (int64_t i = 0; i < rows; ++i) {
    double sq = 0.0;
    for (int64_t j = 0; j < cols; ++j) {
      sq += o[i * cols + j] * o[i * cols + j];
    }
    const double norm = std::sqrt(sq);
    const bool guard = norm < eps;
    const double denom = guard ? eps : norm;
    denoms[static_cast<size_t>(i)] = denom;
    guarded[static_cast<size_t>(i)] = guard ? 1 : 0;
    for (int64_t j = 0; j < cols; ++j) {
      o[i * cols + j] /= denom;
    }
  }
  if (recording({&a})) {
    out.set_requires_grad(true);
    Impl ai = a.impl(), oi = out.impl();
    GradientTape::current()->record([ai, oi, rows, cols, denoms = std::move(denoms),
                                     guarded = std::move(guarded)] {
      double* ga = ensure_grad(ai.get()).data();
      const double* g = oi->grad.data();
      const double* y = oi->values.data();
      for (int64_t i = 0; i < rows; ++i) {
        const double denom = denoms[static_cast<size_t>(i)];
        const double* gi = g + i * cols;
        const double* yi = y + i * cols;
        double* gai = ga + i * cols;
        if (guarded[static_cast<size_t>(i)]) {
          // Guard branch: denominator is the constant eps.
          for (int64_t j = 0; j < cols; ++j) {
            gai[j] += gi[j] / denom;
          }
          continue;
        }
        double dot = 0.0;
        for (int64_t j = 0; j < cols; ++j) {
          dot += gi[j] * yi[j];
        }
        for (int64_t j = 0; j < cols; ++j) {
          gai[j] += (gi[j] - yi[j] * dot) / denom;
        }
      }
    });
  }
  return out;
}

}  // namespace

Tensor l2_normalize_rows(const Tensor& a, double eps) {
  require_rank(a, 2, "l2_normalize_rows");
  return l2_normalize_impl(a, a.dim(0), a.dim(1), eps);
}

Tensor l2_normalize(const Tensor& a, double eps) {
  require_rank(a, 1, "l2_normalize");
  return l2_normalize_impl(a, 1, a.dim(0), eps);
}

Tensor concat(const std::vector<Tensor>& parts, int axis) {
  if (parts.empty()) {
    throw ShapeMismatch("concat: no inputs");
  }
  if (axis != 0) {
    throw ShapeMismatch("concat: only axis 0 is supported");
  }
  const int rank = parts[0].ndim();
  std::vector<int64_t> shape = parts[0].shape();
  int64_t total0 = parts[0].dim(0);
  for (size_t i = 1; i < parts.size(); ++i) {
    if (parts[i].ndim() != rank ||
        (rank == 2 && parts[i].dim(1) != shape[1])) {
      throw ShapeMismatch("concat: incompatible part shapes " + shape_str(shape) +
                          " vs " + shape_str(parts[i].shape()));
    }
    total0 += parts[i].dim(0);
  }
  shape[0] = total0;
  Tensor out = Tensor::zeros(shape);
  double* o = out.values().data();
  int64_t offset = 0;
  bool needs_grad = false;
  for (const Tensor& p : parts) {
    std::copy(p.values().begin(), p.values().end(), o + offset);
    offset += p.size();
    needs_grad = needs_grad || p.requires_grad();
  }
  if (GradientTape::current() != nullptr && needs_grad) {
    out.set_requires_grad(true);
    std::vector<Impl> impls;
    impls.reserve(parts.size());
    for (const Tensor& p : parts) {
      impls.push_back(p.impl());
    }
    Impl oi = out.impl();
    GradientTape::current()->record([impls = std::move(impls), oi] {
      const double* g = oi->grad.data();
      int64_t off = 0;
      for (const Impl& pi : impls) {
        const int64_t len = static_cast<int64_t>(pi->values.size());
        if (pi->requires_grad) {
          double* gp = ensure_grad(pi.get()).data();
          for (int64_t i = 0; i < len; ++i) {
            gp[i] += g[off + i];
          }
        }
        off += len;
      }
    });
  }
  return out;
}

Tensor stack_rows(const std::vector<Tensor>& rows) {
  if (rows.empty()) {
    throw ShapeMismatch("stack_rows: no inputs");
  }
  const int64_t d = rows[0].dim(0);
  for (const Tensor& r : rows) {
    if (r.ndim() != 1 || r.dim(0) != d) {
      throw ShapeMismatch("stack_rows: expected rank-1 rows of length " +
                          std::to_string(d) + ", got " + shape_str(r.shape()));
    }
  }
  const int64_t n = static_cast<int64_t>(rows.size());
  Tensor out = Tensor::zeros({n, d});
  double* o = out.values().data();
  bool needs_grad = false;
  for (int64_t i = 0; i < n; ++i) {
    std::copy(rows[static_cast<size_t>(i)].values().begin(),
              rows[static_cast<size_t>(i)].values().end(), o + i * d);
    needs_grad = needs_grad || rows[static_cast<size_t>(i)].requires_grad();
  }
  if (GradientTape::current() != nullptr && needs_grad) {
    out.set_requires_grad(true);
    std::vector<Impl> impls;
    impls.reserve(rows.size());
    for (const Tensor& r : rows) {
      impls.push_back(r.impl());
    }
    Impl oi = out.impl();
    GradientTape::current()->record([impls = std::move(impls), oi, d] {
      const double* g = oi->grad.data();
      for (size_t i = 0; i < impls.size(); ++i) {
        if (!impls[i]->requires_grad) {
          continue;
        }
        double* gr = ensure_grad(impls[i].get()).data();
        for (int64_t j = 0; j < d; ++j) {
          gr[j] += g[static_cast<int64_t>(i) * d + j];
        }
      }
    });
  }
  return out;
}

Tensor slice_rows(const Tensor& a, int64_t begin, int64_t end) {
  require_rank(a, 2, "slice_rows");
  const int64_t n = a.dim(0), d = a.dim(1);
  if (begin < 0 || end > n || begin >= end) {
    throw ShapeMismatch("slice_rows: rows [" + std::to_string(begin) + "," +
                        std::to_string(end) + ") of " + shape_str(a.shape()));
  }
  Tensor out = Tensor::zeros({end - begin, d});
  std::copy(a.values().begin() + begin * d, a.values().begin() + end * d,
            out.values().begin());
  if (recording({&a})) {
    out.set_requires_grad(true);
    Impl ai = a.impl(), oi = out.impl();
    GradientTape::current()->record([ai, oi, begin, d] {
      double* ga = ensure_grad(ai.get()).data();
      const double* g = oi->grad.data();
      const int64_t len = static_cast<int64_t>(oi->values.size());
      for (int64_t i = 0; i < len; ++i) {
        ga[begin * d + i] += g[i];
      }
    });
  }
  return out;
}

Tensor transpose(const Tensor& a) {
  require_rank(a, 2, "transpose");
  const int64_t n = a.dim(0), m = a.dim(1);
  Tensor out = Tensor::zeros({m, n});
  const double* x = a.values().data();
  double* o = out.values().data();
  for (int64_t i = 0; i < n; ++i) {
    for (int64_t j = 0; j < m; ++j) {
      o[j * n + i] = x[i * m + j];
    }
  }
  if (recording({&a})) {
    out.set_requires_grad(true);
    Impl ai = a.impl(), oi = out.impl();
    GradientTape::current()->record([ai, oi, n, m] {
      double* ga = ensure_grad(ai.get()).data();
      const double* g = oi->grad.data();
      for (int64_t i = 0; i < n; ++i) {
        for (int64_t j = 0; j < m; ++j) {
          ga[i * m + j] += g[j * n + i];
        }
      }
    });
  }
  return out;
}

Tensor reshape(const Tensor& a, std::vector<int64_t> shape) {
  if (shape_size(shape) != a.size()) {
    throw ShapeMismatch("reshape: " + shape_str(a.shape()) + " to " + shape_str(shape));
  }
  Tensor out = Tensor::from_values(std::move(shape), a.values());
  if (recording({&a})) {
    out.set_requires_grad(true);
    Impl ai = a.impl(), oi = out.impl();
    GradientTape::current()->record([ai, oi] {
      double* ga = ensure_grad(ai.get()).data();
      const double* g = oi->grad.data();
      const int64_t total = static_cast<int64_t>(ai->values.size());
      for (int64_t i = 0; i < total; ++i) {
        ga[i] += g[i];
      }
    });
  }
  return out;
}

Tensor scale_rows(const Tensor& a, const Tensor& v) {
  require_rank(a, 2, "scale_rows");
  require_rank(v, 1, "scale_rows");
  const int64_t n = a.dim(0), d = a.dim(1);
  if (v.dim(0) != n) {
    throw ShapeMismatch("scale_rows: " + shape_str(a.shape()) + " rows vs " +
                        shape_str(v.shape()));
  }
  Tensor out = Tensor::from_values(a.shape(), a.values());
  double* o = out.values().data();
  const double* vv = v.values().data();
  for (int64_t i = 0; i < n; ++i) {
    for (int64_t j = 0; j < d; ++j) {
      o[i * d + j] *= vv[i];
    }
  }
  if (recording({&a, &v})) {
    out.set_requires_grad(true);
    Impl ai = a.impl(), vi = v.impl(), oi = out.impl();
    GradientTape::current()->record([ai, vi, oi, n, d] {
      const double* g = oi->grad.data();
      if (ai->requires_grad) {
        double* ga = ensure_grad(ai.get()).data();
        const double* vvv = vi->values.data();
        for (int64_t i = 0; i < n; ++i) {
          for (int64_t j = 0; j < d; ++j) {
            ga[i * d + j] += g[i * d + j] * vvv[i];
          }
        }
      }
      if (vi->requires_grad) {
        double* gv = ensure_grad(vi.get()).data();
        const double* av = ai->values.data();
        for (int64_t i = 0; i < n; ++i) {
          double acc = 0.0;
          for (int64_t j = 0; j < d; ++j) {
            acc += g[i * d + j] * av[i * d + j];
          }
          gv[i] += acc;
        }
      }
    });
  }
  return out;
}

double grad_check(const std::function<Tensor(const Tensor&)>& f, const Tensor& x,
                  double eps) {
  // Tape gradient.
  Tensor x_ad = x.clone();
  x_ad.set_requires_grad(true);
  {
    GradientTape tape;
    Tensor loss = f(x_ad);
    tape.backward(loss);
  }
  std::vector<double> g_ad(static_cast<size_t>(x.size()), 0.0);
  if (x_ad.has_grad()) {
    g_ad = x_ad.grad();
  }
  // Central finite differences, evaluated with no tape in scope.
  GradientTape* saved = t_current_tape;
  t_current_tape = nullptr;
  Tensor x_fd = x.clone();
  x_fd.set_requires_grad(false);
  double worst = 0.0;
  for (int64_t i = 0; i < x.size(); ++i) {
    const double v0 = x_fd.values()[static_cast<size_t>(i)];
    x_fd.values()[static_cast<size_t>(i)] = v0 + eps;
    const double up = f(x_fd).item();
    x_fd.values()[static_cast<size_t>(i)] = v0 - eps;
    const double down = f(x_fd).item();
    x_fd.values()[static_cast<size_t>(i)] = v0;
    const double g_fd = (up - down) / (2.0 * eps);
    const double g = g_ad[static_cast<size_t>(i)];
    const double err = std::abs(g - g_fd) / std::max(1e-8, std::abs(g) + std::abs(g_fd));
    worst = std::max(worst, err);
  }
  t_current_tape = saved;
  return worst;
}

}  // namespace footspot
