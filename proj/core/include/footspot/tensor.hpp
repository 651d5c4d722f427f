#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

namespace footspot {

namespace detail {
struct TensorImpl {
  std::vector<int64_t> shape;
  std::vector<double> values;
  std::vector<double> grad;  // allocated lazily, same length as values
  bool requires_grad = false;
};
}  // namespace detail

// Dense row-major tensor of doubles (rank 1 or 2 in practice). Copying a
// Tensor copies the handle, not the buffer; gradients accumulate on the
// shared buffer, which is what ties parameters to the tape.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(std::vector<int64_t> shape, bool requires_grad = false);
  static Tensor from_values(std::vector<int64_t> shape, std::vector<double> values,
                            bool requires_grad = false);
  static Tensor scalar(double v);

  bool defined() const { return impl_ != nullptr; }
  const std::vector<int64_t>& shape() const { return impl_->shape; }
  int ndim() const { return static_cast<int>(impl_->shape.size()); }
  int64_t dim(int i) const { return impl_->shape[static_cast<size_t>(i)]; }
  int64_t size() const { return static_cast<int64_t>(impl_->values.size()); }

  std::vector<double>& values() { return impl_->values; }
  const std::vector<double>& values() const { return impl_->values; }

  bool requires_grad() const { return impl_->requires_grad; }
  void set_requires_grad(bool v) { impl_->requires_grad = v; }

  bool has_grad() const { return impl_ && !impl_->grad.empty(); }
  // Allocates a zero gradient buffer on first use.
  std::vector<double>& grad();
  const std::vector<double>& grad() const;
  void zero_grad();

  // Value of a single-element tensor; throws NotScalar otherwise.
  double item() const;

  // Deep copy with detached gradient state.
  Tensor clone() const;

  std::shared_ptr<detail::TensorImpl> impl() const { return impl_; }

 private:
  explicit Tensor(std::shared_ptr<detail::TensorImpl> impl) : impl_(std::move(impl)) {}
  std::shared_ptr<detail::TensorImpl> impl_;
};

// Reverse-mode gradient tape. Constructing one makes it the active tape for
// the current thread (ops record onto it); destruction restores the previous
// tape. A tape and the tensors recorded on it belong to a single thread.
class GradientTape {
 public:
  GradientTape();
  ~GradientTape();
  GradientTape(const GradientTape&) = delete;
  GradientTape& operator=(const GradientTape&) = delete;

  static GradientTape* current();

  void record(std::function<void()> backward_fn);
  size_t node_count() const { return nodes_.size(); }

  // Seeds d(loss)/d(loss) = 1 and replays recorded nodes in exact reverse
  // order, accumulating into .grad() of every tensor that requires grad.
  // Throws NotScalar if loss has more than one element.
  void backward(const Tensor& loss);

 private:
  std::vector<std::function<void()>> nodes_;
  GradientTape* prev_ = nullptr;
};

// ---- differentiable primitives -------------------------------------------
// Each op computes eagerly and, when a tape is active and any input requires
// grad, records a backward closure. Shapes are validated up front
// (ShapeMismatch).

Tensor matmul(const Tensor& a, const Tensor& b);     // (n,k)x(k,m) -> (n,m)
Tensor add(const Tensor& a, const Tensor& b);        // same shape, or (n,d)+(d,)
Tensor sub(const Tensor& a, const Tensor& b);        // same shape
Tensor mul(const Tensor& a, const Tensor& b);        // elementwise, same shape
Tensor scale(const Tensor& a, double c);
Tensor add_scalar(const Tensor& a, double c);
Tensor relu(const Tensor& a);
Tensor sigmoid(const Tensor& a);
Tensor exp(const Tensor& a);
Tensor log(const Tensor& a);
Tensor softmax_rows(const Tensor& a);                // (n,k), softmax over axis 1
Tensor sum(const Tensor& a, int axis);               // (n,d) -> (d,) or (n,)
Tensor mean(const Tensor& a, int axis);
Tensor max(const Tensor& a, int axis);               // gradient to first argmax
Tensor sum_all(const Tensor& a);                     // -> scalar
// x / max(||x||, eps); the guard denominator is treated as a constant in the
// backward pass, so an all-zero row stays zero with gradient g/eps.
Tensor l2_normalize_rows(const Tensor& a, double eps = 1e-12);  // per row of (n,d)
Tensor l2_normalize(const Tensor& a, double eps = 1e-12);       // whole rank-1 tensor
Tensor concat(const std::vector<Tensor>& parts, int axis);      // axis 0
Tensor stack_rows(const std::vector<Tensor>& rows);             // n x (d,) -> (n,d)
Tensor slice_rows(const Tensor& a, int64_t begin, int64_t end); // rows [begin,end)
Tensor transpose(const Tensor& a);                   // (n,m) -> (m,n)
Tensor reshape(const Tensor& a, std::vector<int64_t> shape);
Tensor scale_rows(const Tensor& a, const Tensor& v); // row i of (n,d) times v[i]

// Max relative elementwise error between the tape gradient of f at x and a
// central finite difference: |g_ad - g_fd| / max(1e-8, |g_ad| + |g_fd|).
// f must be a pure scalar-valued function of x.
double grad_check(const std::function<Tensor(const Tensor&)>& f, const Tensor& x,
                  double eps = 1e-4);

}  // namespace footspot
