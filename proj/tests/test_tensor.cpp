#include "doctest.h"

#include <cmath>
#include <vector>

#include "footspot/errors.hpp"
#include "footspot/rng.hpp"
#include "footspot/tensor.hpp"

using namespace footspot;

namespace {

Tensor random_tensor(std::vector<int64_t> shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  int64_t n = 1;
  for (int64_t d : shape) n *= d;
  std::vector<double> v(static_cast<size_t>(n));
  for (double& x : v) x = rng.uniform(lo, hi);
  return Tensor::from_values(std::move(shape), std::move(v), true);
}

// Projects an op output to a scalar with fixed pseudo-random weights so every
// output element contributes to the checked gradient.
Tensor project(const Tensor& t, uint64_t salt) {
  Rng rng(salt);
  std::vector<double> w(static_cast<size_t>(t.size()));
  for (double& x : w) x = rng.uniform(-1.0, 1.0);
  Tensor flat = t.ndim() == 1 ? t : reshape(t, {t.size()});
  return sum_all(mul(flat, Tensor::from_values({t.size()}, std::move(w))));
}

}  // namespace

TEST_CASE("matmul value oracle") {
  Tensor a = Tensor::from_values({2, 3}, {1, 2, 3, 4, 5, 6});
  Tensor b = Tensor::from_values({3, 2}, {7, 8, 9, 10, 11, 12});
  Tensor c = matmul(a, b);
  CHECK(c.shape() == std::vector<int64_t>{2, 2});
  CHECK(c.values() == std::vector<double>{58, 64, 139, 154});
  CHECK_THROWS_AS(matmul(a, a), ShapeMismatch);
}

TEST_CASE("softmax rows sum to one and shift invariance") {
  Tensor x = Tensor::from_values({2, 3}, {1, 2, 3, -5, 0, 5});
  Tensor s = softmax_rows(x);
  for (int r = 0; r < 2; ++r) {
    double total = 0;
    for (int c = 0; c < 3; ++c) total += s.values()[static_cast<size_t>(r * 3 + c)];
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
  }
  Tensor shifted = softmax_rows(add_scalar(x, 100.0));
  for (size_t i = 0; i < 6; ++i)
    CHECK(shifted.values()[i] == doctest::Approx(s.values()[i]).epsilon(1e-12));
}

TEST_CASE("broadcast add of bias row") {
  Tensor x = Tensor::from_values({2, 2}, {1, 2, 3, 4});
  Tensor b = Tensor::from_values({2}, {10, 20});
  Tensor y = add(x, b);
  CHECK(y.values() == std::vector<double>{11, 22, 13, 24});
}

TEST_CASE("l2 normalize zero guard") {
  Tensor z = Tensor::from_values({3}, {0, 0, 0});
  Tensor n = l2_normalize(z);
  CHECK(n.values() == std::vector<double>{0, 0, 0});
  Tensor rows = Tensor::from_values({2, 2}, {3, 4, 0, 0});
  Tensor nr = l2_normalize_rows(rows);
  CHECK(nr.values()[0] == doctest::Approx(0.6));
  CHECK(nr.values()[1] == doctest::Approx(0.8));
  CHECK(nr.values()[2] == 0.0);
  CHECK(nr.values()[3] == 0.0);
}

TEST_CASE("gradient accumulates when a tensor is used twice") {
  GradientTape tape;
  Tensor x = Tensor::from_values({2}, {1.0, 2.0}, true);
  Tensor y = sum_all(add(x, x));
  tape.backward(y);
  CHECK(x.grad() == std::vector<double>{2.0, 2.0});
}

TEST_CASE("backward requires scalar loss") {
  GradientTape tape;
  Tensor x = Tensor::from_values({2}, {1.0, 2.0}, true);
  Tensor y = add(x, x);
  CHECK_THROWS_AS(tape.backward(y), NotScalar);
}

TEST_CASE("finite difference checks for every primitive") {
  Rng rng(20260814);
  uint64_t salt = 1;
  auto check = [&](const std::function<Tensor(const Tensor&)>& f, const Tensor& x) {
    double err = grad_check(f, x);
    CAPTURE(salt);
    CHECK(err < 1e-4);
  };

  for (int rep = 0; rep < 3; ++rep) {
    int64_t n = 2 + static_cast<int64_t>(rng.below(3));
    int64_t d = 2 + static_cast<int64_t>(rng.below(3));
    ++salt;

    check([&](const Tensor& x) { return project(matmul(x, random_tensor({d, 3}, rng)), salt); },
          random_tensor({n, d}, rng));
    check([&](const Tensor& x) { return project(add(x, random_tensor({d}, rng)), salt); },
          random_tensor({n, d}, rng));
    check([&](const Tensor& x) { return project(sub(random_tensor({n, d}, rng), x), salt); },
          random_tensor({n, d}, rng));
    check([&](const Tensor& x) { return project(mul(x, random_tensor({n, d}, rng)), salt); },
          random_tensor({n, d}, rng));
    check([&](const Tensor& x) { return project(scale(x, -1.7), salt); },
          random_tensor({n, d}, rng));
    // Inputs bounded away from the relu kink.
    {
      Tensor x = random_tensor({n, d}, rng);
      for (double& v : x.values()) v += (v >= 0 ? 0.5 : -0.5);
      check([&](const Tensor& t) { return project(relu(t), salt); }, x);
    }
    check([&](const Tensor& x) { return project(sigmoid(x), salt); }, random_tensor({n, d}, rng));
    check([&](const Tensor& x) { return project(footspot::exp(x), salt); },
          random_tensor({n, d}, rng));
    check([&](const Tensor& x) { return project(footspot::log(x), salt); },
          random_tensor({n, d}, rng, 0.5, 2.0));
    check([&](const Tensor& x) { return project(softmax_rows(x), salt); },
          random_tensor({n, d}, rng));
    check([&](const Tensor& x) { return project(sum(x, 0), salt); }, random_tensor({n, d}, rng));
    check([&](const Tensor& x) { return project(sum(x, 1), salt); }, random_tensor({n, d}, rng));
    check([&](const Tensor& x) { return project(mean(x, 0), salt); }, random_tensor({n, d}, rng));
    // Max rows spaced apart so the argmax is stable under the FD step.
    {
      Tensor x = random_tensor({n, d}, rng);
      for (int64_t i = 0; i < x.size(); ++i) x.values()[static_cast<size_t>(i)] += 3.0 * static_cast<double>(i % d);
      check([&](const Tensor& t) { return project(max(t, 0), salt); }, x);
    }
    check([&](const Tensor& x) { return sum_all(x); }, random_tensor({n, d}, rng));
    check([&](const Tensor& x) { return project(l2_normalize_rows(x), salt); },
          random_tensor({n, d}, rng, 0.3, 1.0));
    check([&](const Tensor& x) { return project(l2_normalize(x), salt); },
          random_tensor({n * d}, rng, 0.3, 1.0));
    check([&](const Tensor& x) {
      return project(concat({x, random_tensor({2, d}, rng)}, 0), salt);
    }, random_tensor({n, d}, rng));
    check([&](const Tensor& x) { return project(slice_rows(x, 1, n), salt); },
          random_tensor({n, d}, rng));
    check([&](const Tensor& x) { return project(transpose(x), salt); },
          random_tensor({n, d}, rng));
    check([&](const Tensor& x) { return project(reshape(x, {d, n}), salt); },
          random_tensor({n, d}, rng));
    check([&](const Tensor& x) { return project(scale_rows(x, random_tensor({n}, rng)), salt); },
          random_tensor({n, d}, rng));
    check([&](const Tensor& x) { return project(add_scalar(x, 0.37), salt); },
          random_tensor({n, d}, rng));
  }
}

TEST_CASE("finite difference check through a deep composition") {
  Rng rng(77);
  Tensor w1 = random_tensor({4, 6}, rng);
  Tensor w2 = random_tensor({6, 3}, rng);
  auto f = [&](const Tensor& x) {
    Tensor h = relu(add_scalar(matmul(x, w1), 0.3));
    Tensor s = softmax_rows(matmul(h, w2));
    Tensor pooled = l2_normalize(mean(s, 0));
    return project(pooled, 99);
  };
  Tensor x = random_tensor({5, 4}, rng);
  CHECK(grad_check(f, x) < 1e-4);
}

TEST_CASE("stack rows matches manual layout and propagates gradients") {
  GradientTape tape;
  Tensor a = Tensor::from_values({2}, {1, 2}, true);
  Tensor b = Tensor::from_values({2}, {3, 4}, true);
  Tensor s = stack_rows({a, b});
  CHECK(s.shape() == std::vector<int64_t>{2, 2});
  CHECK(s.values() == std::vector<double>{1, 2, 3, 4});
  tape.backward(sum_all(mul(s, s)));
  CHECK(a.grad() == std::vector<double>{2, 4});
  CHECK(b.grad() == std::vector<double>{6, 8});
}

TEST_CASE("nested tapes restore the outer tape") {
  GradientTape outer;
  CHECK(GradientTape::current() == &outer);
  {
    GradientTape inner;
    CHECK(GradientTape::current() == &inner);
  }
  CHECK(GradientTape::current() == &outer);
}
