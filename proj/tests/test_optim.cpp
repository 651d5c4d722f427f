#include "doctest.h"

#include <cmath>

#include "footspot/errors.hpp"
#include "footspot/optim.hpp"
#include "footspot/tensor.hpp"

using namespace footspot;

TEST_CASE("adam converges on a 1-d quadratic") {
  Tensor x = Tensor::from_values({1}, {10.0}, true);
  Adam opt({x}, AdamConfig{.lr = 1e-1});
  for (int i = 0; i < 500; ++i) {
    opt.zero_grad();
    GradientTape tape;
    Tensor diff = add_scalar(x, -3.0);
    tape.backward(mul(diff, diff));
    opt.step();
  }
  CHECK(std::abs(x.values()[0] - 3.0) < 1e-2);
}

TEST_CASE("adam first step moves by lr along the sign of the gradient") {
  Tensor x = Tensor::from_values({2}, {1.0, -2.0}, true);
  Adam opt({x}, AdamConfig{.lr = 0.05});
  opt.zero_grad();
  GradientTape tape;
  tape.backward(sum_all(mul(x, x)));
  opt.step();
  // m_hat/sqrt(v_hat) == sign(g) on the first step (eps-small correction).
  CHECK(x.values()[0] == doctest::Approx(1.0 - 0.05).epsilon(1e-6));
  CHECK(x.values()[1] == doctest::Approx(-2.0 + 0.05).epsilon(1e-6));
  CHECK(opt.step_count() == 1);
}

TEST_CASE("plateau scheduler walks the documented schedule") {
  PlateauScheduler s;
  s.lr = 1e-3;

  SUBCASE("improving losses keep the lr") {
    double loss = 10.0;
    for (int i = 0; i < 30; ++i) {
      auto [new_lr, stop] = s.step(loss);
      CHECK(new_lr == 1e-3);
      CHECK_FALSE(stop);
      loss *= 0.9;
    }
  }

  SUBCASE("ten stale epochs cut the lr by ten") {
    s.step(1.0);
    for (int i = 0; i < 9; ++i) CHECK(s.step(1.0).first == 1e-3);
    CHECK(s.step(1.0).first == doctest::Approx(1e-4));
  }

  SUBCASE("equal loss does not count as improvement") {
    s.step(1.0);
    for (int i = 0; i < 10; ++i) s.step(1.0);
    CHECK(s.lr == doctest::Approx(1e-4));
  }

  SUBCASE("stops once the lr falls below 1e-8") {
    s.lr = 1e-8;
    s.step(1.0);
    std::pair<double, bool> r{};
    for (int i = 0; i < 10; ++i) r = s.step(1.0);
    CHECK(r.first == doctest::Approx(1e-9));
    CHECK(r.second);
  }

  SUBCASE("constant losses stop after six plateaus") {
    int epochs = 0;
    bool stopped = false;
    while (!stopped) {
      ++epochs;
      stopped = s.step(5.0).second;
      REQUIRE(epochs < 100);
    }
    // 1e-3 -> ... -> 1e-9: six cuts, ten stale epochs each, plus the first call.
    CHECK(epochs == 61);
  }

  SUBCASE("rejects non-finite metrics") {
    CHECK_THROWS_AS(s.step(std::nan("")), NonFinite);
  }
}

TEST_CASE("adam step without a backward pass throws") {
  Tensor x = Tensor::from_values({1}, {1.0}, true);
  Adam opt({x}, {});
  CHECK_THROWS_AS(opt.step(), MissingGrad);
}
