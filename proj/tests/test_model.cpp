#include "doctest.h"

#include <cmath>
#include <filesystem>

#include "footspot/errors.hpp"
#include "footspot/model.hpp"
#include "footspot/rng.hpp"
#include "footspot/synthetic.hpp"

using namespace footspot;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("footspot_model_test_" + std::to_string(::getpid()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

GeneratorConfig tiny_gen(uint64_t seed) {
  GeneratorConfig g;
  g.seed = seed;
  g.duration_s = 120.0;
  g.fps = 5.0;
  g.events_per_class = {1, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 1};
  return g;
}

}  // namespace

TEST_CASE("descriptor lengths per method") {
  auto len = [](const std::string& m) {
    ModelConfig cfg;
    cfg.method = m;
    return SpottingModel::init(cfg, 1).descriptor_len();
  };
  CHECK(len("avg") == 32);
  CHECK(len("max++") == 64);
  CHECK(len("netvlad") == 2048);
  CHECK(len("netvlad++") == 2048);  // K/2 clusters per half
  CHECK(len("netrvlad") == 2048);
}

TEST_CASE("forward chunk emits probabilities for every class") {
  TrackedMatch m = resample(generate_match(tiny_gen(5)), 2.0);
  auto chunks = make_training_chunks(m, 10.0, 10.0);
  REQUIRE(!chunks.empty());

  for (const std::string method : {"avg", "max", "netvlad++", "netrvlad"}) {
    ModelConfig cfg;
    cfg.method = method;
    SpottingModel model = SpottingModel::init(cfg, 7);
    GradientTape tape;
    Tensor probs = model.forward_chunk(chunks[0], Mode::Eval);
    REQUIRE(probs.shape() == std::vector<int64_t>{kNumEventClasses});
    for (double p : probs.values()) {
      CHECK(p > 0.0);
      CHECK(p < 1.0);
    }
  }
}

TEST_CASE("bce loss oracle") {
  std::array<uint8_t, kNumEventClasses> label{};
  label[3] = 1;

  SUBCASE("all-0.5 probabilities give n ln 2") {
    GradientTape tape;
    Tensor probs = Tensor::from_values({kNumEventClasses},
                                       std::vector<double>(kNumEventClasses, 0.5));
    Tensor loss = bce_loss(probs, label);
    CHECK(loss.item() == doctest::Approx(kNumEventClasses * std::log(2.0)).epsilon(1e-12));
  }

  SUBCASE("hand-computed asymmetric case") {
    GradientTape tape;
    std::vector<double> p(kNumEventClasses, 0.1);
    p[3] = 0.8;
    Tensor probs = Tensor::from_values({kNumEventClasses}, std::move(p));
    double expected = -std::log(0.8) - 11 * std::log(0.9);
    CHECK(bce_loss(probs, label).item() == doctest::Approx(expected).epsilon(1e-9));
  }

  SUBCASE("positive weight scales only the positive terms") {
    GradientTape tape;
    std::vector<double> p(kNumEventClasses, 0.5);
    Tensor probs = Tensor::from_values({kNumEventClasses}, std::move(p));
    std::array<double, kNumEventClasses> w;
    w.fill(1.0);
    w[3] = 5.0;
    double expected = kNumEventClasses * std::log(2.0) + 4.0 * std::log(2.0);
    CHECK(bce_loss(probs, label, &w).item() == doctest::Approx(expected).epsilon(1e-9));
  }

  SUBCASE("clamping keeps extreme probabilities finite") {
    GradientTape tape;
    std::vector<double> p(kNumEventClasses, 1.0);
    Tensor probs = Tensor::from_values({kNumEventClasses}, std::move(p));
    CHECK(std::isfinite(bce_loss(probs, label).item()));
  }
}

TEST_CASE("save and load round-trip reproduces outputs exactly") {
  TempDir tmp;
  TrackedMatch m = resample(generate_match(tiny_gen(11)), 2.0);
  auto chunks = make_training_chunks(m, 10.0, 10.0);
  REQUIRE(!chunks.empty());

  ModelConfig cfg;
  cfg.method = "netvlad++";
  SpottingModel a = SpottingModel::init(cfg, 3);
  fs::path p = tmp.path / "model.ckpt";
  a.save(p);
  SpottingModel b = SpottingModel::load(p);
  CHECK(b.cfg.method == "netvlad++");
  CHECK(b.cfg.clusters == a.cfg.clusters);

  GradientTape tape;
  Tensor pa = a.forward_chunk(chunks[0], Mode::Eval);
  Tensor pb = b.forward_chunk(chunks[0], Mode::Eval);
  for (int c = 0; c < kNumEventClasses; ++c)
    CHECK(pa.values()[static_cast<size_t>(c)] == pb.values()[static_cast<size_t>(c)]);
}

TEST_CASE("clone detaches parameter storage") {
  ModelConfig cfg;
  cfg.method = "avg";
  SpottingModel a = SpottingModel::init(cfg, 9);
  SpottingModel b = a.clone();
  a.head_w.values()[0] += 1.0;
  CHECK(b.head_w.values()[0] != a.head_w.values()[0]);
}

TEST_CASE("init rejects malformed configs") {
  ModelConfig bad;
  bad.method = "vlad--";
  CHECK_THROWS_AS(SpottingModel::init(bad, 1), ConfigError);
}

TEST_CASE("same seed gives identical parameters, different seed differs") {
  ModelConfig cfg;
  SpottingModel a = SpottingModel::init(cfg, 4);
  SpottingModel b = SpottingModel::init(cfg, 4);
  SpottingModel c = SpottingModel::init(cfg, 5);
  CHECK(a.head_w.values() == b.head_w.values());
  CHECK(a.head_w.values() != c.head_w.values());
}
