#include "doctest.h"

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "footspot/checkpoint.hpp"
#include "footspot/errors.hpp"
#include "footspot/rng.hpp"

using namespace footspot;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("footspot_ckpt_test_" + std::to_string(::getpid()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

std::string file_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

}  // namespace

TEST_CASE("checkpoint round-trips values and metadata bit-exactly") {
  TempDir tmp;
  Rng rng(1);
  std::vector<double> vals(64);
  for (double& v : vals) v = rng.normal() * 1e-7;
  vals[0] = 0.1 + 0.2;  // not exactly representable; survives only if stored raw
  Tensor t = Tensor::from_values({8, 8}, vals);
  Tensor u = Tensor::from_values({3}, {1.0, -2.5, 3.25});

  fs::path p = tmp.path / "a.ckpt";
  save_checkpoint(p, R"({"k":1})", {{"w", t}, {"b", u}});
  LoadedCheckpoint lc = load_checkpoint(p);
  CHECK(lc.meta_json == R"({"k":1})");
  REQUIRE(lc.tensors.count("w") == 1);
  REQUIRE(lc.tensors.count("b") == 1);
  CHECK(lc.tensors.at("w").shape() == std::vector<int64_t>{8, 8});
  CHECK(lc.tensors.at("w").values() == vals);
  CHECK(lc.tensors.at("b").values() == std::vector<double>{1.0, -2.5, 3.25});
}

TEST_CASE("saving twice produces identical bytes") {
  TempDir tmp;
  Tensor t = Tensor::from_values({2, 2}, {1, 2, 3, 4});
  save_checkpoint(tmp.path / "x1.ckpt", "{}", {{"t", t}});
  save_checkpoint(tmp.path / "x2.ckpt", "{}", {{"t", t}});
  CHECK(file_bytes(tmp.path / "x1.ckpt") == file_bytes(tmp.path / "x2.ckpt"));
}

TEST_CASE("missing file raises IoError") {
  CHECK_THROWS_AS(load_checkpoint("/nonexistent/dir/z.ckpt"), IoError);
}

TEST_CASE("corrupt file raises FormatError") {
  TempDir tmp;
  fs::path p = tmp.path / "bad.ckpt";
  std::ofstream(p, std::ios::binary) << "this is not a checkpoint";
  CHECK_THROWS_AS(load_checkpoint(p), FormatError);
}

TEST_CASE("truncated file raises FormatError") {
  TempDir tmp;
  fs::path p = tmp.path / "t.ckpt";
  Tensor t = Tensor::from_values({4, 4}, std::vector<double>(16, 1.5));
  save_checkpoint(p, "{}", {{"t", t}});
  std::string bytes = file_bytes(p);
  std::ofstream(p, std::ios::binary) << bytes.substr(0, bytes.size() - 10);
  CHECK_THROWS_AS(load_checkpoint(p), FormatError);
}
