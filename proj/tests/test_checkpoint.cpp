#include <fstream>

#include "doctest.h"
#include "svkit/checkpoint.hpp"
#include "svkit/errors.hpp"
#include "testutil.hpp"

using svkit::Error;
using svkit::ParamSet;
using svkit::Tensor;

TEST_SUITE_BEGIN("checkpoint");

namespace {

struct ToyModel {
  Tensor w = Tensor::from({2, 3}, {1, 2, 3, 4, 5, 6}, true);
  Tensor b = Tensor::from({3}, {0.5, -0.5, 0.25}, true);
  std::vector<double> running = {7.0, 8.0};

  ParamSet params() {
    ParamSet set;
    set.add("w", w);
    set.add("b", b);
    set.add("bn.running", &running);
    return set;
  }
};

}  // namespace

TEST_CASE("save and load round trip") {
  testutil::TempDir dir("ckpt");
  ToyModel src;
  src.params().save(dir.file("model.bin"));

  ToyModel dst;
  for (auto& v : dst.w.value()) v = 0.0;
  for (auto& v : dst.b.value()) v = 0.0;
  dst.running = {0.0, 0.0};
  dst.params().load(dir.file("model.bin"));

  CHECK(dst.w.value() == src.w.value());
  CHECK(dst.b.value() == src.b.value());
  CHECK(dst.running == src.running);
}

TEST_CASE("save is byte deterministic") {
  testutil::TempDir dir("ckpt");
  ToyModel m;
  m.params().save(dir.file("a.bin"));
  m.params().save(dir.file("b.bin"));
  const auto a = testutil::read_file_bytes(dir.file("a.bin"));
  CHECK(!a.empty());
  CHECK(a == testutil::read_file_bytes(dir.file("b.bin")));
}

TEST_CASE("header layout is pinned") {
  testutil::TempDir dir("ckpt");
  ToyModel m;
  m.params().save(dir.file("m.bin"));
  const auto bytes = testutil::read_file_bytes(dir.file("m.bin"));
  REQUIRE(bytes.size() > 12);
  CHECK(bytes.substr(0, 4) == "SVKP");
  CHECK(bytes[4] == 1);  // version 1, little-endian u32
  CHECK(bytes[5] == 0);
  CHECK(bytes[8] == 3);  // three entries
  // first entry: name "w" (u16 len), ndim 1... ndim is 2 for the matrix
  CHECK(bytes[12] == 1);
  CHECK(bytes[14] == 'w');
  CHECK(bytes[15] == 2);  // ndim
}

TEST_CASE("mismatches are rejected") {
  testutil::TempDir dir("ckpt");
  ToyModel m;
  m.params().save(dir.file("m.bin"));

  SUBCASE("wrong name") {
    ToyModel other;
    ParamSet set;
    set.add("not_w", other.w);
    set.add("b", other.b);
    set.add("bn.running", &other.running);
    CHECK_THROWS_AS(set.load(dir.file("m.bin")), Error);
  }
  SUBCASE("wrong shape") {
    ParamSet set;
    Tensor w = Tensor::zeros({3, 2});
    Tensor b = Tensor::zeros({3});
    std::vector<double> running(2, 0.0);
    set.add("w", w);
    set.add("b", b);
    set.add("bn.running", &running);
    CHECK_THROWS_AS(set.load(dir.file("m.bin")), Error);
  }
  SUBCASE("wrong entry count") {
    ParamSet set;
    Tensor w = Tensor::zeros({2, 3});
    set.add("w", w);
    CHECK_THROWS_AS(set.load(dir.file("m.bin")), Error);
  }
  SUBCASE("not a checkpoint") {
    std::ofstream(dir.file("junk.bin")) << "hello world, definitely not binary";
    ToyModel other;
    CHECK_THROWS_AS(other.params().load(dir.file("junk.bin")), Error);
  }
  SUBCASE("truncated") {
    const auto bytes = testutil::read_file_bytes(dir.file("m.bin"));
    std::ofstream out(dir.file("trunc.bin"), std::ios::binary);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size() / 2));
    out.close();
    ToyModel other;
    CHECK_THROWS_AS(other.params().load(dir.file("trunc.bin")), Error);
  }
}

TEST_SUITE_END();
