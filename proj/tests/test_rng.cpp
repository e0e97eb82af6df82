#include <cmath>

#include "doctest.h"
#include "svkit/rng.hpp"

using svkit::Rng;

TEST_SUITE_BEGIN("rng");

TEST_CASE("same seed gives the same stream") {
  Rng a(123), b(123);
  for (int i = 0; i < 1000; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("different seeds and forks diverge") {
  Rng a(1), b(2);
  int same = 0;
  for (int i = 0; i < 64; ++i) same += a.next_u64() == b.next_u64();
  CHECK(same == 0);

  Rng base(99);
  Rng f1 = base.fork(0), f2 = base.fork(1);
  same = 0;
  for (int i = 0; i < 64; ++i) same += f1.next_u64() == f2.next_u64();
  CHECK(same == 0);
  // forking does not disturb the parent
  Rng base2(99);
  base2.fork(0);
  Rng base3(99);
  CHECK(base2.next_u64() == base3.next_u64());
}

TEST_CASE("uniform values stay in range with a sane mean") {
  Rng rng(7);
  double sum = 0.0;
  for (int i = 0; i < 20000; ++i) {
    const double v = rng.uniform();
    CHECK(v >= 0.0);
    CHECK(v < 1.0);
    sum += v;
  }
  CHECK(std::abs(sum / 20000 - 0.5) < 0.01);
}

TEST_CASE("uniform_int covers the range") {
  Rng rng(11);
  int counts[5] = {0, 0, 0, 0, 0};
  for (int i = 0; i < 5000; ++i) counts[rng.uniform_int(5)]++;
  for (int c : counts) CHECK(c > 800);
  CHECK_THROWS(rng.uniform_int(0));
}

TEST_CASE("normal has roughly unit moments") {
  Rng rng(5);
  double sum = 0.0, sq = 0.0;
  const int n = 50000;
  for (int i = 0; i < n; ++i) {
    const double v = rng.normal();
    sum += v;
    sq += v * v;
  }
  CHECK(std::abs(sum / n) < 0.02);
  CHECK(std::abs(sq / n - 1.0) < 0.03);
}

TEST_CASE("shuffle is a permutation") {
  Rng rng(3);
  std::vector<int> v = {0, 1, 2, 3, 4, 5, 6, 7};
  rng.shuffle(v);
  std::vector<int> sorted = v;
  std::sort(sorted.begin(), sorted.end());
  CHECK(sorted == std::vector<int>{0, 1, 2, 3, 4, 5, 6, 7});
}

TEST_SUITE_END();
