#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdint>
#include <vector>

#include "grk/rng.hpp"

using grk::RngStream;

TEST_CASE("same seed and stream replay identically", "[rng]") {
  RngStream a(42, 7);
  RngStream b(42, 7);
  for (int i = 0; i < 1000; ++i) {
    REQUIRE(a.next_u64() == b.next_u64());
  }
}

TEST_CASE("distinct streams differ", "[rng]") {
  RngStream a(42, 0);
  RngStream b(42, 1);
  RngStream c(43, 0);
  int equal_ab = 0;
  int equal_ac = 0;
  for (int i = 0; i < 256; ++i) {
    const std::uint64_t va = a.next_u64();
    if (va == b.next_u64()) ++equal_ab;
    if (va == c.next_u64()) ++equal_ac;
  }
  CHECK(equal_ab == 0);
  CHECK(equal_ac == 0);
}

TEST_CASE("unit draws live strictly inside (0,1)", "[rng]") {
  RngStream rng(1, 0);
  double lo = 1.0;
  double hi = 0.0;
  for (int i = 0; i < 1000000; ++i) {
    const double u = rng.next_unit();
    lo = std::min(lo, u);
    hi = std::max(hi, u);
  }
  CHECK(lo > 0.0);
  CHECK(hi < 1.0);
}

TEST_CASE("unit draws have uniform moments", "[rng]") {
  RngStream rng(1234, 5);
  const int n = 1000000;
  double sum = 0.0;
  double sumsq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double u = rng.next_unit();
    sum += u;
    sumsq += u * u;
  }
  const double mean = sum / n;
  const double var = sumsq / n - mean * mean;
  // 4-sigma bands: sd(mean) = sqrt(1/12/n), sd(var) ~ sqrt((m4 - m2^2)/n).
  CHECK(std::abs(mean - 0.5) < 4.0 * std::sqrt(1.0 / 12.0 / n));
  CHECK(std::abs(var - 1.0 / 12.0) < 4.0 * std::sqrt((1.0 / 80.0 - 1.0 / 144.0) / n));
}

TEST_CASE("high byte is uniform over buckets", "[rng]") {
  RngStream rng(99, 2);
  const int n = 1 << 20;
  std::vector<int> buckets(256, 0);
  for (int i = 0; i < n; ++i) {
    ++buckets[rng.next_u64() >> 56];
  }
  const double expected = n / 256.0;
  const double sd = std::sqrt(expected * (1.0 - 1.0 / 256.0));
  for (int b = 0; b < 256; ++b) {
    REQUIRE(std::abs(buckets[b] - expected) < 5.0 * sd);
  }
}

TEST_CASE("substream derivation ignores parent position", "[rng]") {
  RngStream parent(7, 3);
  RngStream before = parent.substream(11);
  parent.next_u64();
  parent.next_u64();
  RngStream after = parent.substream(11);
  for (int i = 0; i < 64; ++i) {
    REQUIRE(before.next_u64() == after.next_u64());
  }
}

TEST_CASE("substreams are distinct from parent and siblings", "[rng]") {
  RngStream parent(7, 3);
  RngStream s0 = parent.substream(0);
  RngStream s1 = parent.substream(1);
  int collisions = 0;
  for (int i = 0; i < 256; ++i) {
    const std::uint64_t a = parent.next_u64();
    const std::uint64_t b = s0.next_u64();
    const std::uint64_t c = s1.next_u64();
    if (a == b || a == c || b == c) ++collisions;
  }
  CHECK(collisions == 0);
}

TEST_CASE("copies replay the remaining sequence", "[rng]") {
  RngStream rng(5, 0);
  for (int i = 0; i < 10; ++i) rng.next_u64();
  RngStream copy = rng;
  for (int i = 0; i < 100; ++i) {
    REQUIRE(copy.next_u64() == rng.next_u64());
  }
}

TEST_CASE("stream metadata is preserved through substreams", "[rng]") {
  RngStream rng(21, 4);
  RngStream sub = rng.substream(9);
  CHECK(sub.seed() == 21u);
  CHECK(sub.stream() == 4u);
}
