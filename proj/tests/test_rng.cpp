#include <cmath>
#include <vector>

#include "doctest.h"
#include "replab/rng.hpp"

using namespace replab;

TEST_CASE("Philox4x32-10 known-answer vectors") {
  CHECK(philox4x32_10({0, 0, 0, 0}, {0, 0}) == PhiloxCounter{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
  CHECK(philox4x32_10({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff}) ==
        PhiloxCounter{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
  CHECK(philox4x32_10({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0}) ==
        PhiloxCounter{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
}

TEST_CASE("uniforms lie in the half-open unit interval") {
  CHECK(uniform_from_bits(0, 0) > 0.0);
  CHECK(uniform_from_bits(0xffffffff, 0xffffffff) <= 1.0);
  CHECK(uniform_from_bits(0xffffffff, 0xffffffff - 2048) < 1.0);
}

TEST_CASE("gaussian stream is a pure function of its coordinates") {
  const GaussianStream a(42, 7), b(42, 7), other_path(42, 8), other_seed(43, 7);
  std::vector<double> x(5), y(5);
  a.fill(1234, x);
  b.fill(1234, y);
  CHECK(x == y);
  for (std::uint32_t c = 0; c < 5; ++c) CHECK(a.at(1234, c) == x[c]);
  CHECK(other_path.at(1234, 0) != x[0]);
  CHECK(other_seed.at(1234, 0) != x[0]);
  CHECK(a.at(1235, 0) != x[0]);
}

TEST_CASE("gaussian moments") {
  const GaussianStream g(2024, 0);
  const int n = 200000;
  double s1 = 0, s2 = 0, s3 = 0, s4 = 0, lag = 0, prev = 0;
  std::vector<double> pair(2);
  for (int k = 0; k < n / 2; ++k) {
    g.fill(static_cast<std::uint64_t>(k), pair);
    for (double v : pair) {
      s1 += v;
      s2 += v * v;
      s3 += v * v * v;
      s4 += v * v * v * v;
      lag += v * prev;
      prev = v;
    }
  }
  const double m = n;
  CHECK(std::abs(s1 / m) < 5.0 / std::sqrt(m));
  CHECK(std::abs(s2 / m - 1.0) < 5.0 * std::sqrt(2.0 / m));
  CHECK(std::abs(s3 / m) < 5.0 * std::sqrt(15.0 / m));
  CHECK(std::abs(s4 / m - 3.0) < 5.0 * std::sqrt(96.0 / m));
  CHECK(std::abs(lag / m) < 5.0 / std::sqrt(m));
}

TEST_CASE("gaussian tail frequencies") {
  const GaussianStream g(99, 3);
  const int n = 100000;
  int above1 = 0, above2 = 0;
  for (int k = 0; k < n; ++k) {
    const double v = g.at(static_cast<std::uint64_t>(k), 3);
    if (v > 1.0) ++above1;
    if (v > 2.0) ++above2;
  }
  const double p1 = 0.15865525393145707, p2 = 0.022750131948179209;
  CHECK(std::abs(above1 / double(n) - p1) < 5.0 * std::sqrt(p1 * (1 - p1) / n));
  CHECK(std::abs(above2 / double(n) - p2) < 5.0 * std::sqrt(p2 * (1 - p2) / n));
}
