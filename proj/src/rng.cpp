#include "replab/rng.hpp"

#include <cmath>
#include <numbers>

namespace replab {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(p >> 32);
  lo = static_cast<std::uint32_t>(p);
}

}  // namespace

PhiloxCounter philox4x32_10(PhiloxCounter c, PhiloxKey k) {
  for (int round = 0; round < 10; ++round) {
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kMul0, c[0], hi0, lo0);
    mulhilo(kMul1, c[2], hi1, lo1);
    c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
    k[0] += kWeyl0;
    k[1] += kWeyl1;
  }
  return c;
}

double uniform_from_bits(std::uint32_t hi, std::uint32_t lo) {
  const std::uint64_t bits = (static_cast<std::uint64_t>(hi) << 21) ^ (lo >> 11);
  // (bits + 1) / 2^53 lies in (0, 1]; every value is exactly representable.
  return (static_cast<double>(bits & ((1ull << 53) - 1)) + 1.0) * 0x1p-53;
}

namespace {

inline void normal_pair(std::uint64_t seed, std::uint64_t path, std::uint64_t step, std::uint32_t pair,
                        double& z0, double& z1) {
  const PhiloxCounter ctr{static_cast<std::uint32_t>(step), static_cast<std::uint32_t>(step >> 32),
                          static_cast<std::uint32_t>(path), pair};
  const PhiloxKey key{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
  const auto r = philox4x32_10(ctr, key);
  const double u1 = uniform_from_bits(r[0], r[1]);
  const double u2 = uniform_from_bits(r[2], r[3]);
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  z0 = radius * std::cos(angle);
  z1 = radius * std::sin(angle);
}

}  // namespace

void GaussianStream::fill(std::uint64_t step, std::span<double> out) const {
  const std::size_t n = out.size();
  for (std::size_t j = 0; j < n; j += 2) {
    double z0, z1;
    normal_pair(seed_, path_, step, static_cast<std::uint32_t>(j / 2), z0, z1);
    out[j] = z0;
    if (j + 1 < n) out[j + 1] = z1;
  }
}

double GaussianStream::at(std::uint64_t step, std::uint32_t coord) const {
  double z0, z1;
  normal_pair(seed_, path_, step, coord / 2, z0, z1);
  return (coord % 2 == 0) ? z0 : z1;
}

}  // namespace replab
