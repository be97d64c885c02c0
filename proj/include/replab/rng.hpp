#pragma once

// Counter-based Gaussian increments. Every value is a pure function of
// (seed, path, step, coordinate), so a path can be regenerated in isolation and
// paths can be distributed over workers in any order.
//
// The block cipher is Philox4x32-10 (Salmon et al., "Parallel random numbers:
// as easy as 1, 2, 3", SC11), which passes the BigCrush battery. The counter is
// {step low, step high, path, coordinate pair}, the key is the seed split in
// two 32-bit halves. Each block yields two 53-bit uniforms and Box-Muller turns
// them into the pair of normals for coordinates 2m and 2m+1.

#include <array>
#include <cstdint>
#include <span>

namespace replab {

using PhiloxCounter = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;

PhiloxCounter philox4x32_10(PhiloxCounter ctr, PhiloxKey key);

class GaussianStream {
 public:
  GaussianStream(std::uint64_t seed, std::uint64_t path) : seed_(seed), path_(path) {}

  // Standard normals for coordinates 0..out.size()-1 at the given step.
  void fill(std::uint64_t step, std::span<double> out) const;
  double at(std::uint64_t step, std::uint32_t coord) const;

 private:
  std::uint64_t seed_;
  std::uint64_t path_;
};

// Uniform on (0, 1] with 53 random bits; never exactly 0, so log() is safe.
double uniform_from_bits(std::uint32_t hi, std::uint32_t lo);

}  // namespace replab
