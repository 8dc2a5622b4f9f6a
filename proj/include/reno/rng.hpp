#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace reno::rng {

// 64-bit FNV-1a over the raw bytes of `s`.
std::uint64_t fnv1a64(std::string_view s);

/**
 * Deterministic standard-normal stream.
 *
 * The generator is std::mt19937_64 (its output sequence is fixed by the
 * standard), uniforms are the top 53 bits mapped to [0,1), and pairs of
 * uniforms are turned into normals with the Marsaglia polar method:
 *
 *   u = 2 U1 - 1, v = 2 U2 - 1, s = u^2 + v^2, retry while s >= 1 or s == 0
 *   n1 = u * sqrt(-2 ln(s) / s),  n2 = v * sqrt(-2 ln(s) / s)
 *
 * Given a seed, the same vector is reproduced on any IEEE-754 platform.
 */
class GaussianStream {
 public:
  explicit GaussianStream(std::uint64_t seed) : engine_(seed) {}

  double next();
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

std::vector<double> normal_vector(std::size_t n, std::uint64_t seed);

}  // namespace reno::rng
