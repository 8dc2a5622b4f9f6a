#include "reno/rng.hpp"

#include <cmath>

namespace reno::rng {

std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    hash ^= static_cast<std::uint64_t>(c);
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

double GaussianStream::next() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u, v, s;
  do {
    u = 2.0 * uniform01() - 1.0;
    v = 2.0 * uniform01() - 1.0;
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  double m = std::sqrt(-2.0 * std::log(s) / s);
  spare_ = v * m;
  has_spare_ = true;
  return u * m;
}

std::vector<double> normal_vector(std::size_t n, std::uint64_t seed) {
  GaussianStream stream(seed);
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = stream.next();
  return out;
}

}  // namespace reno::rng
