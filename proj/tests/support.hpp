#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "reno/rng.hpp"
#include "reno/tensor.hpp"

namespace testsupport {

inline reno::ad::Tensor random_tensor(std::vector<std::size_t> shape, std::uint64_t seed,
                                      double scale = 1.0) {
  std::vector<double> data = reno::rng::normal_vector(reno::ad::shape_product(shape), seed);
  for (double& v : data) v *= scale;
  return reno::ad::Tensor(std::move(shape), std::move(data));
}

// Random values in (lo, hi), for inputs that must stay inside a domain.
inline reno::ad::Tensor random_uniform_tensor(std::vector<std::size_t> shape,
                                              std::uint64_t seed, double lo, double hi) {
  reno::rng::GaussianStream stream(seed);
  std::vector<double> data(reno::ad::shape_product(shape));
  for (double& v : data) v = lo + (hi - lo) * stream.uniform01();
  return reno::ad::Tensor(std::move(shape), std::move(data));
}

// Fresh scratch directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("reno_test_" + tag + "_" + std::to_string(::getpid()) + "_" +
             std::to_string(counter.fetch_add(1)));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }
  std::string str() const { return path_.string(); }
  std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

inline std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

inline void spit(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << content;
}

}  // namespace testsupport
