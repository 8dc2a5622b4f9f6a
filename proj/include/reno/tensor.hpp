#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace reno::ad {

// Dense row-major f64 value array. `node` ties the tensor to a Tape node when
// it was produced by (or registered as a leaf of) a recording tape; plain
// constants keep kNoNode and never receive gradients.
struct Tensor {
  static constexpr int kNoNode = -1;

  std::vector<std::size_t> shape;
  std::vector<double> data;
  int node = kNoNode;

  Tensor() = default;
  Tensor(std::vector<std::size_t> shape, std::vector<double> data);

  static Tensor scalar(double v);
  static Tensor vector(std::vector<double> v);
  static Tensor zeros(std::vector<std::size_t> shape);
  static Tensor full(std::vector<std::size_t> shape, double v);

  std::size_t size() const { return data.size(); }
  bool is_scalar() const { return data.size() == 1; }
  bool on_tape() const { return node != kNoNode; }

  // Checked scalar access.
  double scalar_value() const;
};

std::size_t shape_product(const std::vector<std::size_t>& shape);
std::string shape_str(const std::vector<std::size_t>& shape);

}  // namespace reno::ad
