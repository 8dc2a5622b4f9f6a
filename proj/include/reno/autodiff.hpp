#pragma once

#include <cstddef>
#include <functional>
#include <unordered_map>
#include <vector>

#include "reno/tensor.hpp"

namespace reno::ad {

enum class OpKind {
  kLeaf,
  kAdd,
  kSub,
  kMul,
  kDiv,
  kAffine,  // k0 * x + k1, elementwise
  kMatVec,
  kTanh,
  kRelu,
  kSigmoid,
  kLog,
  kExp,
  kSum,
  kMean,
  kSquaredNorm,
  kNorm,
  kSliceChannel,
  kReshape,
  kNeighborDiffSq,
};

const char* op_name(OpKind op);

class Tape;

// Result of a backward pass: gradient of the root w.r.t. every leaf.
class Gradients {
 public:
  // Gradient tensor for a leaf registered on the tape. Leaves the root does
  // not depend on get a zero gradient of matching shape.
  const Tensor& wrt(const Tensor& leaf) const;
  bool contains(const Tensor& t) const;

 private:
  friend class Tape;
  std::unordered_map<int, Tensor> by_node_;
};

// Reverse-mode tape. Every primitive records one node (topologically ordered
// by construction); backward walks the nodes once in strict reverse order and
// accumulates gradients additively across fan-out. Primitives never mutate
// their inputs, and any non-finite output buffer raises DomainError.
class Tape {
 public:
  // Registers `t` as a gradient leaf and returns the on-tape copy.
  Tensor leaf(Tensor t);

  Tensor add(const Tensor& a, const Tensor& b);
  Tensor sub(const Tensor& a, const Tensor& b);
  Tensor mul(const Tensor& a, const Tensor& b);
  Tensor div(const Tensor& a, const Tensor& b);
  Tensor affine(const Tensor& a, double scale, double shift);
  Tensor scale(const Tensor& a, double k) { return affine(a, k, 0.0); }
  // m: [rows, cols], v: [cols] -> [rows]
  Tensor matvec(const Tensor& m, const Tensor& v);
  Tensor tanh(const Tensor& a);
  Tensor relu(const Tensor& a);
  Tensor sigmoid(const Tensor& a);
  Tensor log(const Tensor& a);
  Tensor exp(const Tensor& a);
  Tensor sum(const Tensor& a);
  Tensor mean(const Tensor& a);
  Tensor squared_norm(const Tensor& a);
  // L2 norm; gradient at the origin is defined as zero.
  Tensor norm(const Tensor& a);
  // image: [H, W, C] -> [H, W]
  Tensor slice_channel(const Tensor& image, std::size_t channel);
  Tensor reshape(const Tensor& a, std::vector<std::size_t> shape);
  // Sum of squared differences between horizontally and vertically adjacent
  // pixels of an [H, W, C] image, per channel.
  Tensor neighbor_diff_sq(const Tensor& image);

  // root must be a scalar produced on this tape.
  Gradients backward(const Tensor& root);

  std::size_t node_count() const { return nodes_.size(); }

 private:
  struct Node {
    OpKind op;
    int in0 = Tensor::kNoNode;
    int in1 = Tensor::kNoNode;
    std::vector<std::size_t> out_shape;
    std::vector<std::size_t> in_shape;  // shape of input 0 where it matters
    std::vector<double> a;              // saved input 0 values
    std::vector<double> b;              // saved input 1 values
    std::vector<double> y;              // saved output values
    double k0 = 0.0;
    std::size_t in0_size = 0;
    std::size_t in1_size = 0;
    std::size_t channel = 0;
  };

  int record(Node node);
  Tensor finish(Node node, Tensor out);

  std::vector<Node> nodes_;
};

// Max relative error between the tape gradient of f at x and central finite
// differences with step h: max_i |analytic_i - central_i| / max(1, |central_i|).
// f must build a scalar on the tape it is handed.
using ScalarFn = std::function<Tensor(Tape&, const Tensor&)>;
double finite_diff_check(const ScalarFn& f, const Tensor& x, double h);

}  // namespace reno::ad
