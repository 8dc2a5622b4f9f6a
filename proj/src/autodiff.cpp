#include "reno/autodiff.hpp"

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

#include "reno/errors.hpp"

namespace reno::ad {

Tensor::Tensor(std::vector<std::size_t> shape_in, std::vector<double> data_in)
    : shape(std::move(shape_in)), data(std::move(data_in)) {
  if (shape_product(shape) != data.size()) {
    throw ShapeError("tensor: shape " + shape_str(shape) + " does not match data length " +
                     std::to_string(data.size()));
  }
}

Tensor Tensor::scalar(double v) { return Tensor({1}, {v}); }

Tensor Tensor::vector(std::vector<double> v) {
  std::size_t n = v.size();
  return Tensor({n}, std::move(v));
}

Tensor Tensor::zeros(std::vector<std::size_t> shape) {
  std::vector<double> data(shape_product(shape), 0.0);
  return Tensor(std::move(shape), std::move(data));
}

Tensor Tensor::full(std::vector<std::size_t> shape, double v) {
  std::vector<double> data(shape_product(shape), v);
  return Tensor(std::move(shape), std::move(data));
}

double Tensor::scalar_value() const {
  if (!is_scalar()) {
    throw ShapeError("scalar_value: tensor has shape " + shape_str(shape));
  }
  return data[0];
}

std::size_t shape_product(const std::vector<std::size_t>& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

std::string shape_str(const std::vector<std::size_t>& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ", ";
    s += std::to_string(shape[i]);
  }
  s += "]";
  return s;
}

const char* op_name(OpKind op) {
  switch (op) {
    case OpKind::kLeaf: return "leaf";
    case OpKind::kAdd: return "add";
    case OpKind::kSub: return "sub";
    case OpKind::kMul: return "mul";
    case OpKind::kDiv: return "div";
    case OpKind::kAffine: return "affine";
    case OpKind::kMatVec: return "matvec";
    case OpKind::kTanh: return "tanh";
    case OpKind::kRelu: return "relu";
    case OpKind::kSigmoid: return "sigmoid";
    case OpKind::kLog: return "log";
    case OpKind::kExp: return "exp";
    case OpKind::kSum: return "sum";
    case OpKind::kMean: return "mean";
    case OpKind::kSquaredNorm: return "squared_norm";
    case OpKind::kNorm: return "norm";
    case OpKind::kSliceChannel: return "slice_channel";
    case OpKind::kReshape: return "reshape";
    case OpKind::kNeighborDiffSq: return "neighbor_diff_sq";
  }
  return "?";
}

namespace {

void require_same_shape(OpKind op, const Tensor& a, const Tensor& b) {
  if (a.shape != b.shape) {
    throw ShapeError(std::string(op_name(op)) + ": shape mismatch " + shape_str(a.shape) +
                     " vs " + shape_str(b.shape));
  }
}

void require_finite(OpKind op, const std::vector<double>& out) {
  for (double v : out) {
    if (!std::isfinite(v)) {
      throw DomainError(std::string(op_name(op)) + ": non-finite value in output");
    }
  }
}

void require_image(OpKind op, const Tensor& t) {
  if (t.shape.size() != 3) {
    throw ShapeError(std::string(op_name(op)) + ": expected [H, W, C] image, got shape " +
                     shape_str(t.shape));
  }
}

void accumulate(std::vector<double>& dst, std::size_t n, const double* src) {
  if (dst.empty()) dst.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) dst[i] += src[i];
}

}  // namespace

int Tape::record(Node node) {
  nodes_.push_back(std::move(node));
  return static_cast<int>(nodes_.size()) - 1;
}

Tensor Tape::finish(Node node, Tensor out) {
  require_finite(node.op, out.data);
  node.out_shape = out.shape;
  out.node = record(std::move(node));
  return out;
}

Tensor Tape::leaf(Tensor t) {
  Node node;
  node.op = OpKind::kLeaf;
  return finish(std::move(node), std::move(t));
}

Tensor Tape::add(const Tensor& a, const Tensor& b) {
  require_same_shape(OpKind::kAdd, a, b);
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data[i] + b.data[i];
  Node node;
  node.op = OpKind::kAdd;
  node.in0 = a.node;
  node.in1 = b.node;
  node.in0_size = a.size();
  node.in1_size = b.size();
  return finish(std::move(node), Tensor(a.shape, std::move(out)));
}

Tensor Tape::sub(const Tensor& a, const Tensor& b) {
  require_same_shape(OpKind::kSub, a, b);
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data[i] - b.data[i];
  Node node;
  node.op = OpKind::kSub;
  node.in0 = a.node;
  node.in1 = b.node;
  node.in0_size = a.size();
  node.in1_size = b.size();
  return finish(std::move(node), Tensor(a.shape, std::move(out)));
}

Tensor Tape::mul(const Tensor& a, const Tensor& b) {
  require_same_shape(OpKind::kMul, a, b);
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data[i] * b.data[i];
  Node node;
  node.op = OpKind::kMul;
  node.in0 = a.node;
  node.in1 = b.node;
  node.a = a.data;
  node.b = b.data;
  return finish(std::move(node), Tensor(a.shape, std::move(out)));
}

Tensor Tape::div(const Tensor& a, const Tensor& b) {
  require_same_shape(OpKind::kDiv, a, b);
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data[i] / b.data[i];
  Node node;
  node.op = OpKind::kDiv;
  node.in0 = a.node;
  node.in1 = b.node;
  node.b = b.data;
  node.y = out;
  return finish(std::move(node), Tensor(a.shape, std::move(out)));
}

Tensor Tape::affine(const Tensor& a, double scale, double shift) {
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = scale * a.data[i] + shift;
  Node node;
  node.op = OpKind::kAffine;
  node.in0 = a.node;
  node.k0 = scale;
  node.in0_size = a.size();
  return finish(std::move(node), Tensor(a.shape, std::move(out)));
}

Tensor Tape::matvec(const Tensor& m, const Tensor& v) {
  if (m.shape.size() != 2 || v.shape.size() != 1 || m.shape[1] != v.shape[0]) {
    throw ShapeError(std::string(op_name(OpKind::kMatVec)) + ": shape mismatch " +
                     shape_str(m.shape) + " vs " + shape_str(v.shape));
  }
  std::size_t rows = m.shape[0], cols = m.shape[1];
  std::vector<double> out(rows, 0.0);
  for (std::size_t i = 0; i < rows; ++i) {
    const double* row = m.data.data() + i * cols;
    double acc = 0.0;
    for (std::size_t j = 0; j < cols; ++j) acc += row[j] * v.data[j];
    out[i] = acc;
  }
  Node node;
  node.op = OpKind::kMatVec;
  node.in0 = m.node;
  node.in1 = v.node;
  node.in_shape = m.shape;
  node.a = m.data;  // needed for dv
  node.b = v.data;  // needed for dM
  return finish(std::move(node), Tensor({rows}, std::move(out)));
}

Tensor Tape::tanh(const Tensor& a) {
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::tanh(a.data[i]);
  Node node;
  node.op = OpKind::kTanh;
  node.in0 = a.node;
  node.y = out;
  return finish(std::move(node), Tensor(a.shape, std::move(out)));
}

Tensor Tape::relu(const Tensor& a) {
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data[i] > 0.0 ? a.data[i] : 0.0;
  Node node;
  node.op = OpKind::kRelu;
  node.in0 = a.node;
  node.a = a.data;
  return finish(std::move(node), Tensor(a.shape, std::move(out)));
}

Tensor Tape::sigmoid(const Tensor& a) {
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = 1.0 / (1.0 + std::exp(-a.data[i]));
  Node node;
  node.op = OpKind::kSigmoid;
  node.in0 = a.node;
  node.y = out;
  return finish(std::move(node), Tensor(a.shape, std::move(out)));
}

Tensor Tape::log(const Tensor& a) {
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (!(a.data[i] > 0.0)) {
      throw DomainError("log: non-positive input " + std::to_string(a.data[i]));
    }
    out[i] = std::log(a.data[i]);
  }
  Node node;
  node.op = OpKind::kLog;
  node.in0 = a.node;
  node.a = a.data;
  return finish(std::move(node), Tensor(a.shape, std::move(out)));
}

Tensor Tape::exp(const Tensor& a) {
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::exp(a.data[i]);
  Node node;
  node.op = OpKind::kExp;
  node.in0 = a.node;
  node.y = out;
  return finish(std::move(node), Tensor(a.shape, std::move(out)));
}

Tensor Tape::sum(const Tensor& a) {
  double acc = 0.0;
  for (double v : a.data) acc += v;
  Node node;
  node.op = OpKind::kSum;
  node.in0 = a.node;
  node.in0_size = a.size();
  return finish(std::move(node), Tensor::scalar(acc));
}

Tensor Tape::mean(const Tensor& a) {
  if (a.size() == 0) throw ShapeError("mean: empty tensor");
  double acc = 0.0;
  for (double v : a.data) acc += v;
  Node node;
  node.op = OpKind::kMean;
  node.in0 = a.node;
  node.in0_size = a.size();
  return finish(std::move(node), Tensor::scalar(acc / static_cast<double>(a.size())));
}

Tensor Tape::squared_norm(const Tensor& a) {
  double acc = 0.0;
  for (double v : a.data) acc += v * v;
  Node node;
  node.op = OpKind::kSquaredNorm;
  node.in0 = a.node;
  node.a = a.data;
  return finish(std::move(node), Tensor::scalar(acc));
}

Tensor Tape::norm(const Tensor& a) {
  double acc = 0.0;
  for (double v : a.data) acc += v * v;
  double n = std::sqrt(acc);
  Node node;
  node.op = OpKind::kNorm;
  node.in0 = a.node;
  node.a = a.data;
  node.k0 = n;
  return finish(std::move(node), Tensor::scalar(n));
}

Tensor Tape::slice_channel(const Tensor& image, std::size_t channel) {
  require_image(OpKind::kSliceChannel, image);
  std::size_t h = image.shape[0], w = image.shape[1], c = image.shape[2];
  if (channel >= c) {
    throw ShapeError("slice_channel: channel " + std::to_string(channel) +
                     " out of range for shape " + shape_str(image.shape));
  }
  std::vector<double> out(h * w);
  for (std::size_t p = 0; p < h * w; ++p) out[p] = image.data[p * c + channel];
  Node node;
  node.op = OpKind::kSliceChannel;
  node.in0 = image.node;
  node.in_shape = image.shape;
  node.channel = channel;
  return finish(std::move(node), Tensor({h, w}, std::move(out)));
}

Tensor Tape::reshape(const Tensor& a, std::vector<std::size_t> shape) {
  if (shape_product(shape) != a.size()) {
    throw ShapeError("reshape: shape " + shape_str(shape) + " incompatible with " +
                     shape_str(a.shape));
  }
  Node node;
  node.op = OpKind::kReshape;
  node.in0 = a.node;
  node.in_shape = a.shape;
  return finish(std::move(node), Tensor(std::move(shape), a.data));
}

Tensor Tape::neighbor_diff_sq(const Tensor& image) {
  require_image(OpKind::kNeighborDiffSq, image);
  std::size_t h = image.shape[0], w = image.shape[1], c = image.shape[2];
  auto at = [&](std::size_t i, std::size_t j, std::size_t ch) {
    return image.data[(i * w + j) * c + ch];
  };
  double acc = 0.0;
  for (std::size_t i = 0; i < h; ++i) {
    for (std::size_t j = 0; j + 1 < w; ++j) {
      for (std::size_t ch = 0; ch < c; ++ch) {
        double d = at(i, j + 1, ch) - at(i, j, ch);
        acc += d * d;
      }
    }
  }
  for (std::size_t i = 0; i + 1 < h; ++i) {
    for (std::size_t j = 0; j < w; ++j) {
      for (std::size_t ch = 0; ch < c; ++ch) {
        double d = at(i + 1, j, ch) - at(i, j, ch);
        acc += d * d;
      }
    }
  }
  Node node;
  node.op = OpKind::kNeighborDiffSq;
  node.in0 = image.node;
  node.in_shape = image.shape;
  node.a = image.data;
  return finish(std::move(node), Tensor::scalar(acc));
}

Gradients Tape::backward(const Tensor& root) {
  if (!root.is_scalar()) {
    throw ShapeError("backward: root must be scalar, got shape " + shape_str(root.shape));
  }
  if (!root.on_tape() || root.node < 0 || root.node >= static_cast<int>(nodes_.size())) {
    throw std::invalid_argument("backward: root is not on this tape");
  }

  std::vector<std::vector<double>> grad(nodes_.size());
  grad[root.node] = {1.0};

  // Strict reverse construction order, each node exactly once.
  for (int id = static_cast<int>(nodes_.size()) - 1; id >= 0; --id) {
    const Node& n = nodes_[id];
    const std::vector<double>& g = grad[id];
    if (g.empty()) continue;

    auto acc0 = [&](std::size_t size, const double* src) {
      if (n.in0 >= 0) accumulate(grad[n.in0], size, src);
    };
    auto acc1 = [&](std::size_t size, const double* src) {
      if (n.in1 >= 0) accumulate(grad[n.in1], size, src);
    };

    switch (n.op) {
      case OpKind::kLeaf:
        break;
      case OpKind::kAdd: {
        acc0(n.in0_size, g.data());
        acc1(n.in1_size, g.data());
        break;
      }
      case OpKind::kSub: {
        acc0(n.in0_size, g.data());
        if (n.in1 >= 0) {
          std::vector<double> neg(g.size());
          for (std::size_t i = 0; i < g.size(); ++i) neg[i] = -g[i];
          acc1(n.in1_size, neg.data());
        }
        break;
      }
      case OpKind::kMul: {
        if (n.in0 >= 0) {
          std::vector<double> da(g.size());
          for (std::size_t i = 0; i < g.size(); ++i) da[i] = g[i] * n.b[i];
          acc0(da.size(), da.data());
        }
        if (n.in1 >= 0) {
          std::vector<double> db(g.size());
          for (std::size_t i = 0; i < g.size(); ++i) db[i] = g[i] * n.a[i];
          acc1(db.size(), db.data());
        }
        break;
      }
      case OpKind::kDiv: {
        if (n.in0 >= 0) {
          std::vector<double> da(g.size());
          for (std::size_t i = 0; i < g.size(); ++i) da[i] = g[i] / n.b[i];
          acc0(da.size(), da.data());
        }
        if (n.in1 >= 0) {
          std::vector<double> db(g.size());
          for (std::size_t i = 0; i < g.size(); ++i) db[i] = -g[i] * n.y[i] / n.b[i];
          acc1(db.size(), db.data());
        }
        break;
      }
      case OpKind::kAffine: {
        if (n.in0 >= 0) {
          std::vector<double> da(g.size());
          for (std::size_t i = 0; i < g.size(); ++i) da[i] = n.k0 * g[i];
          acc0(da.size(), da.data());
        }
        break;
      }
      case OpKind::kMatVec: {
        std::size_t rows = n.in_shape[0], cols = n.in_shape[1];
        if (n.in1 >= 0) {
          std::vector<double> dv(cols, 0.0);
          for (std::size_t i = 0; i < rows; ++i) {
            const double* row = n.a.data() + i * cols;
            for (std::size_t j = 0; j < cols; ++j) dv[j] += g[i] * row[j];
          }
          acc1(dv.size(), dv.data());
        }
        if (n.in0 >= 0) {
          std::vector<double> dm(rows * cols);
          for (std::size_t i = 0; i < rows; ++i) {
            for (std::size_t j = 0; j < cols; ++j) dm[i * cols + j] = g[i] * n.b[j];
          }
          acc0(dm.size(), dm.data());
        }
        break;
      }
      case OpKind::kTanh: {
        if (n.in0 >= 0) {
          std::vector<double> da(g.size());
          for (std::size_t i = 0; i < g.size(); ++i) da[i] = g[i] * (1.0 - n.y[i] * n.y[i]);
          acc0(da.size(), da.data());
        }
        break;
      }
      case OpKind::kRelu: {
        if (n.in0 >= 0) {
          std::vector<double> da(g.size());
          for (std::size_t i = 0; i < g.size(); ++i) da[i] = n.a[i] > 0.0 ? g[i] : 0.0;
          acc0(da.size(), da.data());
        }
        break;
      }
      case OpKind::kSigmoid: {
        if (n.in0 >= 0) {
          std::vector<double> da(g.size());
          for (std::size_t i = 0; i < g.size(); ++i) da[i] = g[i] * n.y[i] * (1.0 - n.y[i]);
          acc0(da.size(), da.data());
        }
        break;
      }
      case OpKind::kLog: {
        if (n.in0 >= 0) {
          std::vector<double> da(g.size());
          for (std::size_t i = 0; i < g.size(); ++i) da[i] = g[i] / n.a[i];
          acc0(da.size(), da.data());
        }
        break;
      }
      case OpKind::kExp: {
        if (n.in0 >= 0) {
          std::vector<double> da(g.size());
          for (std::size_t i = 0; i < g.size(); ++i) da[i] = g[i] * n.y[i];
          acc0(da.size(), da.data());
        }
        break;
      }
      case OpKind::kSum: {
        if (n.in0 >= 0) {
          std::vector<double> da(n.in0_size, g[0]);
          acc0(da.size(), da.data());
        }
        break;
      }
      case OpKind::kMean: {
        if (n.in0 >= 0) {
          std::vector<double> da(n.in0_size, g[0] / static_cast<double>(n.in0_size));
          acc0(da.size(), da.data());
        }
        break;
      }
      case OpKind::kSquaredNorm: {
        if (n.in0 >= 0) {
          std::vector<double> da(n.a.size());
          for (std::size_t i = 0; i < da.size(); ++i) da[i] = 2.0 * g[0] * n.a[i];
          acc0(da.size(), da.data());
        }
        break;
      }
      case OpKind::kNorm: {
        if (n.in0 >= 0) {
          std::vector<double> da(n.a.size(), 0.0);
          if (n.k0 > 0.0) {
            for (std::size_t i = 0; i < da.size(); ++i) da[i] = g[0] * n.a[i] / n.k0;
          }
          acc0(da.size(), da.data());
        }
        break;
      }
      case OpKind::kSliceChannel: {
        if (n.in0 >= 0) {
          std::size_t h = n.in_shape[0], w = n.in_shape[1], c = n.in_shape[2];
          std::vector<double> da(h * w * c, 0.0);
          for (std::size_t p = 0; p < h * w; ++p) da[p * c + n.channel] = g[p];
          acc0(da.size(), da.data());
        }
        break;
      }
      case OpKind::kReshape: {
        acc0(g.size(), g.data());
        break;
      }
      case OpKind::kNeighborDiffSq: {
        if (n.in0 >= 0) {
          std::size_t h = n.in_shape[0], w = n.in_shape[1], c = n.in_shape[2];
          std::vector<double> da(h * w * c, 0.0);
          auto at = [&](std::size_t i, std::size_t j, std::size_t ch) {
            return n.a[(i * w + j) * c + ch];
          };
          auto idx = [&](std::size_t i, std::size_t j, std::size_t ch) {
            return (i * w + j) * c + ch;
          };
          for (std::size_t i = 0; i < h; ++i) {
            for (std::size_t j = 0; j + 1 < w; ++j) {
              for (std::size_t ch = 0; ch < c; ++ch) {
                double d = 2.0 * g[0] * (at(i, j + 1, ch) - at(i, j, ch));
                da[idx(i, j + 1, ch)] += d;
                da[idx(i, j, ch)] -= d;
              }
            }
          }
          for (std::size_t i = 0; i + 1 < h; ++i) {
            for (std::size_t j = 0; j < w; ++j) {
              for (std::size_t ch = 0; ch < c; ++ch) {
                double d = 2.0 * g[0] * (at(i + 1, j, ch) - at(i, j, ch));
                da[idx(i + 1, j, ch)] += d;
                da[idx(i, j, ch)] -= d;
              }
            }
          }
          acc0(da.size(), da.data());
        }
        break;
      }
    }
  }

  Gradients result;
  for (int id = 0; id < static_cast<int>(nodes_.size()); ++id) {
    if (nodes_[id].op != OpKind::kLeaf) continue;
    Tensor g_tensor = Tensor::zeros(nodes_[id].out_shape);
    if (!grad[id].empty()) g_tensor.data = std::move(grad[id]);
    result.by_node_.emplace(id, std::move(g_tensor));
  }
  return result;
}

const Tensor& Gradients::wrt(const Tensor& leaf) const {
  auto it = by_node_.find(leaf.node);
  if (it == by_node_.end()) {
    throw std::invalid_argument("gradients: tensor is not a leaf of the differentiated tape");
  }
  return it->second;
}

bool Gradients::contains(const Tensor& t) const { return by_node_.count(t.node) > 0; }

double finite_diff_check(const ScalarFn& f, const Tensor& x, double h) {
  if (!(h > 0.0)) throw std::invalid_argument("finite_diff_check: h must be positive");

  Tape tape;
  Tensor x_leaf = tape.leaf(x);
  Tensor out = f(tape, x_leaf);
  if (!out.is_scalar()) {
    throw ShapeError("finite_diff_check: f must return a scalar, got shape " +
                     shape_str(out.shape));
  }
  Gradients grads = tape.backward(out);
  const Tensor& analytic = grads.wrt(x_leaf);

  auto value_at = [&](const Tensor& point) {
    Tape t;
    Tensor v = f(t, t.leaf(point));
    double val = v.scalar_value();
    if (!std::isfinite(val)) {
      throw DomainError("finite_diff_check: f returned non-finite value");
    }
    return val;
  };

  double max_err = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    Tensor xp = x;
    Tensor xm = x;
    xp.node = Tensor::kNoNode;
    xm.node = Tensor::kNoNode;
    xp.data[i] += h;
    xm.data[i] -= h;
    double central = (value_at(xp) - value_at(xm)) / (2.0 * h);
    double err = std::abs(analytic.data[i] - central) / std::max(1.0, std::abs(central));
    if (err > max_err) max_err = err;
  }
  return max_err;
}

}  // namespace reno::ad
