#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <functional>
#include <vector>

#include "reno/autodiff.hpp"
#include "reno/errors.hpp"
#include "support.hpp"

using reno::DomainError;
using reno::ShapeError;
using reno::ad::Gradients;
using reno::ad::ScalarFn;
using reno::ad::Tape;
using reno::ad::Tensor;
using reno::ad::finite_diff_check;
using testsupport::random_tensor;
using testsupport::random_uniform_tensor;

TEST_CASE("forward values of basic primitives") {
  Tape tape;
  Tensor x = tape.leaf(Tensor::vector({1.0, 2.0, 3.0}));
  CHECK(tape.sum(x).scalar_value() == 6.0);
  CHECK(tape.mean(x).scalar_value() == 2.0);
  CHECK(tape.squared_norm(x).scalar_value() == 14.0);

  Tensor identity({2, 2}, {1.0, 0.0, 0.0, 1.0});
  Tensor v = tape.leaf(Tensor::vector({3.0, 4.0}));
  Tensor mv = tape.matvec(identity, v);
  CHECK(mv.data == std::vector<double>{3.0, 4.0});
  CHECK(tape.norm(v).scalar_value() == 5.0);
}

TEST_CASE("norm of the zero vector is zero with zero gradient") {
  Tape tape;
  Tensor zero = tape.leaf(Tensor::vector({0.0, 0.0, 0.0}));
  Tensor n = tape.norm(zero);
  CHECK(n.scalar_value() == 0.0);
  Gradients grads = tape.backward(n);
  CHECK(grads.wrt(zero).data == std::vector<double>{0.0, 0.0, 0.0});
}

TEST_CASE("gradient of the squared norm is 2x") {
  Tape tape;
  Tensor eps = tape.leaf(Tensor::vector({1.0, -2.0, 3.0}));
  Gradients grads = tape.backward(tape.squared_norm(eps));
  CHECK(grads.wrt(eps).data == std::vector<double>{2.0, -4.0, 6.0});
}

TEST_CASE("gradient of sum(tanh(x)) at zero is one") {
  Tape tape;
  Tensor x = tape.leaf(Tensor::vector({0.0}));
  Gradients grads = tape.backward(tape.sum(tape.tanh(x)));
  CHECK(grads.wrt(x).data[0] == 1.0);
}

TEST_CASE("gradient of the chi-norm log-density matches the closed form") {
  // K(eps) = (d-1) log ||eps|| - ||eps||^2 / 2; at eps = [1,1,1,1] the
  // gradient is eps * ((d-1)/r^2 - 1) = [-0.25, -0.25, -0.25, -0.25].
  auto k_fn = [](Tape& t, const Tensor& eps) {
    double d = static_cast<double>(eps.size());
    return t.sub(t.scale(t.log(t.norm(eps)), d - 1.0),
                 t.scale(t.squared_norm(eps), 0.5));
  };
  Tape tape;
  Tensor eps = tape.leaf(Tensor::vector({1.0, 1.0, 1.0, 1.0}));
  Gradients grads = tape.backward(k_fn(tape, eps));
  for (double g : grads.wrt(eps).data) CHECK(g == doctest::Approx(-0.25).epsilon(1e-12));

  CHECK(finite_diff_check(k_fn, random_tensor({16}, 7), 1e-5) < 1e-6);
}

TEST_CASE("gradient accumulates exactly across fan-out") {
  auto g_of = [](Tape& t, const Tensor& x) { return t.sum(t.tanh(x)); };
  Tensor x0 = random_tensor({6}, 21);

  Tape t1;
  Tensor a = t1.leaf(x0);
  Gradients single = t1.backward(g_of(t1, a));

  Tape t2;
  Tensor b = t2.leaf(x0);
  Tensor doubled = t2.add(g_of(t2, b), g_of(t2, b));
  Gradients twice = t2.backward(doubled);

  for (std::size_t i = 0; i < x0.size(); ++i) {
    CHECK(twice.wrt(b).data[i] == 2.0 * single.wrt(a).data[i]);
  }
}

TEST_CASE("identical op sequences produce bit-identical values and gradients") {
  auto run = [](std::uint64_t seed) {
    Tape tape;
    Tensor x = tape.leaf(random_tensor({12}, seed));
    Tensor m = random_tensor({5, 12}, seed + 1, 0.5);
    Tensor y = tape.sum(tape.sigmoid(tape.matvec(m, tape.tanh(x))));
    Gradients grads = tape.backward(y);
    return std::make_pair(y.scalar_value(), grads.wrt(x).data);
  };
  auto [v1, g1] = run(3);
  auto [v2, g2] = run(3);
  CHECK(v1 == v2);
  CHECK(g1 == g2);
}

TEST_CASE("primitives do not mutate their inputs") {
  Tensor x0 = random_tensor({4, 4, 3}, 9, 0.25);
  for (double& v : x0.data) v = std::abs(v) + 0.1;  // keep log in-domain
  Tensor snapshot = x0;

  Tape tape;
  Tensor x = tape.leaf(x0);
  Tensor y = tape.mul(x, x);
  tape.add(x, y);
  tape.sub(x, y);
  tape.div(x, y);
  tape.log(x);
  tape.exp(tape.scale(x, -1.0));
  tape.relu(x);
  tape.neighbor_diff_sq(x);
  tape.slice_channel(x, 2);
  tape.backward(tape.sum(tape.reshape(x, {48})));
  CHECK(x.data == snapshot.data);
  CHECK(x0.data == snapshot.data);
}

TEST_CASE("per-primitive gradients agree with central differences") {
  struct Case {
    const char* name;
    ScalarFn fn;
    bool positive_domain = false;
  };
  Tensor m = random_tensor({3, 8}, 1234, 0.7);
  std::vector<Case> cases = {
      {"add", [](Tape& t, const Tensor& x) {
         return t.sum(t.add(x, Tensor::full(x.shape, 0.35)));
       }},
      {"sub", [](Tape& t, const Tensor& x) {
         return t.sum(t.sub(Tensor::full(x.shape, 0.2), x));
       }},
      {"mul", [](Tape& t, const Tensor& x) { return t.sum(t.mul(x, x)); }},
      {"div", [](Tape& t, const Tensor& x) {
         return t.sum(t.div(Tensor::full(x.shape, 1.0),
                            t.affine(t.mul(x, x), 1.0, 0.5)));
       }},
      {"affine", [](Tape& t, const Tensor& x) { return t.sum(t.affine(x, -1.7, 0.4)); }},
      {"matvec", [m](Tape& t, const Tensor& x) { return t.sum(t.matvec(m, x)); }},
      {"tanh", [](Tape& t, const Tensor& x) { return t.sum(t.tanh(x)); }},
      {"sigmoid", [](Tape& t, const Tensor& x) { return t.sum(t.sigmoid(x)); }},
      {"log", [](Tape& t, const Tensor& x) { return t.sum(t.log(x)); }, true},
      {"exp", [](Tape& t, const Tensor& x) { return t.sum(t.exp(x)); }},
      {"sum", [](Tape& t, const Tensor& x) { return t.sum(x); }},
      {"mean", [](Tape& t, const Tensor& x) { return t.mean(x); }},
      {"squared_norm", [](Tape& t, const Tensor& x) { return t.squared_norm(x); }},
      {"norm", [](Tape& t, const Tensor& x) { return t.norm(x); }},
      {"reshape", [](Tape& t, const Tensor& x) {
         return t.sum(t.mul(t.reshape(x, {x.size()}), t.reshape(x, {x.size()})));
       }},
  };

  for (const Case& c : cases) {
    CAPTURE(c.name);
    double worst = 0.0;
    for (std::uint64_t i = 0; i < 100; ++i) {
      Tensor x = c.positive_domain ? random_uniform_tensor({8}, 1000 + i, 0.2, 3.0)
                                   : random_tensor({8}, 1000 + i);
      worst = std::max(worst, finite_diff_check(c.fn, x, 1e-5));
    }
    CHECK(worst < 1e-5);
  }

  // relu checked away from the kink, where it is differentiable.
  double worst_relu = 0.0;
  for (std::uint64_t i = 0; i < 100; ++i) {
    Tensor x = random_tensor({8}, 2000 + i);
    for (double& v : x.data) {
      if (std::abs(v) < 1e-3) v = 0.5;
    }
    worst_relu = std::max(
        worst_relu,
        finite_diff_check([](Tape& t, const Tensor& x) { return t.sum(t.relu(x)); }, x, 1e-5));
  }
  CHECK(worst_relu < 1e-5);

  // image-structured primitives
  double worst_img = 0.0;
  for (std::uint64_t i = 0; i < 100; ++i) {
    Tensor x = random_tensor({4, 5, 3}, 3000 + i, 0.5);
    worst_img = std::max(
        worst_img,
        finite_diff_check(
            [](Tape& t, const Tensor& img) { return t.neighbor_diff_sq(img); }, x, 1e-5));
    worst_img = std::max(
        worst_img,
        finite_diff_check(
            [](Tape& t, const Tensor& img) {
              return t.sum(t.mul(t.slice_channel(img, 1), t.slice_channel(img, 1)));
            },
            x, 1e-5));
  }
  CHECK(worst_img < 1e-5);
}

TEST_CASE("finite_diff_check on a quadratic is exact up to rounding") {
  double worst = 0.0;
  for (std::uint64_t i = 0; i < 10; ++i) {
    worst = std::max(worst,
                     finite_diff_check(
                         [](Tape& t, const Tensor& x) { return t.squared_norm(x); },
                         random_tensor({8}, 40 + i), 1e-5));
  }
  CHECK(worst < 1e-8);
}

TEST_CASE("shape and domain errors carry op names and shapes") {
  Tape tape;
  Tensor a = tape.leaf(Tensor::vector({1.0, 2.0}));
  Tensor b = tape.leaf(Tensor::vector({1.0, 2.0, 3.0}));
  CHECK_THROWS_WITH_AS(tape.add(a, b), doctest::Contains("add"), ShapeError);
  CHECK_THROWS_WITH_AS(tape.add(a, b), doctest::Contains("[2]"), ShapeError);
  CHECK_THROWS_WITH_AS(tape.matvec(a, b), doctest::Contains("matvec"), ShapeError);
  CHECK_THROWS_AS(tape.log(tape.leaf(Tensor::vector({-1.0, 1.0}))), DomainError);
  CHECK_THROWS_AS(tape.log(tape.leaf(Tensor::vector({0.0}))), DomainError);
}

TEST_CASE("backward rejects bad roots") {
  Tape tape;
  Tensor x = tape.leaf(Tensor::vector({1.0, 2.0}));
  CHECK_THROWS_AS(tape.backward(x), ShapeError);  // non-scalar root

  Tensor off_tape = Tensor::scalar(1.0);
  CHECK_THROWS_AS(tape.backward(off_tape), std::invalid_argument);
}

TEST_CASE("gradient map covers disconnected leaves with zeros") {
  Tape tape;
  Tensor x = tape.leaf(Tensor::vector({1.0, 2.0}));
  Tensor unused = tape.leaf(Tensor::vector({5.0}));
  Gradients grads = tape.backward(tape.sum(x));
  CHECK(grads.wrt(unused).data == std::vector<double>{0.0});
}

TEST_CASE("composed mlp-style map passes a looser finite-difference check") {
  Tensor w1 = random_tensor({10, 6}, 81, 0.4);
  Tensor w2 = random_tensor({1, 10}, 82, 0.4);
  ScalarFn f = [w1, w2](Tape& t, const Tensor& x) {
    Tensor h = t.tanh(t.matvec(w1, x));
    return t.sum(t.sigmoid(t.matvec(w2, h)));
  };
  double worst = 0.0;
  for (std::uint64_t i = 0; i < 20; ++i) {
    worst = std::max(worst, finite_diff_check(f, random_tensor({6}, 90 + i), 1e-5));
  }
  CHECK(worst < 1e-4);
}
