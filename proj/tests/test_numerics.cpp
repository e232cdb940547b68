#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <functional>
#include <string>

#include "errors.hpp"
#include "grad_check.hpp"
#include "ops.hpp"
#include "support.hpp"

using namespace sdgl;
using namespace sdgl::ops;
using testing::max_abs_diff;
using testing::random_tensor;

namespace {

// Scalar readout with random weights so no gradient is trivially uniform.
Tensor readout(const Tensor& y, const Tensor& w) { return sum(mul(y, w)); }

void check_op(const std::string& name, std::vector<Tensor> inputs,
              const std::function<Tensor()>& f, double tol = 1e-4) {
  const GradCheckReport r = grad_check(f, std::move(inputs), {.tolerance = tol});
  INFO(name << " max rel err " << r.max_rel_error << " checked " << r.checked);
  CHECK(r.pass);
  CHECK(r.checked > 0);
}

}  // namespace

TEST_CASE("tensor shape and data agree") {
  Tensor t = Tensor::zeros({2, 3, 4});
  CHECK(t.numel() == 24);
  CHECK(shape_numel(t.shape()) == t.numel());
  CHECK_THROWS_AS(Tensor({2, 2}, {1.0, 2.0, 3.0}), DimensionError);
  Tensor c = t.clone();
  c.mutable_data()[0] = 5.0;
  CHECK(t[0] == 0.0);
}

TEST_CASE("identity matmul, uniform softmax, relu") {
  Rng rng(3);
  const Tensor m = random_tensor({3, 5}, rng);
  CHECK(max_abs_diff(matmul(Tensor::eye(3), m), m) == 0.0);

  const Tensor s = row_softmax(Tensor({1, 3}, {0, 0, 0}));
  for (std::size_t j = 0; j < 3; ++j) CHECK(s[j] == doctest::Approx(1.0 / 3.0).epsilon(1e-15));

  const Tensor r = relu(Tensor({1, 2}, {-2, 5}));
  CHECK(r[0] == 0.0);
  CHECK(r[1] == 5.0);
}

TEST_CASE("backward of sum of squares is 2x") {
  Tensor x({2}, {1, 2}, true);
  Tape tape;
  tape.backward(sum(mul(x, x)));
  REQUIRE(x.has_grad());
  CHECK(x.grad()[0] == 4.0 / 2.0);
  CHECK(x.grad()[1] == 4.0);
}

TEST_CASE("gradient of sum(AB) with respect to A is ones times B transposed") {
  Rng rng(11);
  Tensor a = random_tensor({3, 4}, rng, -1, 1, true);
  Tensor b = random_tensor({4, 2}, rng, -1, 1, true);
  {
    Tape tape;
    tape.backward(sum(matmul(a, b)));
  }
  const Tensor expected = matmul(Tensor::full({3, 2}, 1.0), transpose(b.detach()));
  for (std::size_t i = 0; i < a.numel(); ++i) CHECK(a.grad()[i] == doctest::Approx(expected[i]));
  check_op("sum(matmul)", {a, b}, [&] { return sum(matmul(a, b)); });
}

TEST_CASE("every primitive passes finite differences over 20 seeds") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    CAPTURE(seed);
    Rng rng(seed);
    auto R = [&](Shape s, double lo = -1.0, double hi = 1.0) {
      return random_tensor(s, rng, lo, hi, true);
    };
    Tensor a = R({3, 4}), b = R({3, 4}), row = R({4}), pos = R({3, 4}, 0.5, 2.0);
    Tensor w34 = random_tensor({3, 4}, rng);
    check_op("add broadcast", {a, row}, [&] { return readout(add(a, row), w34); });
    check_op("sub", {a, b}, [&] { return readout(sub(a, b), w34); });
    check_op("mul broadcast", {a, row}, [&] { return readout(mul(a, row), w34); });
    check_op("div", {a, pos}, [&] { return readout(div(a, pos), w34); });
    check_op("scale", {a}, [&] { return readout(scale(a, -1.7), w34); });
    check_op("add_scalar", {a}, [&] { return readout(add_scalar(a, 0.3), w34); });
    check_op("relu", {a}, [&] { return readout(relu(a), w34); });
    check_op("tanh", {a}, [&] { return readout(ops::tanh(a), w34); });
    check_op("sigmoid", {a}, [&] { return readout(sigmoid(a), w34); });
    check_op("abs", {a}, [&] { return readout(ops::abs(a), w34); });
    check_op("square", {a}, [&] { return readout(square(a), w34); });

    Tensor m = R({4, 5}), bm = R({2, 3, 4}), bn = R({2, 4, 5});
    const Tensor w35 = random_tensor({3, 5}, rng);
    check_op("matmul", {a, m}, [&] { return readout(matmul(a, m), w35); });
    const Tensor w235 = random_tensor({2, 3, 5}, rng);
    check_op("batched matmul", {bm, bn}, [&] { return readout(matmul(bm, bn), w235); });
    check_op("shared rhs matmul", {bm, m}, [&] { return readout(matmul(bm, m), w235); });
    Tensor left = R({3, 4});
    check_op("shared lhs matmul", {left, bn}, [&] { return readout(matmul(left, bn), w235); });

    const Tensor w43 = random_tensor({4, 3}, rng);
    check_op("transpose", {a}, [&] { return readout(transpose(a), w43); });
    Tensor p3 = R({2, 3, 4});
    const Tensor w423 = random_tensor({4, 2, 3}, rng);
    check_op("permute", {p3}, [&] { return readout(permute(p3, {2, 0, 1}), w423); });
    const Tensor w62 = random_tensor({6, 2}, rng);
    check_op("reshape", {a}, [&] { return readout(reshape(a, {6, 2}), w62); });

    check_op("row_softmax", {a}, [&] { return readout(row_softmax(scale(a, 3.0)), w34); });
    Tensor g = R({4}), be = R({4});
    check_op("layer_norm", {a, g, be}, [&] { return readout(layer_norm(a, g, be), w34); });
    check_op("dropout", {a}, [&] {
      Rng mask(seed * 7 + 1);
      return readout(dropout(a, 0.7, mask, true), w34);
    });

    Tensor c1 = R({3, 2});
    const Tensor w36 = random_tensor({3, 6}, rng);
    check_op("concat", {a, c1}, [&] { return readout(concat({a, c1}, 1), w36); });
    const Tensor w32 = random_tensor({3, 2}, rng);
    check_op("slice", {a}, [&] { return readout(slice(a, 1, 1, 2), w32); });
    check_op("sum", {a}, [&] { return scale(sum(square(a)), 0.5); });
    check_op("mean", {a}, [&] { return mean(square(a)); });
    const Tensor w4 = random_tensor({4}, rng);
    check_op("sum_axis", {a}, [&] { return readout(sum_axis(a, 0), w4); });

    Tensor x = R({2, 2, 3, 9}), cw = R({3, 2, 3}), cb = R({3});
    const Tensor wconv = random_tensor({2, 3, 3, 5}, rng);
    check_op("conv_time", {x, cw, cb}, [&] { return readout(conv_time(x, cw, cb, 2), wconv); });
    Tensor pm = R({3, 3}), pb = R({2, 3, 3});
    const Tensor wmix = random_tensor({2, 2, 3, 9}, rng);
    check_op("node_mix", {pm, x}, [&] { return readout(node_mix(pm, x), wmix); });
    check_op("node_mix batched", {pb, x}, [&] { return readout(node_mix(pb, x), wmix); });
  }
}

TEST_CASE("softmax rows are positive distributions") {
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const Tensor y = row_softmax(random_tensor({6, 7}, rng, -20.0, 20.0));
    for (std::size_t i = 0; i < 6; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < 7; ++j) {
        CHECK(y[i * 7 + j] > 0.0);
        s += y[i * 7 + j];
      }
      CHECK(std::fabs(s - 1.0) <= 1e-12);
    }
  }
}

TEST_CASE("layer norm rows have zero mean and unit variance") {
  Rng rng(6);
  for (int trial = 0; trial < 20; ++trial) {
    const Tensor y = layer_norm(random_tensor({5, 9}, rng, -3.0, 3.0));
    for (std::size_t i = 0; i < 5; ++i) {
      double m = 0.0, v = 0.0;
      for (std::size_t j = 0; j < 9; ++j) m += y[i * 9 + j];
      m /= 9.0;
      for (std::size_t j = 0; j < 9; ++j) v += (y[i * 9 + j] - m) * (y[i * 9 + j] - m);
      v /= 9.0;
      CHECK(std::fabs(m) <= 1e-10);
      CHECK(std::fabs(v - 1.0) <= 1e-8);
    }
  }
  // A constant row maps to zero.
  const Tensor z = layer_norm(Tensor::full({1, 4}, 3.0));
  for (double v : z.data()) CHECK(v == 0.0);
}

TEST_CASE("dropout identities and inverted scaling") {
  Rng rng(9);
  const Tensor x = random_tensor({50, 40}, rng);
  Rng r1(1);
  CHECK(testing::bit_equal(dropout(x, 1.0, r1, true), x));
  CHECK(testing::bit_equal(dropout(x, 0.3, r1, false), x));
  CHECK_THROWS_AS(dropout(x, 0.0, r1, true), ConfigError);
  CHECK_THROWS_AS(dropout(x, 1.5, r1, true), ConfigError);

  const Tensor ones = Tensor::full({200, 100}, 1.0);
  const Tensor d = dropout(ones, 0.8, r1, true);
  std::size_t kept = 0;
  for (double v : d.data()) {
    CHECK((v == 0.0 || v == doctest::Approx(1.25)));
    kept += v != 0.0;
  }
  CHECK(static_cast<double>(kept) / 20000.0 == doctest::Approx(0.8).epsilon(0.02));
}

TEST_CASE("same seed replays bit-identical streams") {
  Rng a(42), b(42), c(43);
  bool differs = false;
  for (int i = 0; i < 100; ++i) {
    const double x = a.normal();
    CHECK(x == b.normal());
    differs |= x != c.normal();
  }
  CHECK(differs);
  const Rng restored = Rng::deserialize(a.serialize());
  CHECK(restored == a);
  Rng r2 = restored;
  CHECK(r2.next_u64() == a.next_u64());

  const Tensor x = random_tensor({4, 6}, a);
  Rng m1(7), m2(7);
  CHECK(testing::bit_equal(dropout(x, 0.5, m1, true), dropout(x, 0.5, m2, true)));
}

TEST_CASE("tape contract errors") {
  Tensor x({2}, {1, 2}, true);
  {
    Tape tape;
    const Tensor y = mul(x, x);
    CHECK_THROWS_AS(tape.backward(y), ContractError);
  }
  {
    Tape tape;
    const Tensor loss = sum(x);
    tape.backward(loss);
    CHECK(tape.consumed());
    CHECK_THROWS_AS(tape.backward(loss), StateError);
  }
  CHECK_THROWS_AS(backward(sum(x)), StateError);
}

TEST_CASE("tape records in topological order and fills every grad") {
  Rng rng(2);
  Tensor a = random_tensor({3, 3}, rng, -1, 1, true);
  Tensor b = random_tensor({3, 3}, rng, -1, 1, true);
  Tensor unused = random_tensor({3, 3}, rng, -1, 1, true);
  Tape tape;
  const Tensor h = ops::tanh(matmul(a, b));
  const std::size_t after_first = tape.size();
  const Tensor loss = sum(mul(h, a));
  CHECK(tape.size() > after_first);
  tape.backward(loss);
  CHECK(a.has_grad());
  CHECK(b.has_grad());
  CHECK(a.grad().size() == a.numel());
  CHECK(!unused.has_grad());
}

TEST_CASE("no tape means no recording") {
  Tensor x({2}, {1, 2}, true);
  const Tensor y = mul(x, x);
  CHECK(!y.requires_grad());
}

TEST_CASE("shape mismatches name the primitive") {
  const Tensor a = Tensor::zeros({2, 3}), b = Tensor::zeros({4, 5});
  auto message = [](auto&& f) {
    try {
      f();
    } catch (const DimensionError& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  CHECK(message([&] { matmul(a, b); }).find("matmul") != std::string::npos);
  CHECK(message([&] { add(a, b); }).find("add") != std::string::npos);
  CHECK(message([&] { concat({a, b}, 0); }).find("concat") != std::string::npos);
  CHECK(message([&] { reshape(a, {5}); }).find("reshape") != std::string::npos);
}

TEST_CASE("debug checks reject non-finite inputs") {
  const Tensor bad({2}, {1.0, std::nan("")});
  CHECK_NOTHROW(relu(bad));
  set_debug_checks(true);
  CHECK_THROWS_AS(relu(bad), NumericError);
  set_debug_checks(false);
}

TEST_CASE("grad_check examples") {
  Rng rng(4);
  Tensor x = random_tensor({4, 4}, rng);
  const GradCheckReport lin = grad_check([&] { return sum(x); }, x);
  CHECK(lin.max_rel_error <= 1e-10);
  const GradCheckReport sig = grad_check([&] { return sum(sigmoid(x)); }, x);
  CHECK(sig.max_rel_error < 1e-4);

  // A wrong gradient is caught: the tape sees x, the function adds x^3 through a detached copy.
  Tensor y = random_tensor({3}, rng, 0.5, 1.0);
  const GradCheckReport wrong = grad_check(
      [&] { return add(sum(y), sum(ops::mul(y.detach(), mul(y.detach(), y.detach())))); }, y);
  CHECK(!wrong.pass);
  CHECK(relative_error(1.0, 1.0) == 0.0);
  CHECK(relative_error(0.0, 1e-12) == doctest::Approx(1e-4));
}
