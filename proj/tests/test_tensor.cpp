// Copyright 2026 The deeplas Authors.
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "deeplas/gradcheck.hpp"
#include "deeplas/ops.hpp"
#include "deeplas/tensor.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace deeplas;
using deeplas::testing::random_tensor;

TEST_CASE("tensor_init: schemes and determinism") {
  const auto z = tensor_init<double>({2, 2}, Zeros{}, 3);
  CHECK(std::all_of(z.data().begin(), z.data().end(),
                    [](double v) { return v == 0.0; }));

  const auto u = tensor_init<float>({4}, Uniform{-0.1, 0.1}, 42);
  for (float v : u.data()) {
    CHECK(v >= -0.1f);
    CHECK(v <= 0.1f);
  }

  const auto c = tensor_init<float>({3}, Constant{2.5}, 0);
  CHECK(c.data()[2] == 2.5f);

  const auto a = tensor_init<float>({50, 3}, Uniform{}, 99);
  const auto b = tensor_init<float>({50, 3}, Uniform{}, 99);
  CHECK(std::equal(a.data().begin(), a.data().end(), b.data().begin()));
  const auto d = tensor_init<float>({50, 3}, Uniform{}, 100);
  CHECK_FALSE(std::equal(a.data().begin(), a.data().end(), d.data().begin()));

  CHECK_THROWS_AS(tensor_init<float>({2, 0}, Zeros{}, 1), ShapeError);
  CHECK_THROWS_AS(tensor_init<float>({}, Zeros{}, 1), ShapeError);
  CHECK_THROWS_AS(tensor_init<float>({2}, TruncatedNormal{0.0, 0.0}, 1),
                  std::invalid_argument);
}

TEST_CASE("tensor_init: truncated normal against the analytic truncated law") {
  const auto t = tensor_init<double>({10000}, TruncatedNormal{0.0, 0.1}, 5);
  double max_abs = 0, m = 0, m2 = 0;
  for (double v : t.data()) {
    max_abs = std::max(max_abs, std::abs(v));
    m += v;
    m2 += v * v;
  }
  m /= 1e4;
  const double sd = std::sqrt(m2 / 1e4 - m * m);
  CHECK(max_abs <= 0.2);
  // N(0, s) truncated to +-2s has standard deviation
  // s * sqrt(1 - 4 phi(2) / (2 Phi(2) - 1)) = 0.0879628 s/0.1.
  CHECK(sd == doctest::Approx(0.0879628).epsilon(0.03));
  CHECK(std::abs(m) < 0.003);
}

TEST_CASE("conv2d: worked examples") {
  const auto ones = Tensor<double>::full({1, 1, 3, 3}, 1.0);
  const auto filt = Tensor<double>::full({1, 1, 3, 3}, 1.0);
  const auto y = conv2d(ones, filt, 1, 1, Padding::kValid);
  CHECK(y.shape() == Shape{1, 1, 1, 1});
  CHECK(y.item() == 9.0);

  const auto x = Tensor<double>::full({1, 1, 4, 8}, 1.0);
  const auto w = Tensor<double>::full({2, 1, 3, 3}, 1.0);
  CHECK(conv2d(x, w, 1, 2, Padding::kSame).shape() == Shape{1, 2, 4, 4});
  CHECK(conv2d(x, w, 1, 2, Padding::kValid).shape() == Shape{1, 2, 2, 3});
  CHECK(conv_out_extent(7, 3, 2, Padding::kSame) == 4);
  CHECK(conv_out_extent(7, 3, 2, Padding::kValid) == 3);

  // Same padding, stride 1: one zero on each side for k = 3.
  const Tensor<double> row({1, 1, 1, 3}, {1, 2, 3});
  const Tensor<double> box({1, 1, 1, 3}, {1, 1, 1});
  const auto r = conv2d(row, box, 1, 1, Padding::kSame);
  CHECK(std::vector<double>(r.data().begin(), r.data().end()) ==
        std::vector<double>{3, 6, 5});
  // Even kernel: the extra padding cell sits on the high-index side.
  const Tensor<double> pair({1, 1, 1, 2}, {1, 1});
  const auto r2 = conv2d(row, pair, 1, 1, Padding::kSame);
  CHECK(std::vector<double>(r2.data().begin(), r2.data().end()) ==
        std::vector<double>{3, 5, 3});

  CHECK_THROWS_AS(conv2d(x, Tensor<double>::full({1, 2, 3, 3}, 1.0), 1, 1,
                         Padding::kSame),
                  ShapeError);
}

TEST_CASE("conv2d: delta filter reproduces the input exactly") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const auto x = random_tensor<float>({2, 3, 5, 7}, rng, -5, 5, false);
    std::vector<float> w(3 * 3 * 3 * 3, 0.0f);
    for (int c = 0; c < 3; ++c) w[((c * 3 + c) * 3 + 1) * 3 + 1] = 1.0f;
    const auto y = conv2d(x, Tensor<float>({3, 3, 3, 3}, w), 1, 1, Padding::kSame);
    CHECK(std::equal(x.data().begin(), x.data().end(), y.data().begin()));
  }
}

TEST_CASE("softmax and matmul: worked examples") {
  const auto p = softmax(Tensor<double>::full({4}, 0.7), 0);
  for (double v : p.data()) CHECK(v == doctest::Approx(0.25));

  std::mt19937_64 rng(9);
  const auto a = random_tensor<double>({3, 4}, rng, -1, 1, false);
  const Tensor<double> eye({3, 3}, {1, 0, 0, 0, 1, 0, 0, 0, 1});
  const auto y = matmul(eye, a);
  CHECK(std::equal(a.data().begin(), a.data().end(), y.data().begin()));
  CHECK_THROWS_WITH_AS(matmul(a, eye), doctest::Contains("matmul"), ShapeError);
}

TEST_CASE("softmax: distribution along any axis, masked entries get zero") {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 50; ++trial) {
    const auto x = random_tensor<double>({3, 5, 2}, rng, -30, 30, false);
    for (std::size_t axis = 0; axis < 3; ++axis) {
      const auto y = softmax(x, axis);
      const auto s = sum(y, {axis});
      for (double v : s.data()) CHECK(std::abs(v - 1.0) < 1e-6);
      for (double v : y.data()) CHECK(v >= 0.0);
    }
  }
  const Tensor<double> x({2, 3}, {1, 2, 3, 4, 5, 6});
  const std::vector<std::uint8_t> mask{1, 1, 0, 0, 1, 0};
  const auto y = softmax(x, 1, mask);
  CHECK(y.data()[2] == 0.0);
  CHECK(y.data()[4] == 1.0);
  CHECK(y.data()[0] + y.data()[1] == doctest::Approx(1.0));
  const std::vector<std::uint8_t> none(6, 0);
  CHECK_THROWS_AS(softmax(x, 1, none), ShapeError);
}

TEST_CASE("backward: worked examples and tape bookkeeping") {
  Tensor<double> x({2, 3}, {1, 2, 3, 4, 5, 6}, true);
  Tape<double> tape;
  Tensor<double> loss;
  {
    TapeScope<double> scope(tape);
    loss = sum(x);
  }
  CHECK(tape.size() == 1);
  tape.backward(loss);
  CHECK(tape.size() == 0);
  for (double g : x.grad()) CHECK(g == 1.0);

  Tensor<double> v({3}, {1, 2, 3}, true);
  {
    TapeScope<double> scope(tape);
    loss = sum(mul(v, v));
  }
  tape.backward(loss);
  CHECK(std::vector<double>(v.grad().begin(), v.grad().end()) ==
        std::vector<double>{2, 4, 6});

  Tensor<double> m({2}, {1, 2}, true);
  {
    TapeScope<double> scope(tape);
    loss = scale(m, 2.0);
  }
  CHECK_THROWS_AS(tape.backward(loss), ShapeError);

  Tape<double> empty;
  CHECK_THROWS(empty.backward(Tensor<double>::scalar(1.0)));
}

TEST_CASE("backward: records are in topological order and only taped when needed") {
  Tensor<double> w({2, 2}, {1, 2, 3, 4}, true);
  const Tensor<double> c({2, 2}, {1, 1, 1, 1});
  Tape<double> tape;
  {
    TapeScope<double> scope(tape);
    auto constant_only = add(c, c);
    CHECK(tape.size() == 0);
    CHECK_FALSE(constant_only.requires_grad());
    auto y = tanh(matmul(add(w, c), w));
    (void)y;
  }
  REQUIRE(tape.size() == 3);
  const auto& recs = tape.records();
  // Each record's inputs are leaves or outputs of an earlier record.
  for (std::size_t i = 0; i < recs.size(); ++i) {
    for (const void* in : recs[i].inputs) {
      bool leaf = in == w.impl().get() || in == c.impl().get();
      bool earlier = false;
      for (std::size_t j = 0; j < i; ++j) earlier |= recs[j].output.get() == in;
      CHECK((leaf || earlier));
    }
  }
  tape.clear();

  // Without an active tape, nothing is recorded.
  auto y = sum(mul(w, w));
  CHECK_FALSE(y.requires_grad());
}

TEST_CASE("backward: every requires_grad tensor reachable from the loss gets a grad") {
  Tensor<double> a({2}, {0.5, -1}, true);
  Tensor<double> b({2}, {2, 3}, true);
  Tensor<double> unused({2}, {2, 3}, true);
  Tape<double> tape;
  Tensor<double> loss;
  {
    TapeScope<double> scope(tape);
    auto dead = mul(unused, unused);
    (void)dead;
    loss = sum(relu(mul(a, b)));
  }
  tape.backward(loss);
  CHECK(a.has_grad());
  CHECK(b.has_grad());
  CHECK_FALSE(unused.has_grad());
  // relu'(x) = 0 at x < 0 and at exactly 0.
  CHECK(a.grad()[1] == 0.0);
  Tensor<double> z({1}, {0.0}, true);
  {
    TapeScope<double> scope(tape);
    loss = sum(relu(z));
  }
  tape.backward(loss);
  CHECK(z.grad()[0] == 0.0);
}

TEST_CASE("mean and variance over axes") {
  const Tensor<double> x({2, 2}, {1, 2, 3, 4});
  CHECK(mean(x, {0, 1}).item() == 2.5);
  CHECK(variance(x, {0, 1}).item() == 1.25);
  const auto m0 = mean(x, {0});
  CHECK(m0.shape() == Shape{1, 2});
  CHECK(m0.data()[0] == 2.0);
}

TEST_CASE("shape errors name the op and both shapes") {
  const auto a = Tensor<double>::zeros({2, 3});
  const auto b = Tensor<double>::zeros({4});
  CHECK_THROWS_WITH(add(a, b), doctest::Contains("add: incompatible shapes [2,3] and [4]"));
  CHECK_THROWS_WITH(concat<double>({a, b}, 0), doctest::Contains("concat"));
  CHECK_THROWS_AS(slice(a, 1, 2, 2), ShapeError);
  CHECK_THROWS_AS(reshape(a, {5}), ShapeError);
  CHECK_THROWS_AS(Tensor<double>({2}, {1.0}), ShapeError);
}

TEST_CASE("finite_difference_check: quadratic is exact to roundoff") {
  Tensor<double> p({4}, {0.3, -1.2, 2.0, 0.7});
  const Tensor<double> c({4}, {1, 2, 3, 4});
  auto report = finite_difference_check(
      [&] { return sum(mul(mul(p, p), c)); }, {{"p", p}}, 1e-4);
  CHECK(report.max_rel_error < 1e-8);
  CHECK(report.worst_param == "p");
}

TEST_CASE("finite_difference_check: argument and non-finite errors") {
  Tensor<double> p({1}, {1.0});
  CHECK_THROWS_AS(finite_difference_check([&] { return sum(p); }, {{"p", p}}, 1.0),
                  std::invalid_argument);
  Tensor<double> q({1}, {0.0});
  CHECK_THROWS_WITH(finite_difference_check([&] { return sum(log(q)); },
                                            {{"q", q}}, 1e-4),
                    doctest::Contains("non-finite"));
  Tensor<double> r({1}, {1e-5});
  CHECK_THROWS_WITH(finite_difference_check([&] { return sum(log(r)); },
                                            {{"the_param", r}}, 1e-5),
                    doctest::Contains("the_param"));
}
