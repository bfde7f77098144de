// Copyright 2026 The deeplas Authors.
// SPDX-License-Identifier: Apache-2.0
//
// Every primitive op against central differences on random small shapes
// (at most 32 elements per operand), 100 seeds each.

#include <functional>
#include <random>
#include <string>

#include "deeplas/gradcheck.hpp"
#include "deeplas/ops.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace deeplas;
using deeplas::testing::random_tensor;
using deeplas::testing::weighted_sum;

namespace {

constexpr int kSeeds = 100;
constexpr double kTol = 1e-4;

using Case = std::function<GradCheckReport(std::mt19937_64&, std::uint64_t)>;

std::int64_t pick_extent(std::mt19937_64& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

void run_property(const std::string& name, const Case& c) {
  double worst = 0;
  for (int seed = 0; seed < kSeeds; ++seed) {
    std::mt19937_64 rng(static_cast<std::uint64_t>(seed) * 7919 + 17);
    const auto report = c(rng, static_cast<std::uint64_t>(seed));
    worst = std::max(worst, report.max_rel_error);
  }
  INFO(name << " worst relative error " << worst);
  CHECK(worst < kTol);
}

// Values bounded away from zero so relu/log are smooth around the probe.
Tensor<double> away_from_zero(const Shape& s, std::mt19937_64& rng) {
  auto t = random_tensor(s, rng, 0.1, 1.0);
  std::bernoulli_distribution sign(0.5);
  for (auto& v : t.mutable_data()) {
    if (sign(rng)) v = -v;
  }
  return t;
}

}  // namespace

TEST_CASE("gradcheck: elementwise binary ops with broadcasting") {
  for (auto kind : {0, 1, 2}) {
    run_property("binary" + std::to_string(kind), [kind](std::mt19937_64& rng,
                                                         std::uint64_t seed) {
      const auto d0 = pick_extent(rng, 1, 4), d1 = pick_extent(rng, 1, 4);
      const std::int64_t d2 = pick_extent(rng, 1, 2);
      auto a = random_tensor({d0, d1, d2}, rng);
      const int layout = static_cast<int>(seed % 3);
      const Shape bs = layout == 0 ? Shape{d0, d1, d2}
                       : layout == 1 ? Shape{d1, 1}
                                     : Shape{d0, 1, d2};
      auto b = random_tensor(bs, rng);
      return finite_difference_check(
          [&, kind] {
            auto y = kind == 0 ? add(a, b) : kind == 1 ? sub(a, b) : mul(a, b);
            return weighted_sum(y, seed);
          },
          {{"a", a}, {"b", b}});
    });
  }
}

TEST_CASE("gradcheck: unary ops") {
  using Fn = Tensor<double> (*)(const Tensor<double>&);
  const std::pair<const char*, Fn> ops[] = {
      {"sigmoid", &sigmoid<double>}, {"tanh", &tanh<double>},
      {"relu", &relu<double>},       {"exp", &exp<double>},
  };
  for (const auto& [name, fn] : ops) {
    run_property(name, [fn](std::mt19937_64& rng, std::uint64_t seed) {
      auto x = away_from_zero({pick_extent(rng, 1, 4), pick_extent(rng, 1, 8)},
                              rng);
      return finite_difference_check([&] { return weighted_sum(fn(x), seed); },
                                     {{"x", x}});
    });
  }
  run_property("log", [](std::mt19937_64& rng, std::uint64_t seed) {
    auto x = random_tensor({pick_extent(rng, 1, 32)}, rng, 0.2, 2.0);
    return finite_difference_check([&] { return weighted_sum(log(x), seed); },
                                   {{"x", x}});
  });
  run_property("scale/add_scalar", [](std::mt19937_64& rng, std::uint64_t seed) {
    auto x = random_tensor({pick_extent(rng, 1, 32)}, rng);
    return finite_difference_check(
        [&] { return weighted_sum(add_scalar(scale(x, -1.7), 0.3), seed); },
        {{"x", x}});
  });
}

TEST_CASE("gradcheck: matmul") {
  run_property("matmul", [](std::mt19937_64& rng, std::uint64_t seed) {
    const auto m = pick_extent(rng, 1, 4), k = pick_extent(rng, 1, 5),
               n = pick_extent(rng, 1, 5);
    auto a = seed % 2 ? random_tensor({2, m, k}, rng) : random_tensor({m, k}, rng);
    auto b = random_tensor({k, n}, rng);
    return finite_difference_check(
        [&] { return weighted_sum(matmul(a, b), seed); }, {{"a", a}, {"b", b}});
  });
}

TEST_CASE("gradcheck: conv2d") {
  run_property("conv2d", [](std::mt19937_64& rng, std::uint64_t seed) {
    const auto cin = pick_extent(rng, 1, 2), cout = pick_extent(rng, 1, 2);
    const auto f = pick_extent(rng, 2, 4), t = pick_extent(rng, 3, 4);
    const auto kf = pick_extent(rng, 1, 3), kt = pick_extent(rng, 1, 3);
    const auto sf = pick_extent(rng, 1, 2), st = pick_extent(rng, 1, 2);
    const Padding pad = seed % 2 ? Padding::kSame : Padding::kValid;
    auto x = random_tensor({1, cin, f, t}, rng);
    auto w = random_tensor({cout, cin, std::min(kf, f), std::min(kt, t)}, rng);
    return finite_difference_check(
        [&] { return weighted_sum(conv2d(x, w, sf, st, pad), seed); },
        {{"x", x}, {"w", w}});
  });
}

TEST_CASE("gradcheck: structural ops") {
  run_property("concat", [](std::mt19937_64& rng, std::uint64_t seed) {
    const std::size_t axis = seed % 3;
    Shape s1{2, 3, 2}, s2{2, 3, 2};
    s2[axis] = pick_extent(rng, 1, 2);
    auto a = random_tensor(s1, rng), b = random_tensor(s2, rng);
    return finite_difference_check(
        [&] { return weighted_sum(concat<double>({a, b, a}, axis), seed); },
        {{"a", a}, {"b", b}});
  });
  run_property("stack/slice", [](std::mt19937_64& rng, std::uint64_t seed) {
    const std::size_t axis = seed % 3;
    auto a = random_tensor({2, 3}, rng), b = random_tensor({2, 3}, rng);
    return finite_difference_check(
        [&] {
          auto s = stack<double>({a, b, a}, axis);
          return weighted_sum(slice(s, axis, 1, 2), seed);
        },
        {{"a", a}, {"b", b}});
  });
  run_property("reshape/permute", [](std::mt19937_64& rng, std::uint64_t seed) {
    auto a = random_tensor({2, 3, 4}, rng);
    return finite_difference_check(
        [&] {
          auto p = permute(reshape(a, {4, 3, 2}), {2, 0, 1});
          return weighted_sum(p, seed);
        },
        {{"a", a}});
  });
}

TEST_CASE("gradcheck: softmax family and reductions") {
  run_property("softmax", [](std::mt19937_64& rng, std::uint64_t seed) {
    auto x = random_tensor({3, 4, 2}, rng, -2, 2);
    const std::size_t axis = seed % 3;
    std::vector<std::uint8_t> mask(24, 1);
    if (seed % 2) {
      // Mask a few entries, keeping index 0 along the axis valid.
      for (std::size_t i = 0; i < mask.size(); ++i) mask[i] = (i * 7 + seed) % 5 != 0;
      const std::int64_t stride = axis == 0 ? 8 : axis == 1 ? 2 : 1;
      for (std::size_t i = 0; i < mask.size(); ++i) {
        const auto pos = (static_cast<std::int64_t>(i) / stride) % x.dim(axis);
        if (pos == 0) mask[i] = 1;
      }
    }
    return finite_difference_check(
        [&] { return weighted_sum(softmax(x, axis, mask), seed); }, {{"x", x}});
  });
  run_property("log_softmax", [](std::mt19937_64& rng, std::uint64_t seed) {
    auto x = random_tensor({pick_extent(rng, 1, 4), pick_extent(rng, 2, 8)}, rng, -3, 3);
    return finite_difference_check(
        [&] { return weighted_sum(log_softmax(x), seed); }, {{"x", x}});
  });
  run_property("sum/mean/variance", [](std::mt19937_64& rng, std::uint64_t seed) {
    auto x = random_tensor({2, 3, 4}, rng);
    const std::vector<std::size_t> axes =
        seed % 3 == 0 ? std::vector<std::size_t>{0}
        : seed % 3 == 1 ? std::vector<std::size_t>{0, 2}
                        : std::vector<std::size_t>{1};
    return finite_difference_check(
        [&] {
          auto s = add(weighted_sum(sum(x, axes), seed),
                       add(weighted_sum(mean(x, axes), seed + 1),
                           weighted_sum(variance(x, axes), seed + 2)));
          return add(s, sum(x));
        },
        {{"x", x}});
  });
}

TEST_CASE("gradcheck: indexing and selection") {
  run_property("where", [](std::mt19937_64& rng, std::uint64_t seed) {
    auto a = random_tensor({3, 4}, rng), b = random_tensor({3, 4}, rng);
    const Tensor<double> m({3, 1}, {1.0, 0.0, double(seed % 2)});
    return finite_difference_check(
        [&] { return weighted_sum(where(m, a, b), seed); }, {{"a", a}, {"b", b}});
  });
  run_property("pick/gather_rows", [](std::mt19937_64& rng, std::uint64_t seed) {
    auto x = random_tensor({3, 5}, rng);
    auto table = random_tensor({4, 3}, rng);
    const std::vector<std::int64_t> ids{static_cast<std::int64_t>(seed % 5), 0, 4};
    const std::vector<std::int64_t> rows{3, static_cast<std::int64_t>(seed % 4), 3};
    return finite_difference_check(
        [&] {
          return add(weighted_sum(pick(x, ids), seed),
                     weighted_sum(gather_rows(table, rows), seed + 1));
        },
        {{"x", x}, {"table", table}});
  });
}

TEST_CASE("gradcheck: fused lstm cell") {
  run_property("lstm_cell", [](std::mt19937_64& rng, std::uint64_t seed) {
    const auto n = pick_extent(rng, 1, 2), h = pick_extent(rng, 1, 3);
    auto gates = random_tensor({n, 4 * h}, rng, -2, 2);
    auto c = random_tensor({n, h}, rng);
    return finite_difference_check(
        [&] {
          auto [hn, cn] = lstm_cell(gates, c);
          return add(weighted_sum(hn, seed), weighted_sum(cn, seed + 9));
        },
        {{"gates", gates}, {"c", c}});
  });
}

TEST_CASE("fused lstm cell equals the gate algebra built from primitives") {
  std::mt19937_64 rng(4);
  auto gates = random_tensor({2, 12}, rng, -2, 2, false);
  auto c = random_tensor({2, 3}, rng, -1, 1, false);
  auto [h, cn] = lstm_cell(gates, c);
  auto i = sigmoid(slice(gates, 1, 0, 3));
  auto f = sigmoid(slice(gates, 1, 3, 3));
  auto g = tanh(slice(gates, 1, 6, 3));
  auto o = sigmoid(slice(gates, 1, 9, 3));
  auto c_ref = add(mul(f, c), mul(i, g));
  auto h_ref = mul(o, tanh(c_ref));
  for (int k = 0; k < 6; ++k) {
    CHECK(cn.data()[k] == doctest::Approx(c_ref.data()[k]).epsilon(1e-14));
    CHECK(h.data()[k] == doctest::Approx(h_ref.data()[k]).epsilon(1e-14));
  }
}

TEST_CASE("gradcheck: batch norm in both modes, with masks") {
  run_property("batch_norm", [](std::mt19937_64& rng, std::uint64_t seed) {
    auto x = random_tensor({2, 3, 4}, rng, -2, 2);
    auto gamma = random_tensor({3}, rng, 0.5, 1.5);
    auto beta = random_tensor({3}, rng);
    std::vector<std::uint8_t> mask(24, 1);
    if (seed % 2) {
      for (int t = 2; t < 4; ++t) {
        for (int c = 0; c < 3; ++c) mask[(1 * 3 + c) * 4 + t] = 0;
      }
    }
    const bool infer = seed % 4 == 3;
    BatchNormStats running{{0.1, -0.2, 0.3}, {0.5, 1.2, 2.0}};
    return finite_difference_check(
        [&] {
          return weighted_sum(batch_norm(x, gamma, beta, 1, 1e-5, mask,
                                         infer ? &running : nullptr),
                              seed);
        },
        {{"x", x}, {"gamma", gamma}, {"beta", beta}});
  });
}
