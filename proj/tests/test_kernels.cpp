// Copyright 2026 The deeplas Authors.
// SPDX-License-Identifier: Apache-2.0
//
// The SIMD kernels must agree with the scalar reference up to FMA rounding.

#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include "deeplas/kernels.hpp"
#include "doctest.h"

using deeplas::kernels::Isa;
using deeplas::kernels::Trans;
namespace kernels = deeplas::kernels;

namespace {

template <typename T>
std::vector<T> random_vec(std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  std::vector<T> v(n);
  for (auto& x : v) x = static_cast<T>(dist(rng));
  return v;
}

template <typename T>
void check_gemm_equivalence(double tol) {
  if (!kernels::isa_supported(Isa::kAvx2)) return;
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> ext(1, 37);
  for (int trial = 0; trial < 200; ++trial) {
    const int m = ext(rng), n = ext(rng), k = ext(rng);
    const auto ta = trial % 2 ? Trans::kYes : Trans::kNo;
    const auto tb = (trial / 2) % 2 ? Trans::kYes : Trans::kNo;
    const auto a = random_vec<T>(static_cast<std::size_t>(m * k), rng);
    const auto b = random_vec<T>(static_cast<std::size_t>(k * n), rng);
    const auto c0 = random_vec<T>(static_cast<std::size_t>(m * n), rng);
    const int lda = ta == Trans::kYes ? m : k;
    const int ldb = tb == Trans::kYes ? k : n;
    auto c_ref = c0, c_simd = c0;
    kernels::set_isa(Isa::kScalar);
    kernels::gemm<T>(ta, tb, m, n, k, a.data(), lda, b.data(), ldb,
                     c_ref.data(), n);
    kernels::set_isa(Isa::kAvx2);
    kernels::gemm<T>(ta, tb, m, n, k, a.data(), lda, b.data(), ldb,
                     c_simd.data(), n);
    for (std::size_t i = 0; i < c_ref.size(); ++i) {
      REQUIRE(std::abs(c_ref[i] - c_simd[i]) <= tol * (1 + std::abs(c_ref[i])));
    }
  }
}

}  // namespace

TEST_CASE("gemm: avx2 matches scalar reference") {
  const Isa saved = kernels::active_isa();
  check_gemm_equivalence<float>(1e-5);
  check_gemm_equivalence<double>(1e-13);
  kernels::set_isa(saved);
}

TEST_CASE("axpy and dot: avx2 matches scalar reference") {
  if (!kernels::isa_supported(Isa::kAvx2)) return;
  std::mt19937_64 rng(11);
  for (int n = 0; n < 70; ++n) {
    const auto x = random_vec<float>(static_cast<std::size_t>(n), rng);
    const auto y0 = random_vec<float>(static_cast<std::size_t>(n), rng);
    auto y_ref = y0, y_simd = y0;
    kernels::scalar::axpy(n, 0.37f, x.data(), y_ref.data());
    kernels::avx2::axpy(n, 0.37f, x.data(), y_simd.data());
    for (int i = 0; i < n; ++i) CHECK(y_ref[i] == doctest::Approx(y_simd[i]).epsilon(1e-6));
    const double dr = kernels::scalar::dot(n, x.data(), y0.data());
    const double ds = kernels::avx2::dot(n, x.data(), y0.data());
    CHECK(std::abs(dr - ds) < 1e-5);

    const auto xd = random_vec<double>(static_cast<std::size_t>(n), rng);
    const auto yd = random_vec<double>(static_cast<std::size_t>(n), rng);
    CHECK(std::abs(kernels::scalar::dot(n, xd.data(), yd.data()) -
                   kernels::avx2::dot(n, xd.data(), yd.data())) < 1e-13);
  }
}

TEST_CASE("gemm: identity and known product") {
  for (Isa isa : {Isa::kScalar, Isa::kAvx2}) {
    if (!kernels::isa_supported(isa)) continue;
    const Isa saved = kernels::active_isa();
    kernels::set_isa(isa);
    const std::vector<double> a{1, 2, 3, 4, 5, 6};      // 2x3
    const std::vector<double> b{7, 8, 9, 10, 11, 12};   // 3x2
    std::vector<double> c(4, 0.0);
    kernels::gemm<double>(Trans::kNo, Trans::kNo, 2, 2, 3, a.data(), 3,
                          b.data(), 2, c.data(), 2);
    CHECK(c == std::vector<double>{58, 64, 139, 154});
    kernels::set_isa(saved);
  }
}

TEST_CASE("set_isa rejects unsupported targets") {
  if (!kernels::isa_supported(Isa::kAvx2)) {
    CHECK_THROWS_AS(kernels::set_isa(Isa::kAvx2), std::invalid_argument);
  }
  CHECK(kernels::isa_name(Isa::kScalar) == "scalar");
}
