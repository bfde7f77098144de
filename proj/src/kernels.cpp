// Copyright 2026 The deeplas Authors.
// SPDX-License-Identifier: Apache-2.0

#include "deeplas/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>
#include <vector>

namespace deeplas::kernels {
namespace {

bool host_has_avx2() noexcept {
#if defined(__x86_64__) || defined(_M_X64)
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

Isa initial_isa() noexcept {
  if (const char* env = std::getenv("DEEPLAS_ISA")) {
    const std::string v(env);
    if (v == "scalar") return Isa::kScalar;
    if (v == "avx2" && host_has_avx2()) return Isa::kAvx2;
  }
  return host_has_avx2() ? Isa::kAvx2 : Isa::kScalar;
}

std::atomic<Isa>& isa_slot() {
  static std::atomic<Isa> slot{initial_isa()};
  return slot;
}

template <typename T>
void transpose_into(std::int64_t rows, std::int64_t cols, const T* src,
                    std::int64_t ld, std::vector<T>& dst) {
  dst.resize(static_cast<std::size_t>(rows * cols));
  for (std::int64_t r = 0; r < rows; ++r) {
    for (std::int64_t c = 0; c < cols; ++c) dst[c * rows + r] = src[r * ld + c];
  }
}

template <typename T>
void gemm_nn_dispatch(std::int64_t m, std::int64_t n, std::int64_t k,
                      const T* a, std::int64_t lda, const T* b,
                      std::int64_t ldb, T* c, std::int64_t ldc) {
  if (active_isa() == Isa::kAvx2) {
    avx2::gemm_nn(m, n, k, a, lda, b, ldb, c, ldc);
  } else {
    scalar::gemm_nn(m, n, k, a, lda, b, ldb, c, ldc);
  }
}

}  // namespace

Isa active_isa() noexcept { return isa_slot().load(std::memory_order_relaxed); }

bool isa_supported(Isa isa) noexcept {
  return isa == Isa::kScalar || host_has_avx2();
}

void set_isa(Isa isa) {
  if (!isa_supported(isa)) {
    throw std::invalid_argument("kernel ISA " + std::string(isa_name(isa)) +
                                " is not supported on this host");
  }
  isa_slot().store(isa, std::memory_order_relaxed);
}

std::string_view isa_name(Isa isa) noexcept {
  return isa == Isa::kAvx2 ? "avx2" : "scalar";
}

template <typename T>
void gemm(Trans trans_a, Trans trans_b, std::int64_t m, std::int64_t n,
          std::int64_t k, const T* a, std::int64_t lda, const T* b,
          std::int64_t ldb, T* c, std::int64_t ldc) {
  if (m == 0 || n == 0 || k == 0) return;
  thread_local std::vector<T> a_buf, b_buf;
  if (trans_a == Trans::kYes) {
    // A is stored k x m.
    transpose_into(k, m, a, lda, a_buf);
    a = a_buf.data();
    lda = k;
  }
  if (trans_b == Trans::kYes) {
    // B is stored n x k.
    transpose_into(n, k, b, ldb, b_buf);
    b = b_buf.data();
    ldb = n;
  }
  gemm_nn_dispatch(m, n, k, a, lda, b, ldb, c, ldc);
}

template <typename T>
void axpy(std::int64_t n, T alpha, const T* x, T* y) {
  if (active_isa() == Isa::kAvx2) {
    avx2::axpy(n, alpha, x, y);
  } else {
    scalar::axpy(n, alpha, x, y);
  }
}

template <typename T>
T dot(std::int64_t n, const T* x, const T* y) {
  return active_isa() == Isa::kAvx2 ? avx2::dot(n, x, y) : scalar::dot(n, x, y);
}

template void gemm<float>(Trans, Trans, std::int64_t, std::int64_t,
                          std::int64_t, const float*, std::int64_t,
                          const float*, std::int64_t, float*, std::int64_t);
template void gemm<double>(Trans, Trans, std::int64_t, std::int64_t,
                           std::int64_t, const double*, std::int64_t,
                           const double*, std::int64_t, double*, std::int64_t);
template void axpy<float>(std::int64_t, float, const float*, float*);
template void axpy<double>(std::int64_t, double, const double*, double*);
template float dot<float>(std::int64_t, const float*, const float*);
template double dot<double>(std::int64_t, const double*, const double*);

}  // namespace deeplas::kernels
