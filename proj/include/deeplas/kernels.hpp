// Copyright 2026 The deeplas Authors.
// SPDX-License-Identifier: Apache-2.0
//
// Dense inner-loop kernels. Every kernel has a portable scalar reference
// implementation and, on x86-64, an AVX2/FMA variant. The variant is chosen
// once at startup from CPUID (override with DEEPLAS_ISA=scalar|avx2) and can
// be switched at runtime for equivalence testing.

#pragma once

#include <cstdint>
#include <string_view>

namespace deeplas::kernels {

enum class Isa { kScalar, kAvx2 };

Isa active_isa() noexcept;
bool isa_supported(Isa isa) noexcept;
// Throws std::invalid_argument if the host cannot run `isa`.
void set_isa(Isa isa);
std::string_view isa_name(Isa isa) noexcept;

enum class Trans { kNo, kYes };

// C[m,n] += op(A)[m,k] * op(B)[k,n], all row-major with leading dimensions.
template <typename T>
void gemm(Trans trans_a, Trans trans_b, std::int64_t m, std::int64_t n,
          std::int64_t k, const T* a, std::int64_t lda, const T* b,
          std::int64_t ldb, T* c, std::int64_t ldc);

// y += alpha * x
template <typename T>
void axpy(std::int64_t n, T alpha, const T* x, T* y);

template <typename T>
T dot(std::int64_t n, const T* x, const T* y);

// Reference implementations, always available.
namespace scalar {
template <typename T>
void gemm_nn(std::int64_t m, std::int64_t n, std::int64_t k, const T* a,
             std::int64_t lda, const T* b, std::int64_t ldb, T* c,
             std::int64_t ldc);
template <typename T>
void axpy(std::int64_t n, T alpha, const T* x, T* y);
template <typename T>
T dot(std::int64_t n, const T* x, const T* y);
}  // namespace scalar

// AVX2/FMA variants. Only call when isa_supported(Isa::kAvx2).
namespace avx2 {
void gemm_nn(std::int64_t m, std::int64_t n, std::int64_t k, const float* a,
             std::int64_t lda, const float* b, std::int64_t ldb, float* c,
             std::int64_t ldc);
void gemm_nn(std::int64_t m, std::int64_t n, std::int64_t k, const double* a,
             std::int64_t lda, const double* b, std::int64_t ldb, double* c,
             std::int64_t ldc);
void axpy(std::int64_t n, float alpha, const float* x, float* y);
void axpy(std::int64_t n, double alpha, const double* x, double* y);
float dot(std::int64_t n, const float* x, const float* y);
double dot(std::int64_t n, const double* x, const double* y);
}  // namespace avx2

}  // namespace deeplas::kernels
