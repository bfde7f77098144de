// Copyright 2026 The deeplas Authors.
// SPDX-License-Identifier: Apache-2.0
//
// AVX2/FMA kernels. Functions carry a target attribute instead of the whole
// translation unit being built with -mavx2, so no inline code from shared
// headers gets compiled for AVX2 and leaked to non-AVX2 hosts.

#include "deeplas/kernels.hpp"

#if defined(__x86_64__) || defined(_M_X64)
#include <immintrin.h>
#define DEEPLAS_AVX2 __attribute__((target("avx2,fma")))
#else
#define DEEPLAS_AVX2
#endif

namespace deeplas::kernels::avx2 {

#if defined(__x86_64__) || defined(_M_X64)

namespace {

DEEPLAS_AVX2 inline float hsum(__m256 v) {
  __m128 lo = _mm256_castps256_ps128(v);
  __m128 hi = _mm256_extractf128_ps(v, 1);
  lo = _mm_add_ps(lo, hi);
  __m128 shuf = _mm_movehdup_ps(lo);
  __m128 sums = _mm_add_ps(lo, shuf);
  shuf = _mm_movehl_ps(shuf, sums);
  sums = _mm_add_ss(sums, shuf);
  return _mm_cvtss_f32(sums);
}

DEEPLAS_AVX2 inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  __m128d high64 = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, high64));
}

// 4 rows x 16 columns of C held in eight accumulators.
DEEPLAS_AVX2 void block4x16(std::int64_t k, const float* a, std::int64_t lda,
                            const float* b, std::int64_t ldb, float* c,
                            std::int64_t ldc) {
  __m256 c00 = _mm256_loadu_ps(c), c01 = _mm256_loadu_ps(c + 8);
  __m256 c10 = _mm256_loadu_ps(c + ldc), c11 = _mm256_loadu_ps(c + ldc + 8);
  __m256 c20 = _mm256_loadu_ps(c + 2 * ldc),
         c21 = _mm256_loadu_ps(c + 2 * ldc + 8);
  __m256 c30 = _mm256_loadu_ps(c + 3 * ldc),
         c31 = _mm256_loadu_ps(c + 3 * ldc + 8);
  for (std::int64_t p = 0; p < k; ++p) {
    const float* brow = b + p * ldb;
    const __m256 b0 = _mm256_loadu_ps(brow);
    const __m256 b1 = _mm256_loadu_ps(brow + 8);
    __m256 av = _mm256_broadcast_ss(a + p);
    c00 = _mm256_fmadd_ps(av, b0, c00);
    c01 = _mm256_fmadd_ps(av, b1, c01);
    av = _mm256_broadcast_ss(a + lda + p);
    c10 = _mm256_fmadd_ps(av, b0, c10);
    c11 = _mm256_fmadd_ps(av, b1, c11);
    av = _mm256_broadcast_ss(a + 2 * lda + p);
    c20 = _mm256_fmadd_ps(av, b0, c20);
    c21 = _mm256_fmadd_ps(av, b1, c21);
    av = _mm256_broadcast_ss(a + 3 * lda + p);
    c30 = _mm256_fmadd_ps(av, b0, c30);
    c31 = _mm256_fmadd_ps(av, b1, c31);
  }
  _mm256_storeu_ps(c, c00);
  _mm256_storeu_ps(c + 8, c01);
  _mm256_storeu_ps(c + ldc, c10);
  _mm256_storeu_ps(c + ldc + 8, c11);
  _mm256_storeu_ps(c + 2 * ldc, c20);
  _mm256_storeu_ps(c + 2 * ldc + 8, c21);
  _mm256_storeu_ps(c + 3 * ldc, c30);
  _mm256_storeu_ps(c + 3 * ldc + 8, c31);
}

// One row of C, columns [0, n).
DEEPLAS_AVX2 void row_f32(std::int64_t n, std::int64_t k, const float* a,
                          const float* b, std::int64_t ldb, float* c) {
  std::int64_t j = 0;
  for (; j + 8 <= n; j += 8) {
    __m256 acc = _mm256_loadu_ps(c + j);
    for (std::int64_t p = 0; p < k; ++p) {
      acc = _mm256_fmadd_ps(_mm256_broadcast_ss(a + p),
                            _mm256_loadu_ps(b + p * ldb + j), acc);
    }
    _mm256_storeu_ps(c + j, acc);
  }
  for (; j < n; ++j) {
    float acc = c[j];
    for (std::int64_t p = 0; p < k; ++p) acc += a[p] * b[p * ldb + j];
    c[j] = acc;
  }
}

DEEPLAS_AVX2 void block4x8d(std::int64_t k, const double* a, std::int64_t lda,
                            const double* b, std::int64_t ldb, double* c,
                            std::int64_t ldc) {
  __m256d c00 = _mm256_loadu_pd(c), c01 = _mm256_loadu_pd(c + 4);
  __m256d c10 = _mm256_loadu_pd(c + ldc), c11 = _mm256_loadu_pd(c + ldc + 4);
  __m256d c20 = _mm256_loadu_pd(c + 2 * ldc),
          c21 = _mm256_loadu_pd(c + 2 * ldc + 4);
  __m256d c30 = _mm256_loadu_pd(c + 3 * ldc),
          c31 = _mm256_loadu_pd(c + 3 * ldc + 4);
  for (std::int64_t p = 0; p < k; ++p) {
    const double* brow = b + p * ldb;
    const __m256d b0 = _mm256_loadu_pd(brow);
    const __m256d b1 = _mm256_loadu_pd(brow + 4);
    __m256d av = _mm256_broadcast_sd(a + p);
    c00 = _mm256_fmadd_pd(av, b0, c00);
    c01 = _mm256_fmadd_pd(av, b1, c01);
    av = _mm256_broadcast_sd(a + lda + p);
    c10 = _mm256_fmadd_pd(av, b0, c10);
    c11 = _mm256_fmadd_pd(av, b1, c11);
    av = _mm256_broadcast_sd(a + 2 * lda + p);
    c20 = _mm256_fmadd_pd(av, b0, c20);
    c21 = _mm256_fmadd_pd(av, b1, c21);
    av = _mm256_broadcast_sd(a + 3 * lda + p);
    c30 = _mm256_fmadd_pd(av, b0, c30);
    c31 = _mm256_fmadd_pd(av, b1, c31);
  }
  _mm256_storeu_pd(c, c00);
  _mm256_storeu_pd(c + 4, c01);
  _mm256_storeu_pd(c + ldc, c10);
  _mm256_storeu_pd(c + ldc + 4, c11);
  _mm256_storeu_pd(c + 2 * ldc, c20);
  _mm256_storeu_pd(c + 2 * ldc + 4, c21);
  _mm256_storeu_pd(c + 3 * ldc, c30);
  _mm256_storeu_pd(c + 3 * ldc + 4, c31);
}

DEEPLAS_AVX2 void row_f64(std::int64_t n, std::int64_t k, const double* a,
                          const double* b, std::int64_t ldb, double* c) {
  std::int64_t j = 0;
  for (; j + 4 <= n; j += 4) {
    __m256d acc = _mm256_loadu_pd(c + j);
    for (std::int64_t p = 0; p < k; ++p) {
      acc = _mm256_fmadd_pd(_mm256_broadcast_sd(a + p),
                            _mm256_loadu_pd(b + p * ldb + j), acc);
    }
    _mm256_storeu_pd(c + j, acc);
  }
  for (; j < n; ++j) {
    double acc = c[j];
    for (std::int64_t p = 0; p < k; ++p) acc += a[p] * b[p * ldb + j];
    c[j] = acc;
  }
}

}  // namespace

DEEPLAS_AVX2 void gemm_nn(std::int64_t m, std::int64_t n, std::int64_t k,
                          const float* a, std::int64_t lda, const float* b,
                          std::int64_t ldb, float* c, std::int64_t ldc) {
  const std::int64_t n16 = n - n % 16;
  std::int64_t i = 0;
  for (; i + 4 <= m; i += 4) {
    for (std::int64_t j = 0; j < n16; j += 16) {
      block4x16(k, a + i * lda, lda, b + j, ldb, c + i * ldc + j, ldc);
    }
    if (n16 < n) {
      for (std::int64_t r = 0; r < 4; ++r) {
        row_f32(n - n16, k, a + (i + r) * lda, b + n16, ldb,
                c + (i + r) * ldc + n16);
      }
    }
  }
  for (; i < m; ++i) row_f32(n, k, a + i * lda, b, ldb, c + i * ldc);
}

DEEPLAS_AVX2 void gemm_nn(std::int64_t m, std::int64_t n, std::int64_t k,
                          const double* a, std::int64_t lda, const double* b,
                          std::int64_t ldb, double* c, std::int64_t ldc) {
  const std::int64_t n8 = n - n % 8;
  std::int64_t i = 0;
  for (; i + 4 <= m; i += 4) {
    for (std::int64_t j = 0; j < n8; j += 8) {
      block4x8d(k, a + i * lda, lda, b + j, ldb, c + i * ldc + j, ldc);
    }
    if (n8 < n) {
      for (std::int64_t r = 0; r < 4; ++r) {
        row_f64(n - n8, k, a + (i + r) * lda, b + n8, ldb,
                c + (i + r) * ldc + n8);
      }
    }
  }
  for (; i < m; ++i) row_f64(n, k, a + i * lda, b, ldb, c + i * ldc);
}

DEEPLAS_AVX2 void axpy(std::int64_t n, float alpha, const float* x, float* y) {
  const __m256 av = _mm256_set1_ps(alpha);
  std::int64_t i = 0;
  for (; i + 8 <= n; i += 8) {
    _mm256_storeu_ps(y + i, _mm256_fmadd_ps(av, _mm256_loadu_ps(x + i),
                                            _mm256_loadu_ps(y + i)));
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

DEEPLAS_AVX2 void axpy(std::int64_t n, double alpha, const double* x,
                       double* y) {
  const __m256d av = _mm256_set1_pd(alpha);
  std::int64_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(av, _mm256_loadu_pd(x + i),
                                            _mm256_loadu_pd(y + i)));
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

DEEPLAS_AVX2 float dot(std::int64_t n, const float* x, const float* y) {
  __m256 acc = _mm256_setzero_ps();
  std::int64_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc = _mm256_fmadd_ps(_mm256_loadu_ps(x + i), _mm256_loadu_ps(y + i), acc);
  }
  float sum = hsum(acc);
  for (; i < n; ++i) sum += x[i] * y[i];
  return sum;
}

DEEPLAS_AVX2 double dot(std::int64_t n, const double* x, const double* y) {
  __m256d acc = _mm256_setzero_pd();
  std::int64_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc);
  }
  double sum = hsum(acc);
  for (; i < n; ++i) sum += x[i] * y[i];
  return sum;
}

#else  // non-x86: never selected, forward to the reference code.

void gemm_nn(std::int64_t m, std::int64_t n, std::int64_t k, const float* a,
             std::int64_t lda, const float* b, std::int64_t ldb, float* c,
             std::int64_t ldc) {
  scalar::gemm_nn(m, n, k, a, lda, b, ldb, c, ldc);
}
void gemm_nn(std::int64_t m, std::int64_t n, std::int64_t k, const double* a,
             std::int64_t lda, const double* b, std::int64_t ldb, double* c,
             std::int64_t ldc) {
  scalar::gemm_nn(m, n, k, a, lda, b, ldb, c, ldc);
}
void axpy(std::int64_t n, float alpha, const float* x, float* y) {
  scalar::axpy(n, alpha, x, y);
}
void axpy(std::int64_t n, double alpha, const double* x, double* y) {
  scalar::axpy(n, alpha, x, y);
}
float dot(std::int64_t n, const float* x, const float* y) {
  return scalar::dot(n, x, y);
}
double dot(std::int64_t n, const double* x, const double* y) {
  return scalar::dot(n, x, y);
}

#endif

}  // namespace deeplas::kernels::avx2
