// Copyright 2026 The deeplas Authors.
// SPDX-License-Identifier: Apache-2.0

#include "deeplas/kernels.hpp"

namespace deeplas::kernels::scalar {

template <typename T>
void gemm_nn(std::int64_t m, std::int64_t n, std::int64_t k, const T* a,
             std::int64_t lda, const T* b, std::int64_t ldb, T* c,
             std::int64_t ldc) {
  for (std::int64_t i = 0; i < m; ++i) {
    T* crow = c + i * ldc;
    for (std::int64_t p = 0; p < k; ++p) {
      const T av = a[i * lda + p];
      const T* brow = b + p * ldb;
      for (std::int64_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

template <typename T>
void axpy(std::int64_t n, T alpha, const T* x, T* y) {
  for (std::int64_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

template <typename T>
T dot(std::int64_t n, const T* x, const T* y) {
  T acc = 0;
  for (std::int64_t i = 0; i < n; ++i) acc += x[i] * y[i];
  return acc;
}

template void gemm_nn<float>(std::int64_t, std::int64_t, std::int64_t,
                             const float*, std::int64_t, const float*,
                             std::int64_t, float*, std::int64_t);
template void gemm_nn<double>(std::int64_t, std::int64_t, std::int64_t,
                              const double*, std::int64_t, const double*,
                              std::int64_t, double*, std::int64_t);
template void axpy<float>(std::int64_t, float, const float*, float*);
template void axpy<double>(std::int64_t, double, const double*, double*);
template float dot<float>(std::int64_t, const float*, const float*);
template double dot<double>(std::int64_t, const double*, const double*);

}  // namespace deeplas::kernels::scalar
