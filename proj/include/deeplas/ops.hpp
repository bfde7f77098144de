// Copyright 2026 The deeplas Authors.
// SPDX-License-Identifier: Apache-2.0
//
// Differentiable primitive operations. All ops allocate a fresh output, never
// mutate their inputs, and throw ShapeError naming the op and the offending
// shapes when operands do not fit.

#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "deeplas/tensor.hpp"

namespace deeplas {

// Elementwise with numpy-style broadcasting (trailing-aligned, extents equal
// or 1).
template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b);
template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b);
template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b);

template <typename T>
Tensor<T> scale(const Tensor<T>& x, T factor);
template <typename T>
Tensor<T> add_scalar(const Tensor<T>& x, T value);

template <typename T>
Tensor<T> sigmoid(const Tensor<T>& x);
template <typename T>
Tensor<T> tanh(const Tensor<T>& x);
// Subgradient 0 at exactly 0.
template <typename T>
Tensor<T> relu(const Tensor<T>& x);
template <typename T>
Tensor<T> exp(const Tensor<T>& x);
template <typename T>
Tensor<T> log(const Tensor<T>& x);

// a: [..., k] (leading dims flattened into rows), b: [k, n] -> [..., n].
template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b);

enum class Padding { kSame, kValid };

// input [batch, in_ch, freq, time], filters [out_ch, in_ch, kf, kt].
// Same padding: out = ceil(in / stride), the low side padded by (k - 1) / 2
// and the high side by whatever the window needs. Valid padding:
// out = floor((in - k) / stride) + 1.
template <typename T>
Tensor<T> conv2d(const Tensor<T>& input, const Tensor<T>& filters,
                 std::int64_t stride_f, std::int64_t stride_t, Padding padding);

std::int64_t conv_out_extent(std::int64_t in, std::int64_t kernel,
                             std::int64_t stride, Padding padding);

template <typename T>
Tensor<T> concat(const std::vector<Tensor<T>>& parts, std::size_t axis);
// Inserts a new axis of extent parts.size() at `axis`.
template <typename T>
Tensor<T> stack(const std::vector<Tensor<T>>& parts, std::size_t axis);
template <typename T>
Tensor<T> slice(const Tensor<T>& x, std::size_t axis, std::int64_t start,
                std::int64_t length);
template <typename T>
Tensor<T> reshape(const Tensor<T>& x, Shape shape);
template <typename T>
Tensor<T> permute(const Tensor<T>& x, const std::vector<std::size_t>& order);

// Max-subtracted softmax along `axis`. When `valid` is non-empty it holds one
// flag per element of x; invalid entries get probability 0 and each slice
// along `axis` needs at least one valid entry.
template <typename T>
Tensor<T> softmax(const Tensor<T>& x, std::size_t axis,
                  std::span<const std::uint8_t> valid = {});
// Along the last axis.
template <typename T>
Tensor<T> log_softmax(const Tensor<T>& x);

// Sum of all elements, shape [].
template <typename T>
Tensor<T> sum(const Tensor<T>& x);
// Reductions over `axes`, keeping reduced axes with extent 1.
template <typename T>
Tensor<T> sum(const Tensor<T>& x, const std::vector<std::size_t>& axes);
template <typename T>
Tensor<T> mean(const Tensor<T>& x, const std::vector<std::size_t>& axes);
// Population variance.
template <typename T>
Tensor<T> variance(const Tensor<T>& x, const std::vector<std::size_t>& axes);

// mask (constant 0/1, broadcastable to a) ? a : b. a and b share a shape.
template <typename T>
Tensor<T> where(const Tensor<T>& mask, const Tensor<T>& a, const Tensor<T>& b);

// x[n, ids[n]] for x of shape [N, V].
template <typename T>
Tensor<T> pick(const Tensor<T>& x, std::span<const std::int64_t> ids);
// Rows of table [V, D] -> [ids.size(), D].
template <typename T>
Tensor<T> gather_rows(const Tensor<T>& table,
                      std::span<const std::int64_t> ids);

// Fused LSTM cell nonlinearity. gates is [N, 4H] holding the input, forget,
// cell-candidate and output pre-activations in that order.
//   c = sigmoid(f) * c_prev + sigmoid(i) * tanh(g)
//   h = sigmoid(o) * tanh(c)
template <typename T>
std::pair<Tensor<T>, Tensor<T>> lstm_cell(const Tensor<T>& gates,
                                          const Tensor<T>& c_prev);

struct BatchNormStats {
  std::vector<double> mean;
  std::vector<double> var;
};

// Normalizes x per channel along `channel_axis`:
//   y = gamma * (x - mean) / sqrt(var + eps) + beta.
// With `stats` == nullptr, mean and (biased) var are pooled over all valid
// elements of the channel and written to `batch_stats` when given. Otherwise
// `stats` supplies them. `valid` is empty or holds one flag per element.
template <typename T>
Tensor<T> batch_norm(const Tensor<T>& x, const Tensor<T>& gamma,
                     const Tensor<T>& beta, std::size_t channel_axis,
                     double eps, std::span<const std::uint8_t> valid,
                     const BatchNormStats* stats,
                     BatchNormStats* batch_stats = nullptr);

}  // namespace deeplas
