// Copyright 2026 The deeplas Authors.
// SPDX-License-Identifier: Apache-2.0
//
// Dense row-major tensors with reverse-mode differentiation.
//
// Operations executed while a Tape is active (see TapeScope) and touching at
// least one tensor with requires_grad append a record to that tape.
// Tape::backward(loss) replays the records in reverse order, accumulating
// gradients into every participating tensor, and then clears the tape. With
// no active tape, operations compute values only.

#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace deeplas {

using Shape = std::vector<std::int64_t>;

std::int64_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

// Incompatible operand shapes. The message names the op and the shapes.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

namespace detail {
template <typename T>
struct TensorImpl {
  Shape shape;
  std::vector<T> data;
  std::vector<T> grad;  // empty until a gradient is accumulated
  bool requires_grad = false;

  std::span<T> grad_buffer() {
    if (grad.empty()) grad.assign(data.size(), T(0));
    return grad;
  }
};
}  // namespace detail

template <typename T>
class Tensor {
 public:
  using Impl = detail::TensorImpl<T>;

  Tensor() = default;
  Tensor(Shape shape, std::vector<T> data, bool requires_grad = false);

  static Tensor zeros(Shape shape) { return full(std::move(shape), T(0)); }
  static Tensor full(Shape shape, T value);
  static Tensor scalar(T value) { return Tensor(Shape{}, {value}); }

  bool defined() const noexcept { return impl_ != nullptr; }
  const Shape& shape() const { return impl_->shape; }
  std::int64_t dim(std::size_t axis) const { return impl_->shape.at(axis); }
  std::size_t rank() const { return impl_->shape.size(); }
  std::int64_t numel() const {
    return static_cast<std::int64_t>(impl_->data.size());
  }

  std::span<const T> data() const { return impl_->data; }
  // Direct write access. Only for leaves (parameters, optimizer updates).
  std::span<T> mutable_data() { return impl_->data; }
  T item() const;

  bool requires_grad() const { return impl_->requires_grad; }
  void set_requires_grad(bool flag) { impl_->requires_grad = flag; }
  bool has_grad() const { return !impl_->grad.empty(); }
  std::span<const T> grad() const { return impl_->grad; }
  std::span<T> mutable_grad() { return impl_->grad_buffer(); }
  void zero_grad() { impl_->grad.clear(); }

  // Deep copy with no gradient and no tape linkage.
  Tensor detach() const;

  const std::shared_ptr<Impl>& impl() const { return impl_; }
  explicit Tensor(std::shared_ptr<Impl> impl) : impl_(std::move(impl)) {}

 private:
  std::shared_ptr<Impl> impl_;
};

// Wengert list of the operations executed in one forward pass.
template <typename T>
class Tape {
 public:
  struct Record {
    std::string_view op;
    std::vector<const void*> inputs;
    std::shared_ptr<detail::TensorImpl<T>> output;
    std::function<void()> backward;
  };

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  void push(std::string_view op, std::vector<const void*> inputs,
            std::shared_ptr<detail::TensorImpl<T>> output,
            std::function<void()> backward);

  // Seeds d(loss)/d(loss) = 1, replays every record in reverse order, then
  // clears the tape. Throws if `loss` is not a scalar or nothing was taped.
  void backward(const Tensor<T>& loss);

  std::size_t size() const noexcept { return records_.size(); }
  const std::vector<Record>& records() const noexcept { return records_; }
  void clear() noexcept { records_.clear(); }

  // The tape receiving records on this thread, or nullptr.
  static Tape* active() noexcept;

 private:
  template <typename U>
  friend class TapeScope;
  template <typename U>
  friend class NoTapeScope;
  static Tape*& active_slot() noexcept;

  std::vector<Record> records_;
};

// Activates `tape` for the current thread for the lifetime of the scope.
template <typename T>
class TapeScope {
 public:
  explicit TapeScope(Tape<T>& tape) : previous_(Tape<T>::active_slot()) {
    Tape<T>::active_slot() = &tape;
  }
  ~TapeScope() { Tape<T>::active_slot() = previous_; }
  TapeScope(const TapeScope&) = delete;
  TapeScope& operator=(const TapeScope&) = delete;

 private:
  Tape<T>* previous_;
};

// Suspends recording on the current thread (evaluation passes).
template <typename T>
class NoTapeScope {
 public:
  NoTapeScope() : previous_(Tape<T>::active()) { set(nullptr); }
  ~NoTapeScope() { set(previous_); }
  NoTapeScope(const NoTapeScope&) = delete;
  NoTapeScope& operator=(const NoTapeScope&) = delete;

 private:
  static void set(Tape<T>* tape) { Tape<T>::active_slot() = tape; }
  Tape<T>* previous_;
};

struct Uniform {
  double low = -0.1;
  double high = 0.1;
};
// Normal draws further than two standard deviations from the mean are
// resampled.
struct TruncatedNormal {
  double mean = 0.0;
  double stddev = 0.1;
};
struct Zeros {};
struct Constant {
  double value = 0.0;
};
using InitScheme = std::variant<Uniform, TruncatedNormal, Zeros, Constant>;

// Deterministic in (shape, scheme, seed).
template <typename T>
Tensor<T> tensor_init(const Shape& shape, const InitScheme& scheme,
                      std::uint64_t seed);

std::string init_scheme_str(const InitScheme& scheme);

}  // namespace deeplas
