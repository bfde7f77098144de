// Copyright 2026 The deeplas Authors.
// SPDX-License-Identifier: Apache-2.0

#include "deeplas/tensor.hpp"

#include <cmath>
#include <random>
#include <sstream>

namespace deeplas {

std::int64_t shape_numel(const Shape& shape) {
  std::int64_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ',';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

template <typename T>
Tensor<T>::Tensor(Shape shape, std::vector<T> data, bool requires_grad)
    : impl_(std::make_shared<Impl>()) {
  for (auto d : shape) {
    if (d <= 0) {
      throw ShapeError("tensor: extents must be positive, got " +
                       shape_str(shape));
    }
  }
  if (shape_numel(shape) != static_cast<std::int64_t>(data.size())) {
    throw ShapeError("tensor: shape " + shape_str(shape) + " needs " +
                     std::to_string(shape_numel(shape)) + " values, got " +
                     std::to_string(data.size()));
  }
  impl_->shape = std::move(shape);
  impl_->data = std::move(data);
  impl_->requires_grad = requires_grad;
}

template <typename T>
Tensor<T> Tensor<T>::full(Shape shape, T value) {
  const auto n = shape_numel(shape);
  return Tensor(std::move(shape),
                std::vector<T>(static_cast<std::size_t>(n), value));
}

template <typename T>
T Tensor<T>::item() const {
  if (impl_->data.size() != 1) {
    throw ShapeError("item: tensor of shape " + shape_str(impl_->shape) +
                     " is not a scalar");
  }
  return impl_->data[0];
}

template <typename T>
Tensor<T> Tensor<T>::detach() const {
  return Tensor(impl_->shape, impl_->data, false);
}

template <typename T>
Tape<T>*& Tape<T>::active_slot() noexcept {
  thread_local Tape<T>* slot = nullptr;
  return slot;
}

template <typename T>
Tape<T>* Tape<T>::active() noexcept {
  return active_slot();
}

template <typename T>
void Tape<T>::push(std::string_view op, std::vector<const void*> inputs,
                   std::shared_ptr<detail::TensorImpl<T>> output,
                   std::function<void()> backward) {
  records_.push_back(
      Record{op, std::move(inputs), std::move(output), std::move(backward)});
}

template <typename T>
void Tape<T>::backward(const Tensor<T>& loss) {
  if (!loss.defined() || loss.numel() != 1) {
    throw ShapeError("backward: loss must be a scalar, got shape " +
                     (loss.defined() ? shape_str(loss.shape()) : "<null>"));
  }
  if (records_.empty()) {
    throw std::logic_error("backward: tape is empty");
  }
  loss.impl()->grad_buffer()[0] += T(1);
  for (auto it = records_.rbegin(); it != records_.rend(); ++it) {
    if (!it->output->grad.empty()) it->backward();
  }
  records_.clear();
}

template <typename T>
Tensor<T> tensor_init(const Shape& shape, const InitScheme& scheme,
                      std::uint64_t seed) {
  if (shape.empty()) throw ShapeError("tensor_init: empty shape");
  for (auto d : shape) {
    if (d <= 0) {
      throw ShapeError("tensor_init: invalid extent in " + shape_str(shape));
    }
  }
  const auto n = static_cast<std::size_t>(shape_numel(shape));
  std::vector<T> values(n, T(0));
  std::mt19937_64 rng(seed);
  if (const auto* u = std::get_if<Uniform>(&scheme)) {
    std::uniform_real_distribution<double> dist(u->low, u->high);
    for (auto& v : values) v = static_cast<T>(dist(rng));
  } else if (const auto* tn = std::get_if<TruncatedNormal>(&scheme)) {
    if (!(tn->stddev > 0)) {
      throw std::invalid_argument("tensor_init: truncated_normal needs std > 0");
    }
    std::normal_distribution<double> dist(tn->mean, tn->stddev);
    for (auto& v : values) {
      double x = dist(rng);
      while (std::abs(x - tn->mean) > 2.0 * tn->stddev) x = dist(rng);
      v = static_cast<T>(x);
    }
  } else if (const auto* c = std::get_if<Constant>(&scheme)) {
    for (auto& v : values) v = static_cast<T>(c->value);
  }
  return Tensor<T>(shape, std::move(values));
}

std::string init_scheme_str(const InitScheme& scheme) {
  std::ostringstream os;
  if (const auto* u = std::get_if<Uniform>(&scheme)) {
    os << "uniform(" << u->low << "," << u->high << ")";
  } else if (const auto* tn = std::get_if<TruncatedNormal>(&scheme)) {
    os << "truncated_normal(" << tn->mean << "," << tn->stddev << ")";
  } else if (std::holds_alternative<Zeros>(scheme)) {
    os << "zeros";
  } else {
    os << "constant(" << std::get<Constant>(scheme).value << ")";
  }
  return os.str();
}

template class Tensor<float>;
template class Tensor<double>;
template class Tape<float>;
template class Tape<double>;
template Tensor<float> tensor_init<float>(const Shape&, const InitScheme&,
                                          std::uint64_t);
template Tensor<double> tensor_init<double>(const Shape&, const InitScheme&,
                                            std::uint64_t);

}  // namespace deeplas
