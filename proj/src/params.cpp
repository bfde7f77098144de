// Copyright 2026 The deeplas Authors.
// SPDX-License-Identifier: Apache-2.0

#include "deeplas/params.hpp"

#include <stdexcept>

namespace deeplas {

bool is_weight(ParamKind kind) {
  return kind == ParamKind::kWeight || kind == ParamKind::kFilter ||
         kind == ParamKind::kEmbedding;
}

const char* param_kind_name(ParamKind kind) {
  switch (kind) {
    case ParamKind::kWeight: return "weight";
    case ParamKind::kFilter: return "filter";
    case ParamKind::kEmbedding: return "embedding";
    case ParamKind::kBias: return "bias";
    case ParamKind::kBnScale: return "bn_scale";
    case ParamKind::kBnShift: return "bn_shift";
  }
  return "?";
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

template <typename T>
ParamRef ParamStore<T>::add(const std::string& name, Shape shape,
                            ParamKind kind, InitScheme init) {
  if (find(name)) {
    throw std::invalid_argument("parameter '" + name + "' registered twice");
  }
  const std::size_t index = entries_.size();
  Tensor<T> value = tensor_init<T>(shape, init, derive_seed(seed_, index));
  value.set_requires_grad(true);
  entries_.push_back(Entry{name, kind, init, std::move(value)});
  return ParamRef{index};
}

template <typename T>
std::size_t ParamStore<T>::add_buffer(const std::string& name,
                                      std::vector<double> values) {
  if (find_buffer(name)) {
    throw std::invalid_argument("buffer '" + name + "' registered twice");
  }
  buffers_.push_back(Buffer{name, std::move(values)});
  return buffers_.size() - 1;
}

template <typename T>
std::optional<ParamRef> ParamStore<T>::find(const std::string& name) const {
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (entries_[i].name == name) return ParamRef{i};
  }
  return std::nullopt;
}

template <typename T>
std::optional<std::size_t> ParamStore<T>::find_buffer(
    const std::string& name) const {
  for (std::size_t i = 0; i < buffers_.size(); ++i) {
    if (buffers_[i].name == name) return i;
  }
  return std::nullopt;
}

template <typename T>
const Tensor<T>& ParamStore<T>::use(ParamRef r) const {
  if (r.index < overrides_.size() && overrides_[r.index].defined()) {
    return overrides_[r.index];
  }
  return entries_.at(r.index).value;
}

template <typename T>
void ParamStore<T>::set_overrides(std::vector<Tensor<T>> overrides) {
  if (overrides.size() != entries_.size()) {
    throw std::invalid_argument("set_overrides: expected one slot per parameter");
  }
  overrides_ = std::move(overrides);
}

template <typename T>
void ParamStore<T>::zero_grad() {
  for (auto& e : entries_) e.value.zero_grad();
}

template <typename T>
std::int64_t ParamStore<T>::total_elements() const {
  std::int64_t n = 0;
  for (const auto& e : entries_) n += e.value.numel();
  return n;
}

template class ParamStore<float>;
template class ParamStore<double>;

}  // namespace deeplas
