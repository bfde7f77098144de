// Copyright 2026 The deeplas Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "deeplas/tensor.hpp"

namespace deeplas {

enum class ParamKind {
  kWeight,     // fully connected weight matrix
  kFilter,     // convolution filter bank
  kEmbedding,  // token embedding table
  kBias,
  kBnScale,    // batch-norm gamma
  kBnShift,    // batch-norm beta
};

// Weight matrices, filters and embeddings receive weight noise and L2 decay;
// biases and batch-norm parameters do not.
bool is_weight(ParamKind kind);
const char* param_kind_name(ParamKind kind);

struct ParamRef {
  std::size_t index = 0;
};

// Named, ordered parameter collection with initialization metadata, plus
// non-trainable buffers (batch-norm running statistics).
//
// Layers hold ParamRefs and fetch tensors through use(), which returns a
// per-step override (e.g. the weight-noise perturbed copy) when one is
// installed and the clean tensor otherwise.
template <typename T>
class ParamStore {
 public:
  explicit ParamStore(std::uint64_t seed = 0) : seed_(seed) {}

  ParamRef add(const std::string& name, Shape shape, ParamKind kind,
               InitScheme init);
  std::size_t add_buffer(const std::string& name, std::vector<double> values);

  std::size_t size() const { return entries_.size(); }
  const std::string& name(std::size_t i) const { return entries_.at(i).name; }
  ParamKind kind(std::size_t i) const { return entries_.at(i).kind; }
  const InitScheme& init(std::size_t i) const { return entries_.at(i).init; }
  std::optional<ParamRef> find(const std::string& name) const;

  Tensor<T>& value(std::size_t i) { return entries_.at(i).value; }
  const Tensor<T>& value(std::size_t i) const { return entries_.at(i).value; }
  Tensor<T>& value(ParamRef r) { return value(r.index); }
  const Tensor<T>& value(ParamRef r) const { return value(r.index); }

  const Tensor<T>& use(ParamRef r) const;
  // One tensor per parameter (same order); undefined entries fall back to
  // the clean value.
  void set_overrides(std::vector<Tensor<T>> overrides);
  void clear_overrides() { overrides_.clear(); }

  std::size_t buffer_count() const { return buffers_.size(); }
  const std::string& buffer_name(std::size_t i) const {
    return buffers_.at(i).name;
  }
  std::vector<double>& buffer(std::size_t i) { return buffers_.at(i).values; }
  const std::vector<double>& buffer(std::size_t i) const {
    return buffers_.at(i).values;
  }
  std::optional<std::size_t> find_buffer(const std::string& name) const;

  void zero_grad();
  std::int64_t total_elements() const;

 private:
  struct Entry {
    std::string name;
    ParamKind kind;
    InitScheme init;
    Tensor<T> value;
  };
  struct Buffer {
    std::string name;
    std::vector<double> values;
  };

  std::uint64_t seed_;
  std::vector<Entry> entries_;
  std::vector<Buffer> buffers_;
  std::vector<Tensor<T>> overrides_;
};

// Seed for the i-th draw derived from a base seed (splitmix64 finalizer).
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

}  // namespace deeplas
