// Copyright 2026 The deeplas Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "deeplas/data.hpp"
#include "deeplas/las.hpp"
#include "deeplas/tensor.hpp"

namespace deeplas {

template <typename T>
struct Batch {
  std::vector<std::size_t> indices;
  Tensor<T> features;  // [B, T_max, D], zero padded
  std::vector<std::int64_t> lengths;
  std::vector<std::vector<std::int64_t>> targets;  // empty without a vocab
};

// Stacks the selected utterances. With a vocabulary the transcripts are
// encoded as targets (each ending in <eos>).
template <typename T>
Batch<T> make_batch(const Dataset& data, std::span<const std::size_t> indices,
                    const Vocabulary* vocab = nullptr);

// Length buckets: utterances sorted by frame count and cut into groups of
// batch_size. Each epoch visits every bucket once in a shuffled order, so
// the batch at a given step depends only on (seed, step).
class BucketSampler {
 public:
  BucketSampler(const Dataset& data, std::int64_t batch_size,
                std::uint64_t seed);
  std::size_t bucket_count() const { return buckets_.size(); }
  const std::vector<std::size_t>& batch_at(std::int64_t step) const;

 private:
  std::vector<std::vector<std::size_t>> buckets_;
  std::uint64_t seed_;
  mutable std::int64_t cached_epoch_ = -1;
  mutable std::vector<std::size_t> order_;
};

}  // namespace deeplas
