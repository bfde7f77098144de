// Copyright 2026 The deeplas Authors.
// SPDX-License-Identifier: Apache-2.0

#include "deeplas/batch.hpp"

#include <algorithm>
#include <numeric>
#include <random>
#include <stdexcept>

#include "deeplas/params.hpp"

namespace deeplas {

template <typename T>
Batch<T> make_batch(const Dataset& data, std::span<const std::size_t> indices,
                    const Vocabulary* vocab) {
  if (indices.empty()) throw std::invalid_argument("batch: no utterances");
  Batch<T> b;
  b.indices.assign(indices.begin(), indices.end());
  const std::int64_t D = data.at(indices[0]).dims;
  std::int64_t T_max = 0;
  for (std::size_t i : indices) {
    const Utterance& u = data.at(i);
    if (u.dims != D)
      throw std::invalid_argument("batch: utterance " + u.id + " has " +
                                  std::to_string(u.dims) + " dims, expected " +
                                  std::to_string(D));
    if (u.frames < 1)
      throw std::invalid_argument("batch: utterance " + u.id + " is empty");
    T_max = std::max(T_max, u.frames);
    b.lengths.push_back(u.frames);
    if (vocab) b.targets.push_back(vocab->encode(u.transcript));
  }
  const auto B = static_cast<std::int64_t>(indices.size());
  std::vector<T> v(static_cast<std::size_t>(B * T_max * D), T(0));
  for (std::int64_t k = 0; k < B; ++k) {
    const Utterance& u = data[indices[k]];
    std::copy(u.features.begin(), u.features.end(),
              v.begin() + k * T_max * D);
  }
  b.features = Tensor<T>(Shape{B, T_max, D}, std::move(v));
  return b;
}

template Batch<float> make_batch(const Dataset&, std::span<const std::size_t>,
                                 const Vocabulary*);
template Batch<double> make_batch(const Dataset&, std::span<const std::size_t>,
                                  const Vocabulary*);

BucketSampler::BucketSampler(const Dataset& data, std::int64_t batch_size,
                             std::uint64_t seed)
    : seed_(seed) {
  if (batch_size < 1) throw std::invalid_argument("sampler: batch_size < 1");
  if (data.empty()) throw std::invalid_argument("sampler: empty dataset");
  std::vector<std::size_t> idx(data.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return data[a].frames < data[b].frames;
  });
  for (std::size_t i = 0; i < idx.size(); i += batch_size) {
    const std::size_t end = std::min(idx.size(), i + batch_size);
    buckets_.emplace_back(idx.begin() + i, idx.begin() + end);
  }
}

const std::vector<std::size_t>& BucketSampler::batch_at(std::int64_t step) const {
  if (step < 0) throw std::invalid_argument("sampler: negative step");
  const auto n = static_cast<std::int64_t>(buckets_.size());
  const std::int64_t epoch = step / n;
  if (epoch != cached_epoch_) {
    order_.resize(buckets_.size());
    std::iota(order_.begin(), order_.end(), 0);
    std::mt19937_64 rng(derive_seed(seed_, static_cast<std::uint64_t>(epoch)));
    // Fisher-Yates by hand: std::shuffle's draw pattern is library-specific.
    for (std::size_t i = order_.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(rng() % i);
      std::swap(order_[i - 1], order_[j]);
    }
    cached_epoch_ = epoch;
  }
  return buckets_[order_[static_cast<std::size_t>(step % n)]];
}

}  // namespace deeplas
