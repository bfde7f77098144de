// Copyright 2026 The deeplas Authors.
// SPDX-License-Identifier: Apache-2.0
//
// Listen, attend and spell: an encoder assembled from an architecture
// string, content-based MLP attention, and a one-layer LSTM character
// decoder.

#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "deeplas/arch.hpp"
#include "deeplas/layers.hpp"
#include "deeplas/params.hpp"

namespace deeplas {

// <sos> = 0, <eos> = 1, then one token per configured character.
class Vocabulary {
 public:
  static constexpr std::int64_t kSos = 0;
  static constexpr std::int64_t kEos = 1;

  Vocabulary() = default;
  // Each byte of `chars` becomes a token; duplicates and control bytes are
  // rejected.
  static Vocabulary from_chars(std::string_view chars);

  std::int64_t size() const { return static_cast<std::int64_t>(tokens_.size()); }
  const std::string& token(std::int64_t id) const { return tokens_.at(id); }
  const std::string& chars() const { return chars_; }
  // Character ids followed by <eos>.
  std::vector<std::int64_t> encode(std::string_view text) const;
  // Stops at <eos>, skips <sos>.
  std::string decode(std::span<const std::int64_t> ids) const;

 private:
  std::vector<std::string> tokens_;
  std::string chars_;
  std::int64_t index_[256] = {};
};

struct ModelConfig {
  std::string arch = "(L + P/2 + B + R) x 2 + L";
  arch::InputSpec input;
  std::int64_t hidden = 256;  // encoder LSTM units per direction
  std::int64_t channels = 32;
  std::int64_t decoder_hidden = 256;
  bool baseline_subsample = false;
  std::string vocab = "abcdefghij ";

  arch::ElaborateOptions elaborate_options() const;
};

template <typename T>
struct EncoderOutput {
  Tensor<T> h;  // [B, U, E]
  std::vector<std::int64_t> lengths;
};

template <typename T>
struct AttentionCache {
  Tensor<T> h;      // [B, U, E]
  Tensor<T> hproj;  // h W_h + b, [B, U, A]
  std::vector<std::uint8_t> valid;  // [B * U]
};

template <typename T>
struct DecoderState {
  Tensor<T> h, c;     // decoder LSTM state [B, Hd]
  Tensor<T> context;  // previous attention context [B, E]
};

template <typename T>
struct TokenScores {
  Tensor<T> log_probs;  // picked target log-probs [S, B]
  std::vector<std::uint8_t> valid;  // [S * B]
  std::int64_t count = 0;           // valid target tokens
};

template <typename T>
class LasModel {
 public:
  LasModel(const ModelConfig& config, std::uint64_t seed);
  LasModel(const LasModel&) = delete;
  LasModel& operator=(const LasModel&) = delete;

  const ModelConfig& config() const { return config_; }
  const Vocabulary& vocab() const { return vocab_; }
  const arch::ArchGraph& graph() const { return graph_; }
  ParamStore<T>& params() { return params_; }
  const ParamStore<T>& params() const { return params_; }
  std::int64_t encoder_dim() const { return graph_.output.width(); }

  // features [B, T, D] with per-utterance frame counts.
  EncoderOutput<T> listen(const Tensor<T>& features,
                          const std::vector<std::int64_t>& lengths, Mode mode);

  AttentionCache<T> prepare_attention(const EncoderOutput<T>& enc) const;
  // Returns (context [B, E], weights [B, U]).
  std::pair<Tensor<T>, Tensor<T>> attend(const Tensor<T>& s,
                                         const AttentionCache<T>& cache) const;

  DecoderState<T> initial_state(std::int64_t batch) const;
  // One decoder step on the previous tokens; returns the new state and the
  // next-token log-probabilities [B, V].
  std::pair<DecoderState<T>, Tensor<T>> decode_step(
      std::span<const std::int64_t> prev_tokens, const DecoderState<T>& state,
      const AttentionCache<T>& cache) const;

  // Teacher-forced scores; every target sequence ends with <eos>.
  TokenScores<T> score(const EncoderOutput<T>& enc,
                       const std::vector<std::vector<std::int64_t>>& targets) const;
  // Mean cross-entropy over valid target tokens.
  Tensor<T> loss(const Tensor<T>& features,
                 const std::vector<std::int64_t>& lengths,
                 const std::vector<std::vector<std::int64_t>>& targets,
                 Mode mode);
  // log P(y | x) per utterance.
  std::vector<double> sequence_log_probs(
      const Tensor<T>& features, const std::vector<std::int64_t>& lengths,
      const std::vector<std::vector<std::int64_t>>& targets, Mode mode);

 private:
  ModelConfig config_;
  Vocabulary vocab_;
  arch::ArchGraph graph_;
  ParamStore<T> params_;
  std::vector<LayerPtr<T>> encoder_;
  ParamRef embed_, att_ws_, att_wh_, att_b_, att_v_, out_w_, out_b_;
  std::unique_ptr<LstmRunner<T>> dec_;
};

// Encoder layers for an elaborated graph, parameters named "<prefix>.<i>...".
template <typename T>
std::vector<LayerPtr<T>> build_encoder(const arch::ArchGraph& graph,
                                       ParamStore<T>& store,
                                       const std::string& prefix);

}  // namespace deeplas
