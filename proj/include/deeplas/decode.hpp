// Copyright 2026 The deeplas Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <any>
#include <cstdint>
#include <string>
#include <vector>

#include "deeplas/data.hpp"
#include "deeplas/las.hpp"

namespace deeplas {

// Next-token distributions for a single utterance. States are opaque so
// the search code also runs over toy scorers in tests.
class Scorer {
 public:
  virtual ~Scorer() = default;
  virtual std::int64_t vocab_size() const = 0;
  virtual std::int64_t sos() const { return Vocabulary::kSos; }
  virtual std::int64_t eos() const { return Vocabulary::kEos; }
  virtual std::any initial_state() const = 0;
  // Feeds `prev` and returns log-probabilities of the next token.
  virtual std::vector<double> step(const std::any& state, std::int64_t prev,
                                   std::any& next_state) const = 0;
};

struct Hypothesis {
  std::vector<std::int64_t> tokens;  // ends with <eos> when finished
  double log_prob = 0.0;
  bool finished = false;
};

// Argmax per step, ties to the lowest id, until <eos> or max_len tokens.
Hypothesis greedy_decode(const Scorer& scorer, std::int64_t max_len);

struct BeamOptions {
  std::int64_t width = 4;
  std::int64_t max_len = 100;
  // Rank by log-prob / length instead of the total.
  bool length_normalize = false;
};

// Hypotheses still live at max_len are closed unfinished and compete with
// the finished ones. Ties go to the lexicographically smaller token ids.
Hypothesis beam_decode(const Scorer& scorer, const BeamOptions& options);

template <typename T>
class LasScorer : public Scorer {
 public:
  // Encodes one utterance [T, D] in inference mode.
  LasScorer(LasModel<T>& model, const Utterance& utt);
  std::int64_t vocab_size() const override;
  std::any initial_state() const override;
  std::vector<double> step(const std::any& state, std::int64_t prev,
                           std::any& next_state) const override;

 private:
  LasModel<T>* model_;
  AttentionCache<T> cache_;
};

// Greedy decoding of a whole batch at once; identical to per-utterance
// greedy_decode up to float rounding.
template <typename T>
std::vector<Hypothesis> greedy_decode_batch(LasModel<T>& model,
                                            const Tensor<T>& features,
                                            const std::vector<std::int64_t>& lengths,
                                            std::int64_t max_len);

struct EvalOptions {
  std::int64_t batch_size = 32;
  std::int64_t beam = 0;  // 0 or 1: greedy
  bool length_normalize = false;
  // Cap on emitted tokens; 0 uses the utterance frame count + 1.
  std::int64_t max_len = 0;
};

struct EvalResult {
  double cer = 0.0;
  double wer = 0.0;
  std::vector<std::string> hypotheses;  // per utterance, dataset order
};

// Clean parameters in inference mode. Transcripts are not read.
template <typename T>
std::vector<std::string> decode_dataset(LasModel<T>& model, const Dataset& data,
                                        const EvalOptions& options = {});

// decode_dataset scored against the transcripts.
template <typename T>
EvalResult evaluate(LasModel<T>& model, const Dataset& data,
                    const EvalOptions& options = {});

}  // namespace deeplas
