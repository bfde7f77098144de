// Copyright 2026 The deeplas Authors.
// SPDX-License-Identifier: Apache-2.0

// Reference decoders, scorers and edit distances shared by the decode tests
// and the acceptance run.

#pragma once

#include <algorithm>
#include <any>
#include <cmath>
#include <functional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "deeplas/decode.hpp"
#include "deeplas/params.hpp"

namespace deeplas::testing {

// Plain exponential recursion, no table.
inline std::int64_t lev_recursive(std::string_view a, std::string_view b) {
  if (a.empty()) return static_cast<std::int64_t>(b.size());
  if (b.empty()) return static_cast<std::int64_t>(a.size());
  const std::int64_t cost = a.back() == b.back() ? 0 : 1;
  return std::min({lev_recursive(a.substr(0, a.size() - 1), b) + 1,
                   lev_recursive(a, b.substr(0, b.size() - 1)) + 1,
                   lev_recursive(a.substr(0, a.size() - 1),
                                 b.substr(0, b.size() - 1)) + cost});
}

// The same recursion with memoization, for the exhaustive sweep.
class MemoLev {
 public:
  std::int64_t operator()(const std::string& a, const std::string& b) {
    a_ = &a;
    b_ = &b;
    memo_.assign((a.size() + 1) * (b.size() + 1), -1);
    return go(a.size(), b.size());
  }

 private:
  std::int64_t go(std::size_t i, std::size_t j) {
    if (i == 0) return static_cast<std::int64_t>(j);
    if (j == 0) return static_cast<std::int64_t>(i);
    auto& slot = memo_[i * (b_->size() + 1) + j];
    if (slot >= 0) return slot;
    const std::int64_t cost = (*a_)[i - 1] == (*b_)[j - 1] ? 0 : 1;
    return slot = std::min({go(i - 1, j) + 1, go(i, j - 1) + 1, go(i - 1, j - 1) + cost});
  }
  const std::string* a_ = nullptr;
  const std::string* b_ = nullptr;
  std::vector<std::int64_t> memo_;
};

inline std::vector<std::string> all_strings(const std::string& alphabet, std::size_t max_len) {
  std::vector<std::string> out{""};
  std::size_t begin = 0;
  for (std::size_t len = 1; len <= max_len; ++len) {
    const std::size_t end = out.size();
    for (std::size_t i = begin; i < end; ++i)
      for (char c : alphabet) out.push_back(out[i] + c);
    begin = end;
  }
  return out;
}

// Deterministic random next-token distributions keyed by the full prefix.
class RandomScorer : public Scorer {
 public:
  RandomScorer(std::int64_t vocab, std::uint64_t seed, double peak = 2.0)
      : vocab_(vocab), seed_(seed), peak_(peak) {}
  std::int64_t vocab_size() const override { return vocab_; }
  std::any initial_state() const override { return std::vector<std::int64_t>{}; }
  std::vector<double> step(const std::any& state, std::int64_t prev,
                           std::any& next) const override {
    auto prefix = std::any_cast<const std::vector<std::int64_t>&>(state);
    prefix.push_back(prev);
    std::uint64_t h = seed_;
    for (auto t : prefix) h = derive_seed(h, static_cast<std::uint64_t>(t));
    std::mt19937_64 rng(h);
    std::normal_distribution<double> n(0.0, peak_);
    std::vector<double> z(vocab_);
    double mx = -1e300;
    for (auto& v : z) mx = std::max(mx, v = n(rng));
    double s = 0;
    for (double v : z) s += std::exp(v - mx);
    for (auto& v : z) v = v - mx - std::log(s);
    next = prefix;
    return z;
  }

 private:
  std::int64_t vocab_;
  std::uint64_t seed_;
  double peak_;
};

class UniformScorer : public Scorer {
 public:
  explicit UniformScorer(std::int64_t v) : v_(v) {}
  std::int64_t vocab_size() const override { return v_; }
  std::any initial_state() const override { return 0; }
  std::vector<double> step(const std::any&, std::int64_t, std::any& next) const override {
    next = 0;
    return std::vector<double>(v_, -std::log(static_cast<double>(v_)));
  }

 private:
  std::int64_t v_;
};

// Exhaustive search: sequences ending in <eos> within max_len, plus every
// <eos>-free sequence of exactly max_len; best total, then lexicographic.
inline Hypothesis brute_force(const Scorer& s, std::int64_t max_len) {
  Hypothesis best;
  bool have = false;
  std::function<void(std::vector<std::int64_t>&, std::any, double)> rec =
      [&](std::vector<std::int64_t>& toks, std::any state, double lp) {
        const bool done = !toks.empty() && toks.back() == s.eos();
        if (done || static_cast<std::int64_t>(toks.size()) == max_len) {
          if (!have || lp > best.log_prob ||
              (lp == best.log_prob && toks < best.tokens)) {
            best = {toks, lp, done};
            have = true;
          }
          return;
        }
        std::any next;
        const auto logp = s.step(state, toks.empty() ? s.sos() : toks.back(), next);
        for (std::int64_t v = 0; v < s.vocab_size(); ++v) {
          toks.push_back(v);
          rec(toks, next, lp + logp[v]);
          toks.pop_back();
        }
      };
  std::vector<std::int64_t> toks;
  rec(toks, s.initial_state(), 0.0);
  return best;
}

inline ModelConfig micro_config(const std::string& vocab = "ab") {
  ModelConfig c;
  c.arch = "L + P/2 + L";
  c.input = {2, 1};
  c.hidden = 3;
  c.channels = 2;
  c.decoder_hidden = 3;
  c.vocab = vocab;
  return c;
}

inline Utterance random_utt(std::mt19937_64& rng, std::int64_t frames) {
  std::normal_distribution<float> n(0, 1);
  Utterance u;
  u.id = "x";
  u.speaker = "s";
  u.frames = frames;
  u.dims = 2;
  for (std::int64_t i = 0; i < frames * 2; ++i) u.features.push_back(n(rng));
  return u;
}

// Spread the micro model's parameters so its distributions are peaked.
inline void sharpen(LasModel<float>& m, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> d(-1.5f, 1.5f);
  for (std::size_t i = 0; i < m.params().size(); ++i)
    for (auto& v : m.params().value(i).mutable_data()) v += d(rng);
}

}  // namespace deeplas::testing
