// Copyright 2026 The deeplas Authors.
// SPDX-License-Identifier: Apache-2.0

#include "deeplas/decode.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

#include "deeplas/batch.hpp"
#include "deeplas/metrics.hpp"

namespace deeplas {

namespace {

double rank_score(double log_prob, std::size_t len, bool normalize) {
  return normalize && len > 0 ? log_prob / static_cast<double>(len) : log_prob;
}

struct Ranked {
  double score;
  const std::vector<std::int64_t>* tokens;
};

bool better(const Ranked& a, const Ranked& b) {
  if (a.score != b.score) return a.score > b.score;
  return *a.tokens < *b.tokens;
}

}  // namespace

Hypothesis greedy_decode(const Scorer& scorer, std::int64_t max_len) {
  if (max_len < 1) throw std::invalid_argument("greedy: max_len < 1");
  Hypothesis h;
  std::any state = scorer.initial_state();
  std::int64_t prev = scorer.sos();
  for (std::int64_t t = 0; t < max_len; ++t) {
    std::any next;
    const auto logp = scorer.step(state, prev, next);
    // Compare the accumulated totals so rounding matches beam search.
    std::int64_t best = 0;
    double best_total = h.log_prob + logp[0];
    for (std::size_t v = 1; v < logp.size(); ++v) {
      const double total = h.log_prob + logp[v];
      if (total > best_total) best_total = total, best = static_cast<std::int64_t>(v);
    }
    h.tokens.push_back(best);
    h.log_prob = best_total;
    state = std::move(next);
    prev = best;
    if (best == scorer.eos()) {
      h.finished = true;
      break;
    }
  }
  return h;
}

Hypothesis beam_decode(const Scorer& scorer, const BeamOptions& o) {
  if (o.width < 1) throw std::invalid_argument("beam: width < 1");
  if (o.max_len < 1) throw std::invalid_argument("beam: max_len < 1");
  struct Live {
    Hypothesis hyp;
    std::any state;
  };
  struct Candidate {
    std::size_t parent;
    std::vector<std::int64_t> tokens;
    double log_prob;
    double score;
  };
  const std::int64_t V = scorer.vocab_size();
  std::vector<Live> live(1);
  live[0].state = scorer.initial_state();
  std::vector<Hypothesis> finished;

  auto best_of = [&](const std::vector<Hypothesis>& hs) {
    std::size_t b = 0;
    for (std::size_t i = 1; i < hs.size(); ++i) {
      const Ranked x{rank_score(hs[i].log_prob, hs[i].tokens.size(), o.length_normalize),
                     &hs[i].tokens};
      const Ranked y{rank_score(hs[b].log_prob, hs[b].tokens.size(), o.length_normalize),
                     &hs[b].tokens};
      if (better(x, y)) b = i;
    }
    return b;
  };

  for (std::int64_t t = 0; t < o.max_len && !live.empty(); ++t) {
    std::vector<std::any> next_states(live.size());
    std::vector<Candidate> cands;
    cands.reserve(live.size() * V);
    for (std::size_t i = 0; i < live.size(); ++i) {
      const auto& h = live[i].hyp;
      const std::int64_t prev = h.tokens.empty() ? scorer.sos() : h.tokens.back();
      const auto logp = scorer.step(live[i].state, prev, next_states[i]);
      for (std::int64_t v = 0; v < V; ++v) {
        Candidate c{i, h.tokens, h.log_prob + logp[v], 0.0};
        c.tokens.push_back(v);
        c.score = rank_score(c.log_prob, c.tokens.size(), o.length_normalize);
        cands.push_back(std::move(c));
      }
    }
    const std::size_t keep = std::min<std::size_t>(cands.size(), o.width);
    std::partial_sort(cands.begin(), cands.begin() + keep, cands.end(),
                      [](const Candidate& a, const Candidate& b) {
                        return better({a.score, &a.tokens}, {b.score, &b.tokens});
                      });
    std::vector<Live> next_live;
    for (std::size_t k = 0; k < keep; ++k) {
      Hypothesis h{std::move(cands[k].tokens), cands[k].log_prob, false};
      if (h.tokens.back() == scorer.eos()) {
        h.finished = true;
        finished.push_back(std::move(h));
      } else {
        next_live.push_back({std::move(h), next_states[cands[k].parent]});
      }
    }
    live = std::move(next_live);
    // Totals only fall as tokens append, so a finished hypothesis at least
    // as good as every live one cannot be beaten.
    if (!o.length_normalize && !finished.empty() && !live.empty()) {
      const double best_fin = finished[best_of(finished)].log_prob;
      double best_live = live[0].hyp.log_prob;
      for (const auto& l : live) best_live = std::max(best_live, l.hyp.log_prob);
      if (best_fin >= best_live) break;
    }
  }
  for (auto& l : live) finished.push_back(std::move(l.hyp));
  return finished[best_of(finished)];
}

template <typename T>
LasScorer<T>::LasScorer(LasModel<T>& model, const Utterance& utt)
    : model_(&model) {
  NoTapeScope<T> no_tape;
  std::vector<T> v(utt.features.begin(), utt.features.end());
  Tensor<T> x(Shape{1, utt.frames, utt.dims}, std::move(v));
  cache_ = model.prepare_attention(model.listen(x, {utt.frames}, Mode::kInfer));
}

template <typename T>
std::int64_t LasScorer<T>::vocab_size() const {
  return model_->vocab().size();
}

template <typename T>
std::any LasScorer<T>::initial_state() const {
  return model_->initial_state(1);
}

template <typename T>
std::vector<double> LasScorer<T>::step(const std::any& state, std::int64_t prev,
                                       std::any& next_state) const {
  NoTapeScope<T> no_tape;
  const auto& s = std::any_cast<const DecoderState<T>&>(state);
  const std::int64_t tok[1] = {prev};
  auto [ns, logp] = model_->decode_step(tok, s, cache_);
  next_state = std::move(ns);
  return std::vector<double>(logp.data().begin(), logp.data().end());
}

template <typename T>
std::vector<Hypothesis> greedy_decode_batch(LasModel<T>& model,
                                            const Tensor<T>& features,
                                            const std::vector<std::int64_t>& lengths,
                                            std::int64_t max_len) {
  if (max_len < 1) throw std::invalid_argument("greedy: max_len < 1");
  NoTapeScope<T> no_tape;
  const auto B = static_cast<std::int64_t>(lengths.size());
  const auto cache =
      model.prepare_attention(model.listen(features, lengths, Mode::kInfer));
  DecoderState<T> state = model.initial_state(B);
  std::vector<Hypothesis> out(B);
  std::vector<std::int64_t> prev(B, Vocabulary::kSos);
  const std::int64_t V = model.vocab().size();
  std::int64_t open = B;
  for (std::int64_t t = 0; t < max_len && open > 0; ++t) {
    auto [ns, logp] = model.decode_step(prev, state, cache);
    state = std::move(ns);
    const auto lp = logp.data();
    for (std::int64_t b = 0; b < B; ++b) {
      Hypothesis& h = out[b];
      if (h.finished) continue;
      std::int64_t best = 0;
      double best_total = h.log_prob + static_cast<double>(lp[b * V]);
      for (std::int64_t v = 1; v < V; ++v) {
        const double total = h.log_prob + static_cast<double>(lp[b * V + v]);
        if (total > best_total) best_total = total, best = v;
      }
      h.tokens.push_back(best);
      h.log_prob = best_total;
      prev[b] = best;
      if (best == Vocabulary::kEos) {
        h.finished = true;
        --open;
      }
    }
  }
  return out;
}

template <typename T>
std::vector<std::string> decode_dataset(LasModel<T>& model, const Dataset& data,
                                        const EvalOptions& o) {
  ParamStore<T>& store = model.params();
  store.clear_overrides();
  std::vector<std::string> hyps_out(data.size());
  const auto& vocab = model.vocab();

  if (o.beam > 1) {
    for (std::size_t i = 0; i < data.size(); ++i) {
      LasScorer<T> scorer(model, data[i]);
      BeamOptions bo;
      bo.width = o.beam;
      bo.length_normalize = o.length_normalize;
      bo.max_len = o.max_len > 0 ? o.max_len : data[i].frames + 1;
      hyps_out[i] = vocab.decode(beam_decode(scorer, bo).tokens);
    }
  } else {
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return data[a].frames < data[b].frames;
    });
    const auto bs = static_cast<std::size_t>(std::max<std::int64_t>(1, o.batch_size));
    for (std::size_t i = 0; i < order.size(); i += bs) {
      const std::span<const std::size_t> idx(order.data() + i,
                                             std::min(bs, order.size() - i));
      const Batch<T> batch = make_batch<T>(data, idx);
      std::int64_t cap = o.max_len;
      if (cap <= 0)
        cap = *std::max_element(batch.lengths.begin(), batch.lengths.end()) + 1;
      const auto hyps = greedy_decode_batch(model, batch.features, batch.lengths, cap);
      for (std::size_t k = 0; k < idx.size(); ++k) {
        // Per-utterance cap so batching does not change the result.
        auto tokens = hyps[k].tokens;
        const std::int64_t own = o.max_len > 0 ? o.max_len : batch.lengths[k] + 1;
        if (static_cast<std::int64_t>(tokens.size()) > own) tokens.resize(own);
        hyps_out[idx[k]] = vocab.decode(tokens);
      }
    }
  }
  return hyps_out;
}

template <typename T>
EvalResult evaluate(LasModel<T>& model, const Dataset& data,
                    const EvalOptions& o) {
  if (data.empty()) throw std::invalid_argument("evaluate: empty dataset");
  EvalResult r;
  r.hypotheses = decode_dataset(model, data, o);
  ErrorCounter counter;
  for (std::size_t i = 0; i < data.size(); ++i)
    counter.add(data[i].transcript, r.hypotheses[i]);
  r.cer = counter.cer();
  r.wer = counter.word_total() > 0 ? counter.wer() : 0.0;
  return r;
}

#define DEEPLAS_INSTANTIATE(T)                                                 \
  template class LasScorer<T>;                                                 \
  template std::vector<Hypothesis> greedy_decode_batch(                        \
      LasModel<T>&, const Tensor<T>&, const std::vector<std::int64_t>&,        \
      std::int64_t);                                                           \
  template std::vector<std::string> decode_dataset(LasModel<T>&, const Dataset&, \
                                                  const EvalOptions&);         \
  template EvalResult evaluate(LasModel<T>&, const Dataset&, const EvalOptions&);

DEEPLAS_INSTANTIATE(float)
DEEPLAS_INSTANTIATE(double)
#undef DEEPLAS_INSTANTIATE

}  // namespace deeplas
