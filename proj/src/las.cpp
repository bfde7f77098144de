// Copyright 2026 The deeplas Authors.
// SPDX-License-Identifier: Apache-2.0

#include "deeplas/las.hpp"

#include <stdexcept>

namespace deeplas {

Vocabulary Vocabulary::from_chars(std::string_view chars) {
  if (chars.empty()) throw std::invalid_argument("vocabulary: no characters");
  Vocabulary v;
  v.tokens_ = {"<sos>", "<eos>"};
  for (auto& i : v.index_) i = -1;
  for (char ch : chars) {
    const auto byte = static_cast<unsigned char>(ch);
    if (byte < 0x20 || byte == 0x7f) {
      throw std::invalid_argument("vocabulary: control character " +
                                  std::to_string(byte));
    }
    if (v.index_[byte] >= 0) {
      throw std::invalid_argument(std::string("vocabulary: duplicate '") + ch +
                                  "'");
    }
    v.index_[byte] = v.size();
    v.tokens_.emplace_back(1, ch);
  }
  v.chars_ = std::string(chars);
  return v;
}

std::vector<std::int64_t> Vocabulary::encode(std::string_view text) const {
  std::vector<std::int64_t> ids;
  ids.reserve(text.size() + 1);
  for (std::size_t i = 0; i < text.size(); ++i) {
    const std::int64_t id = index_[static_cast<unsigned char>(text[i])];
    if (id < 0) {
      throw std::invalid_argument("vocabulary: character '" +
                                  std::string(1, text[i]) + "' at position " +
                                  std::to_string(i) + " is not in the vocabulary");
    }
    ids.push_back(id);
  }
  ids.push_back(kEos);
  return ids;
}

std::string Vocabulary::decode(std::span<const std::int64_t> ids) const {
  std::string out;
  for (auto id : ids) {
    if (id == kEos) break;
    if (id == kSos) continue;
    out += token(id);
  }
  return out;
}

arch::ElaborateOptions ModelConfig::elaborate_options() const {
  arch::ElaborateOptions o;
  o.lstm_hidden = hidden;
  o.conv_channels = channels;
  o.baseline_subsample = baseline_subsample;
  return o;
}

template <typename T>
std::vector<LayerPtr<T>> build_encoder(const arch::ArchGraph& graph,
                                       ParamStore<T>& store,
                                       const std::string& prefix) {
  using arch::LayerKind;
  std::vector<LayerPtr<T>> layers;
  for (std::size_t i = 0; i < graph.layers.size(); ++i) {
    const auto& d = graph.layers[i];
    const std::string name = prefix + "." + std::to_string(i) + "." +
                             arch::layer_kind_name(d.kind);
    switch (d.kind) {
      case LayerKind::kView:
        layers.push_back(std::make_unique<Unflatten<T>>(d.out.channels));
        break;
      case LayerKind::kFlatten:
        layers.push_back(std::make_unique<Flatten<T>>());
        break;
      case LayerKind::kBlstm:
        layers.push_back(
            std::make_unique<Blstm<T>>(store, name, d.in.channels, d.units));
        break;
      case LayerKind::kBatchNorm:
        layers.push_back(
            std::make_unique<BatchNorm<T>>(store, name, d.in.channels));
        break;
      case LayerKind::kRelu:
        layers.push_back(std::make_unique<Relu<T>>());
        break;
      case LayerKind::kConv:
        layers.push_back(std::make_unique<Conv<T>>(
            store, name, d.in.channels, d.out.channels, d.kf, d.kt, d.stride));
        break;
      case LayerKind::kProjSubsample:
        layers.push_back(
            std::make_unique<ProjectedSubsample<T>>(store, name, d.in.channels));
        break;
      case LayerKind::kSkipSubsample:
        layers.push_back(std::make_unique<SkipSubsample<T>>());
        break;
      case LayerKind::kResCnn:
        layers.push_back(make_res_cnn<T>(store, name, d.units, d.kf));
        break;
      case LayerKind::kResLstm:
        layers.push_back(make_res_lstm<T>(store, name, d.in.channels));
        break;
      case LayerKind::kConvLstm:
        layers.push_back(std::make_unique<BiConvLstm<T>>(
            store, name, d.in.channels, d.units, d.kf, d.kt));
        break;
      case LayerKind::kResConvLstm:
        layers.push_back(
            make_res_convlstm<T>(store, name, d.units, d.kf, d.kt));
        break;
    }
  }
  return layers;
}

template <typename T>
LasModel<T>::LasModel(const ModelConfig& config, std::uint64_t seed)
    : config_(config),
      vocab_(Vocabulary::from_chars(config.vocab)),
      graph_(arch::elaborate(arch::parse(config.arch), config.input,
                             config.elaborate_options())),
      params_(seed) {
  if (config.decoder_hidden < 1) {
    throw std::invalid_argument("decoder hidden size must be positive");
  }
  encoder_ = build_encoder(graph_, params_, "enc");
  const std::int64_t Hd = config.decoder_hidden, E = encoder_dim(),
                     V = vocab_.size(), A = Hd;
  const Uniform init{-0.1, 0.1};
  embed_ = params_.add("dec.embed", {V, Hd}, ParamKind::kEmbedding, init);
  dec_ = std::make_unique<LstmRunner<T>>(params_, "dec.lstm", Hd + E, Hd);
  att_ws_ = params_.add("att.w_s", {Hd, A}, ParamKind::kWeight, init);
  att_wh_ = params_.add("att.w_h", {E, A}, ParamKind::kWeight, init);
  att_b_ = params_.add("att.b", {A}, ParamKind::kBias, Zeros{});
  att_v_ = params_.add("att.v", {A, 1}, ParamKind::kWeight, init);
  out_w_ = params_.add("out.w", {Hd + E, V}, ParamKind::kWeight, init);
  out_b_ = params_.add("out.b", {V}, ParamKind::kBias, Zeros{});
}

template <typename T>
EncoderOutput<T> LasModel<T>::listen(const Tensor<T>& features,
                                     const std::vector<std::int64_t>& lengths,
                                     Mode mode) {
  SeqBatch<T> in{features, lengths, Layout::kFrames};
  in.validate();
  if (features.dim(2) != config_.input.dims) {
    throw ShapeError("listen: features have " +
                     std::to_string(features.dim(2)) + " dims, model expects " +
                     std::to_string(config_.input.dims));
  }
  for (std::size_t b = 0; b < lengths.size(); ++b) {
    if (arch::reduced_length(graph_, lengths[b]) < 1) {
      throw std::invalid_argument(
          "listen: utterance " + std::to_string(b) + " has " +
          std::to_string(lengths[b]) +
          " frames, fewer than the time reduction factor " +
          std::to_string(graph_.time_reduction));
    }
  }
  SeqBatch<T> out = run_layers(encoder_, zero_pads(in), params_, mode);
  return {out.x, out.lengths};
}

template <typename T>
AttentionCache<T> LasModel<T>::prepare_attention(
    const EncoderOutput<T>& enc) const {
  const std::int64_t B = enc.h.dim(0), U = enc.h.dim(1);
  AttentionCache<T> cache;
  cache.h = enc.h;
  cache.hproj = add(matmul(enc.h, params_.use(att_wh_)), params_.use(att_b_));
  cache.valid.assign(B * U, 0);
  for (std::int64_t b = 0; b < B; ++b) {
    if (enc.lengths.at(b) < 1) {
      throw std::invalid_argument("attention: utterance " + std::to_string(b) +
                                  " has no encoder frames");
    }
    for (std::int64_t u = 0; u < std::min(U, enc.lengths[b]); ++u) {
      cache.valid[b * U + u] = 1;
    }
  }
  return cache;
}

template <typename T>
std::pair<Tensor<T>, Tensor<T>> LasModel<T>::attend(
    const Tensor<T>& s, const AttentionCache<T>& cache) const {
  const std::int64_t B = cache.h.dim(0), U = cache.h.dim(1),
                     E = cache.h.dim(2), A = cache.hproj.dim(2);
  Tensor<T> sproj = reshape(matmul(s, params_.use(att_ws_)), {B, 1, A});
  Tensor<T> energy = matmul(tanh(add(cache.hproj, sproj)), params_.use(att_v_));
  Tensor<T> alpha = softmax(reshape(energy, {B, U}), 1, cache.valid);
  Tensor<T> context =
      sum(mul(reshape(alpha, {B, U, 1}), cache.h), std::vector<std::size_t>{1});
  return {reshape(context, {B, E}), alpha};
}

template <typename T>
DecoderState<T> LasModel<T>::initial_state(std::int64_t batch) const {
  const std::int64_t Hd = config_.decoder_hidden;
  return {Tensor<T>::zeros({batch, Hd}), Tensor<T>::zeros({batch, Hd}),
          Tensor<T>::zeros({batch, encoder_dim()})};
}

template <typename T>
std::pair<DecoderState<T>, Tensor<T>> LasModel<T>::decode_step(
    std::span<const std::int64_t> prev_tokens, const DecoderState<T>& state,
    const AttentionCache<T>& cache) const {
  Tensor<T> emb = gather_rows(params_.use(embed_), prev_tokens);
  Tensor<T> x = concat<T>({emb, state.context}, 1);
  auto [h, c] = lstm_step(x, state.h, state.c, dec_->weights(params_));
  auto [context, alpha] = attend(h, cache);
  Tensor<T> logits = add(matmul(concat<T>({h, context}, 1), params_.use(out_w_)),
                         params_.use(out_b_));
  return {DecoderState<T>{h, c, context}, log_softmax(logits)};
}

template <typename T>
TokenScores<T> LasModel<T>::score(
    const EncoderOutput<T>& enc,
    const std::vector<std::vector<std::int64_t>>& targets) const {
  const std::int64_t B = enc.h.dim(0);
  if (static_cast<std::int64_t>(targets.size()) != B) {
    throw ShapeError("score: " + std::to_string(targets.size()) +
                     " targets for batch of " + std::to_string(B));
  }
  std::size_t S = 0;
  for (const auto& y : targets) {
    if (y.empty() || y.back() != Vocabulary::kEos) {
      throw std::invalid_argument("score: target must end with <eos>");
    }
    for (auto id : y) {
      if (id < 0 || id >= vocab_.size()) {
        throw std::invalid_argument("score: token " + std::to_string(id) +
                                    " outside the vocabulary");
      }
    }
    S = std::max(S, y.size());
  }
  const AttentionCache<T> cache = prepare_attention(enc);
  DecoderState<T> state = initial_state(B);
  TokenScores<T> out;
  out.valid.assign(S * B, 0);
  std::vector<Tensor<T>> picks;
  std::vector<std::int64_t> prev(B, Vocabulary::kSos), next(B);
  for (std::size_t i = 0; i < S; ++i) {
    for (std::int64_t b = 0; b < B; ++b) {
      const bool live = i < targets[b].size();
      next[b] = live ? targets[b][i] : Vocabulary::kEos;
      out.valid[i * B + b] = live;
      out.count += live;
    }
    auto [s, logp] = decode_step(prev, state, cache);
    state = std::move(s);
    picks.push_back(pick(logp, std::span<const std::int64_t>(next)));
    prev = next;
  }
  out.log_probs = stack(picks, 0);
  return out;
}

template <typename T>
Tensor<T> LasModel<T>::loss(
    const Tensor<T>& features, const std::vector<std::int64_t>& lengths,
    const std::vector<std::vector<std::int64_t>>& targets, Mode mode) {
  const TokenScores<T> s = score(listen(features, lengths, mode), targets);
  std::vector<T> w(s.valid.size());
  for (std::size_t i = 0; i < w.size(); ++i) {
    w[i] = s.valid[i] ? T(-1) / static_cast<T>(s.count) : T(0);
  }
  return sum(mul(s.log_probs, Tensor<T>(s.log_probs.shape(), std::move(w))));
}

template <typename T>
std::vector<double> LasModel<T>::sequence_log_probs(
    const Tensor<T>& features, const std::vector<std::int64_t>& lengths,
    const std::vector<std::vector<std::int64_t>>& targets, Mode mode) {
  const TokenScores<T> s = score(listen(features, lengths, mode), targets);
  const std::int64_t B = static_cast<std::int64_t>(targets.size());
  std::vector<double> out(B, 0.0);
  const auto lp = s.log_probs.data();
  for (std::size_t k = 0; k < s.valid.size(); ++k) {
    if (s.valid[k]) out[k % B] += lp[k];
  }
  return out;
}

template class LasModel<float>;
template class LasModel<double>;
template std::vector<LayerPtr<float>> build_encoder(const arch::ArchGraph&,
                                                    ParamStore<float>&,
                                                    const std::string&);
template std::vector<LayerPtr<double>> build_encoder(const arch::ArchGraph&,
                                                     ParamStore<double>&,
                                                     const std::string&);

}  // namespace deeplas
