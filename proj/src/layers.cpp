// Copyright 2026 The deeplas Authors.
// SPDX-License-Identifier: Apache-2.0

#include "deeplas/layers.hpp"

#include <stdexcept>

namespace deeplas {
namespace {

const Uniform kWeightInit{-0.1, 0.1};
const TruncatedNormal kFilterInit{0.0, 0.1};

template <typename T>
Tensor<T> step_mask(const std::vector<std::int64_t>& lengths, std::int64_t t) {
  std::vector<T> m(lengths.size());
  for (std::size_t b = 0; b < lengths.size(); ++b) m[b] = lengths[b] > t;
  return Tensor<T>({static_cast<std::int64_t>(lengths.size()), 1},
                   std::move(m));
}

bool all_longer(const std::vector<std::int64_t>& lengths, std::int64_t t) {
  for (auto len : lengths) {
    if (len <= t) return false;
  }
  return true;
}

template <typename T>
Tensor<T> channel_bias(const Tensor<T>& b) {
  return reshape(b, {b.numel(), 1, 1});
}

std::vector<std::int64_t> halved(const std::vector<std::int64_t>& lengths,
                                 const char* who) {
  std::vector<std::int64_t> out(lengths.size());
  for (std::size_t i = 0; i < lengths.size(); ++i) {
    out[i] = lengths[i] / 2;
    if (out[i] < 1) {
      throw std::invalid_argument(std::string(who) +
                                  ": subsampling below length 1 (utterance " +
                                  std::to_string(i) + " has " +
                                  std::to_string(lengths[i]) + " frames)");
    }
  }
  return out;
}

void require_layout(Layout actual, Layout wanted, const char* who) {
  if (actual != wanted) {
    throw ShapeError(std::string(who) + ": expected " +
                     (wanted == Layout::kFrames ? "[batch, time, dims]"
                                                : "[batch, channels, freq, time]") +
                     " input");
  }
}

}  // namespace

template <typename T>
bool SeqBatch<T>::padded() const {
  return !all_longer(lengths, time() - 1);
}

template <typename T>
void SeqBatch<T>::validate() const {
  const std::size_t want = layout == Layout::kFrames ? 3 : 4;
  if (!x.defined() || x.rank() != want) {
    throw ShapeError("sequence batch: rank " +
                     std::to_string(x.defined() ? x.rank() : 0) +
                     " does not match layout");
  }
  if (static_cast<std::int64_t>(lengths.size()) != batch()) {
    throw ShapeError("sequence batch: " + std::to_string(lengths.size()) +
                     " lengths for batch of " + std::to_string(batch()));
  }
  for (auto len : lengths) {
    if (len < 1 || len > time()) {
      throw ShapeError("sequence batch: length " + std::to_string(len) +
                       " outside [1, " + std::to_string(time()) + "]");
    }
  }
}

template <typename T>
Tensor<T> time_mask(const SeqBatch<T>& s) {
  const std::int64_t B = s.batch(), Tn = s.time();
  std::vector<T> m(B * Tn);
  for (std::int64_t b = 0; b < B; ++b) {
    for (std::int64_t t = 0; t < Tn; ++t) m[b * Tn + t] = t < s.lengths[b];
  }
  Shape shape = s.layout == Layout::kFrames ? Shape{B, Tn, 1}
                                            : Shape{B, 1, 1, Tn};
  return Tensor<T>(std::move(shape), std::move(m));
}

template <typename T>
std::vector<std::uint8_t> element_mask(const SeqBatch<T>& s) {
  std::vector<std::uint8_t> m(s.x.numel());
  const std::int64_t B = s.batch(), Tn = s.time();
  if (s.layout == Layout::kFrames) {
    const std::int64_t D = s.x.dim(2);
    for (std::int64_t b = 0; b < B; ++b) {
      for (std::int64_t t = 0; t < Tn; ++t) {
        const std::uint8_t v = t < s.lengths[b];
        for (std::int64_t d = 0; d < D; ++d) m[(b * Tn + t) * D + d] = v;
      }
    }
  } else {
    const std::int64_t rows = s.x.dim(1) * s.x.dim(2);
    for (std::int64_t b = 0; b < B; ++b) {
      for (std::int64_t r = 0; r < rows; ++r) {
        for (std::int64_t t = 0; t < Tn; ++t) {
          m[(b * rows + r) * Tn + t] = t < s.lengths[b];
        }
      }
    }
  }
  return m;
}

template <typename T>
SeqBatch<T> zero_pads(SeqBatch<T> s) {
  if (s.padded()) s.x = mul(s.x, time_mask(s));
  return s;
}

template <typename T>
SeqBatch<T> to_frames(const SeqBatch<T>& s) {
  if (s.layout == Layout::kFrames) return s;
  const std::int64_t B = s.batch(), Tn = s.time();
  Tensor<T> x = permute(s.x, {0, 3, 1, 2});
  return {reshape(x, {B, Tn, s.frame_dim()}), s.lengths, Layout::kFrames};
}

template <typename T>
SeqBatch<T> to_spatial(const SeqBatch<T>& s, std::int64_t channels) {
  if (s.layout == Layout::kSpatial) return s;
  const std::int64_t B = s.batch(), Tn = s.time(), D = s.x.dim(2);
  if (channels < 1 || D % channels != 0) {
    throw ShapeError("to_spatial: " + std::to_string(D) +
                     " dims do not split into " + std::to_string(channels) +
                     " channels");
  }
  Tensor<T> x = reshape(s.x, {B, Tn, channels, D / channels});
  return {permute(x, {0, 2, 3, 1}), s.lengths, Layout::kSpatial};
}

// ---------------------------------------------------------------------------

template <typename T>
std::pair<Tensor<T>, Tensor<T>> lstm_step(const Tensor<T>& x,
                                          const Tensor<T>& h_prev,
                                          const Tensor<T>& c_prev,
                                          const LstmWeights<T>& w) {
  if (w.w_x.rank() != 2 || w.w_h.rank() != 2 || w.w_x.dim(1) != w.w_h.dim(1) ||
      w.w_h.dim(1) != 4 * w.w_h.dim(0) || w.b.numel() != w.w_h.dim(1)) {
    throw ShapeError("lstm_step: inconsistent weights " +
                     shape_str(w.w_x.shape()) + ", " +
                     shape_str(w.w_h.shape()) + ", " + shape_str(w.b.shape()));
  }
  Tensor<T> gates = add(add(matmul(x, w.w_x), matmul(h_prev, w.w_h)), w.b);
  return lstm_cell(gates, c_prev);
}

template <typename T>
std::pair<Tensor<T>, Tensor<T>> convlstm_step(const Tensor<T>& x,
                                              const Tensor<T>& h_prev,
                                              const Tensor<T>& c_prev,
                                              const ConvLstmWeights<T>& w) {
  if (x.rank() != 3 || h_prev.rank() != 3 || c_prev.rank() != 3) {
    throw ShapeError("convlstm_step: expected [N, C, F] tensors");
  }
  const std::int64_t N = x.dim(0), F = x.dim(2), C = h_prev.dim(1);
  if (w.w_x.dim(1) != x.dim(1)) {
    throw ShapeError("convlstm_step: input has " + std::to_string(x.dim(1)) +
                     " channels, filters expect " +
                     std::to_string(w.w_x.dim(1)));
  }
  if (w.w_h.dim(0) != 4 * C || w.w_h.dim(1) != C || w.w_x.dim(0) != 4 * C) {
    throw ShapeError("convlstm_step: state has " + std::to_string(C) +
                     " channels, filters " + shape_str(w.w_h.shape()));
  }
  Tensor<T> gx = conv2d(reshape(x, {N, x.dim(1), F, 1}), w.w_x, 1, 1,
                        Padding::kSame);
  Tensor<T> gh = conv2d(reshape(h_prev, {N, C, F, 1}), w.w_h, 1, 1,
                        Padding::kSame);
  Tensor<T> gates = add(add(gx, gh), channel_bias(w.b));
  auto [h, c] = lstm_cell(reshape(gates, {N, 4 * C * F}),
                          reshape(c_prev, {N, C * F}));
  return {reshape(h, {N, C, F}), reshape(c, {N, C, F})};
}

// ---------------------------------------------------------------------------

template <typename T>
LstmRunner<T>::LstmRunner(ParamStore<T>& store, const std::string& prefix,
                          std::int64_t input_dim, std::int64_t hidden)
    : input_dim_(input_dim), hidden_(hidden) {
  w_x_ = store.add(prefix + ".w_x", {input_dim, 4 * hidden},
                   ParamKind::kWeight, kWeightInit);
  w_h_ = store.add(prefix + ".w_h", {hidden, 4 * hidden}, ParamKind::kWeight,
                   kWeightInit);
  b_ = store.add(prefix + ".b", {4 * hidden}, ParamKind::kBias, Zeros{});
}

template <typename T>
LstmWeights<T> LstmRunner<T>::weights(const ParamStore<T>& store) const {
  return {store.use(w_x_), store.use(w_h_), store.use(b_)};
}

template <typename T>
Tensor<T> LstmRunner<T>::run(const SeqBatch<T>& in, const ParamStore<T>& store,
                             bool reverse) const {
  require_layout(in.layout, Layout::kFrames, "lstm");
  const std::int64_t B = in.batch(), Tn = in.time(), H = hidden_;
  if (in.x.dim(2) != input_dim_) {
    throw ShapeError("lstm: input dim " + std::to_string(in.x.dim(2)) +
                     " != " + std::to_string(input_dim_));
  }
  const LstmWeights<T> w = weights(store);
  Tensor<T> xproj = add(matmul(in.x, w.w_x), w.b);
  Tensor<T> h = Tensor<T>::zeros({B, H});
  Tensor<T> c = Tensor<T>::zeros({B, H});
  std::vector<Tensor<T>> outs(Tn);
  for (std::int64_t k = 0; k < Tn; ++k) {
    const std::int64_t t = reverse ? Tn - 1 - k : k;
    Tensor<T> gates = reshape(slice(xproj, 1, t, 1), {B, 4 * H});
    if (k > 0) gates = add(gates, matmul(h, w.w_h));
    auto [hn, cn] = lstm_cell(gates, c);
    if (all_longer(in.lengths, t)) {
      h = hn;
      c = cn;
    } else {
      // Padded rows keep their previous (zero, for the reverse pass) state.
      Tensor<T> m = step_mask<T>(in.lengths, t);
      h = where(m, hn, h);
      c = where(m, cn, c);
    }
    outs[t] = h;
  }
  return stack(outs, 1);
}

template <typename T>
Blstm<T>::Blstm(ParamStore<T>& store, const std::string& prefix,
                std::int64_t input_dim, std::int64_t hidden)
    : fwd_(store, prefix + ".fwd", input_dim, hidden),
      bwd_(store, prefix + ".bwd", input_dim, hidden) {}

template <typename T>
SeqBatch<T> Blstm<T>::forward(const SeqBatch<T>& in, ParamStore<T>& store,
                              Mode) const {
  require_layout(in.layout, Layout::kFrames, "blstm");
  if (in.time() < 1) throw std::invalid_argument("blstm: empty sequence");
  Tensor<T> f = fwd_.run(in, store, false);
  Tensor<T> b = bwd_.run(in, store, true);
  return zero_pads(SeqBatch<T>{concat<T>({f, b}, 2), in.lengths, in.layout});
}

template <typename T>
ConvLstmRunner<T>::ConvLstmRunner(ParamStore<T>& store,
                                  const std::string& prefix,
                                  std::int64_t in_channels,
                                  std::int64_t channels, std::int64_t kf,
                                  std::int64_t kt)
    : in_channels_(in_channels), channels_(channels) {
  w_x_ = store.add(prefix + ".w_x", {4 * channels, in_channels, kf, kt},
                   ParamKind::kFilter, kFilterInit);
  w_h_ = store.add(prefix + ".w_h", {4 * channels, channels, kf, 1},
                   ParamKind::kFilter, kFilterInit);
  b_ = store.add(prefix + ".b", {4 * channels}, ParamKind::kBias, Zeros{});
}

template <typename T>
ConvLstmWeights<T> ConvLstmRunner<T>::weights(
    const ParamStore<T>& store) const {
  return {store.use(w_x_), store.use(w_h_), store.use(b_)};
}

template <typename T>
Tensor<T> ConvLstmRunner<T>::run(const SeqBatch<T>& in,
                                 const ParamStore<T>& store,
                                 bool reverse) const {
  require_layout(in.layout, Layout::kSpatial, "convlstm");
  const std::int64_t B = in.batch(), Tn = in.time(), F = in.x.dim(2);
  const std::int64_t C = channels_, H = C * F;
  if (in.x.dim(1) != in_channels_) {
    throw ShapeError("convlstm: input has " + std::to_string(in.x.dim(1)) +
                     " channels, expected " + std::to_string(in_channels_));
  }
  const ConvLstmWeights<T> w = weights(store);
  Tensor<T> xconv = add(conv2d(in.x, w.w_x, 1, 1, Padding::kSame),
                        channel_bias(w.b));
  Tensor<T> h = Tensor<T>::zeros({B, H});
  Tensor<T> c = Tensor<T>::zeros({B, H});
  std::vector<Tensor<T>> outs(Tn);
  for (std::int64_t k = 0; k < Tn; ++k) {
    const std::int64_t t = reverse ? Tn - 1 - k : k;
    Tensor<T> gates = reshape(slice(xconv, 3, t, 1), {B, 4 * H});
    if (k > 0) {
      Tensor<T> gh = conv2d(reshape(h, {B, C, F, 1}), w.w_h, 1, 1,
                            Padding::kSame);
      gates = add(gates, reshape(gh, {B, 4 * H}));
    }
    auto [hn, cn] = lstm_cell(gates, c);
    if (all_longer(in.lengths, t)) {
      h = hn;
      c = cn;
    } else {
      Tensor<T> m = step_mask<T>(in.lengths, t);
      h = where(m, hn, h);
      c = where(m, cn, c);
    }
    outs[t] = h;
  }
  return reshape(stack(outs, 2), {B, C, F, Tn});
}

template <typename T>
BiConvLstm<T>::BiConvLstm(ParamStore<T>& store, const std::string& prefix,
                          std::int64_t in_channels, std::int64_t channels,
                          std::int64_t kf, std::int64_t kt)
    : fwd_(store, prefix + ".fwd", in_channels, channels, kf, kt),
      bwd_(store, prefix + ".bwd", in_channels, channels, kf, kt) {}

template <typename T>
SeqBatch<T> BiConvLstm<T>::forward(const SeqBatch<T>& in,
                                   ParamStore<T>& store, Mode) const {
  require_layout(in.layout, Layout::kSpatial, "convlstm");
  if (in.time() < 1) throw std::invalid_argument("convlstm: empty sequence");
  Tensor<T> f = fwd_.run(in, store, false);
  Tensor<T> b = bwd_.run(in, store, true);
  return zero_pads(SeqBatch<T>{concat<T>({f, b}, 1), in.lengths, in.layout});
}

// ---------------------------------------------------------------------------

template <typename T>
BatchNorm<T>::BatchNorm(ParamStore<T>& store, const std::string& prefix,
                        std::int64_t channels, double eps, double decay)
    : channels_(channels), eps_(eps), decay_(decay) {
  if (!(eps > 0)) throw std::invalid_argument("batch norm: eps must be > 0");
  gamma_ = store.add(prefix + ".gamma", {channels}, ParamKind::kBnScale,
                     Constant{1.0});
  beta_ = store.add(prefix + ".beta", {channels}, ParamKind::kBnShift, Zeros{});
  running_mean_ = store.add_buffer(prefix + ".running_mean",
                                   std::vector<double>(channels, 0.0));
  running_var_ = store.add_buffer(prefix + ".running_var",
                                  std::vector<double>(channels, 1.0));
}

template <typename T>
SeqBatch<T> BatchNorm<T>::forward(const SeqBatch<T>& in, ParamStore<T>& store,
                                  Mode mode) const {
  const std::size_t axis = in.layout == Layout::kFrames ? 2 : 1;
  if (in.x.dim(axis) != channels_) {
    throw ShapeError("batch norm: " + std::to_string(in.x.dim(axis)) +
                     " channels, expected " + std::to_string(channels_));
  }
  std::vector<std::uint8_t> mask;
  if (in.padded()) mask = element_mask(in);
  Tensor<T> y;
  if (mode == Mode::kTrain) {
    BatchNormStats batch;
    y = batch_norm(in.x, store.use(gamma_), store.use(beta_), axis, eps_, mask,
                   nullptr, &batch);
    auto& rm = store.buffer(running_mean_);
    auto& rv = store.buffer(running_var_);
    for (std::int64_t c = 0; c < channels_; ++c) {
      rm[c] = decay_ * rm[c] + (1.0 - decay_) * batch.mean[c];
      rv[c] = decay_ * rv[c] + (1.0 - decay_) * batch.var[c];
    }
  } else {
    const BatchNormStats running{store.buffer(running_mean_),
                                 store.buffer(running_var_)};
    y = batch_norm(in.x, store.use(gamma_), store.use(beta_), axis, eps_, mask,
                   &running);
  }
  return zero_pads(SeqBatch<T>{y, in.lengths, in.layout});
}

template <typename T>
SeqBatch<T> Relu<T>::forward(const SeqBatch<T>& in, ParamStore<T>&,
                             Mode) const {
  return {relu(in.x), in.lengths, in.layout};
}

template <typename T>
Conv<T>::Conv(ParamStore<T>& store, const std::string& prefix,
              std::int64_t in_channels, std::int64_t out_channels,
              std::int64_t kf, std::int64_t kt, std::int64_t stride_t)
    : in_channels_(in_channels),
      out_channels_(out_channels),
      stride_t_(stride_t) {
  if (stride_t != 1 && stride_t != 2) {
    throw std::invalid_argument("conv: time stride must be 1 or 2");
  }
  w_ = store.add(prefix + ".w", {out_channels, in_channels, kf, kt},
                 ParamKind::kFilter, kFilterInit);
  b_ = store.add(prefix + ".b", {out_channels}, ParamKind::kBias, Zeros{});
}

template <typename T>
SeqBatch<T> Conv<T>::forward(const SeqBatch<T>& in, ParamStore<T>& store,
                             Mode) const {
  const bool frames = in.layout == Layout::kFrames;
  const std::int64_t B = in.batch(), Tn = in.time();
  Tensor<T> x = in.x;
  if (frames) x = reshape(permute(x, {0, 2, 1}), {B, x.dim(2), 1, Tn});
  if (x.dim(1) != in_channels_) {
    throw ShapeError("conv: input has " + std::to_string(x.dim(1)) +
                     " channels, expected " + std::to_string(in_channels_));
  }
  Tensor<T> y = add(conv2d(x, store.use(w_), 1, stride_t_, Padding::kSame),
                    channel_bias(store.use(b_)));
  std::vector<std::int64_t> lengths = in.lengths;
  if (stride_t_ == 2) {
    lengths = halved(in.lengths, "conv");
    if (y.dim(3) != Tn / 2) y = slice(y, 3, 0, Tn / 2);
  }
  if (frames) {
    y = permute(reshape(y, {B, out_channels_, y.dim(3)}), {0, 2, 1});
  }
  return zero_pads(SeqBatch<T>{y, std::move(lengths), in.layout});
}

template <typename T>
ProjectedSubsample<T>::ProjectedSubsample(ParamStore<T>& store,
                                          const std::string& prefix,
                                          std::int64_t dim)
    : bn_(store, prefix + ".bn", dim), dim_(dim) {
  p_ = store.add(prefix + ".p", {2 * dim, dim}, ParamKind::kWeight,
                 kWeightInit);
  b_ = store.add(prefix + ".b", {dim}, ParamKind::kBias, Zeros{});
}

template <typename T>
SeqBatch<T> ProjectedSubsample<T>::forward(const SeqBatch<T>& in,
                                           ParamStore<T>& store,
                                           Mode mode) const {
  require_layout(in.layout, Layout::kFrames, "projected subsample");
  const std::int64_t B = in.batch(), Tn = in.time();
  if (Tn < 2) {
    throw std::invalid_argument("projected subsample: needs at least 2 frames");
  }
  if (in.x.dim(2) != dim_) {
    throw ShapeError("projected subsample: input dim " +
                     std::to_string(in.x.dim(2)) + " != " +
                     std::to_string(dim_));
  }
  const std::int64_t half = Tn / 2;
  Tensor<T> x = Tn % 2 ? slice(in.x, 1, 0, 2 * half) : in.x;
  Tensor<T> pairs = reshape(x, {B, half, 2 * dim_});
  Tensor<T> y = add(matmul(pairs, store.use(p_)), store.use(b_));
  SeqBatch<T> out{y, halved(in.lengths, "projected subsample"), in.layout};
  out = bn_.forward(out, store, mode);
  out.x = relu(out.x);
  return out;
}

template <typename T>
SeqBatch<T> SkipSubsample<T>::forward(const SeqBatch<T>& in, ParamStore<T>&,
                                      Mode) const {
  const std::int64_t Tn = in.time(), half = Tn / 2;
  std::vector<std::int64_t> lengths = halved(in.lengths, "skip subsample");
  const std::size_t taxis = in.layout == Layout::kFrames ? 1 : 3;
  Tensor<T> x = Tn % 2 ? slice(in.x, taxis, 0, 2 * half) : in.x;
  Shape s = x.shape();
  Shape paired = s;
  paired[taxis] = half;
  paired.insert(paired.begin() + taxis + 1, 2);
  Shape result = s;
  result[taxis] = half;
  x = reshape(slice(reshape(x, paired), taxis + 1, 0, 1), result);
  return {x, std::move(lengths), in.layout};
}

template <typename T>
SeqBatch<T> Flatten<T>::forward(const SeqBatch<T>& in, ParamStore<T>&,
                                Mode) const {
  return to_frames(in);
}

template <typename T>
SeqBatch<T> Unflatten<T>::forward(const SeqBatch<T>& in, ParamStore<T>&,
                                  Mode) const {
  return to_spatial(in, channels_);
}

template <typename T>
SeqBatch<T> Sequential<T>::forward(const SeqBatch<T>& in, ParamStore<T>& store,
                                   Mode mode) const {
  return run_layers(layers_, in, store, mode);
}

template <typename T>
SeqBatch<T> Residual<T>::forward(const SeqBatch<T>& in, ParamStore<T>& store,
                                 Mode mode) const {
  SeqBatch<T> f = run_layers(inner_, in, store, mode);
  if (f.x.shape() != in.x.shape() || f.layout != in.layout) {
    throw ShapeError("residual: inner output " + shape_str(f.x.shape()) +
                     " does not match input " + shape_str(in.x.shape()));
  }
  return {add(in.x, f.x), in.lengths, in.layout};
}

template <typename T>
std::unique_ptr<Residual<T>> make_res_cnn(ParamStore<T>& store,
                                          const std::string& prefix,
                                          std::int64_t channels,
                                          std::int64_t kf) {
  std::vector<LayerPtr<T>> inner;
  inner.push_back(std::make_unique<Conv<T>>(store, prefix + ".conv1", channels,
                                            channels, kf, 3, 1));
  inner.push_back(std::make_unique<BatchNorm<T>>(store, prefix + ".bn1",
                                                 channels));
  inner.push_back(std::make_unique<Relu<T>>());
  inner.push_back(std::make_unique<Conv<T>>(store, prefix + ".conv2", channels,
                                            channels, kf, 3, 1));
  inner.push_back(std::make_unique<BatchNorm<T>>(store, prefix + ".bn2",
                                                 channels));
  return std::make_unique<Residual<T>>(std::move(inner));
}

template <typename T>
std::unique_ptr<Residual<T>> make_res_convlstm(ParamStore<T>& store,
                                               const std::string& prefix,
                                               std::int64_t channels,
                                               std::int64_t kf,
                                               std::int64_t kt) {
  std::vector<LayerPtr<T>> inner;
  inner.push_back(std::make_unique<BiConvLstm<T>>(
      store, prefix + ".convlstm", channels, channels, kf, kt));
  inner.push_back(std::make_unique<Conv<T>>(store, prefix + ".conv",
                                            2 * channels, channels, 3, 3, 1));
  inner.push_back(std::make_unique<BatchNorm<T>>(store, prefix + ".bn",
                                                 channels));
  return std::make_unique<Residual<T>>(std::move(inner));
}

template <typename T>
std::unique_ptr<Residual<T>> make_res_lstm(ParamStore<T>& store,
                                           const std::string& prefix,
                                           std::int64_t dim) {
  if (dim % 2 != 0) {
    throw ShapeError("residual lstm: width " + std::to_string(dim) +
                     " is not twice a hidden size");
  }
  std::vector<LayerPtr<T>> inner;
  inner.push_back(
      std::make_unique<Blstm<T>>(store, prefix + ".blstm", dim, dim / 2));
  return std::make_unique<Residual<T>>(std::move(inner));
}

template <typename T>
SeqBatch<T> run_layers(const std::vector<LayerPtr<T>>& layers, SeqBatch<T> x,
                       ParamStore<T>& store, Mode mode) {
  for (const auto& layer : layers) x = layer->forward(x, store, mode);
  return x;
}

#define DEEPLAS_INSTANTIATE_LAYERS(T)                                        \
  template struct SeqBatch<T>;                                               \
  template Tensor<T> time_mask(const SeqBatch<T>&);                          \
  template std::vector<std::uint8_t> element_mask(const SeqBatch<T>&);       \
  template SeqBatch<T> zero_pads(SeqBatch<T>);                               \
  template SeqBatch<T> to_frames(const SeqBatch<T>&);                        \
  template SeqBatch<T> to_spatial(const SeqBatch<T>&, std::int64_t);         \
  template std::pair<Tensor<T>, Tensor<T>> lstm_step(                        \
      const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,                  \
      const LstmWeights<T>&);                                                \
  template std::pair<Tensor<T>, Tensor<T>> convlstm_step(                    \
      const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,                  \
      const ConvLstmWeights<T>&);                                            \
  template class LstmRunner<T>;                                              \
  template class Blstm<T>;                                                   \
  template class ConvLstmRunner<T>;                                          \
  template class BiConvLstm<T>;                                              \
  template class BatchNorm<T>;                                               \
  template class Relu<T>;                                                    \
  template class Conv<T>;                                                    \
  template class ProjectedSubsample<T>;                                      \
  template class SkipSubsample<T>;                                           \
  template class Flatten<T>;                                                 \
  template class Unflatten<T>;                                               \
  template class Sequential<T>;                                              \
  template class Residual<T>;                                                \
  template std::unique_ptr<Residual<T>> make_res_cnn(                        \
      ParamStore<T>&, const std::string&, std::int64_t, std::int64_t);       \
  template std::unique_ptr<Residual<T>> make_res_convlstm(                   \
      ParamStore<T>&, const std::string&, std::int64_t, std::int64_t,        \
      std::int64_t);                                                         \
  template std::unique_ptr<Residual<T>> make_res_lstm(                       \
      ParamStore<T>&, const std::string&, std::int64_t);                     \
  template SeqBatch<T> run_layers(const std::vector<LayerPtr<T>>&,           \
                                  SeqBatch<T>, ParamStore<T>&, Mode);

DEEPLAS_INSTANTIATE_LAYERS(float)
DEEPLAS_INSTANTIATE_LAYERS(double)

}  // namespace deeplas
