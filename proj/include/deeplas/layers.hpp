// Copyright 2026 The deeplas Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "deeplas/ops.hpp"
#include "deeplas/params.hpp"
#include "deeplas/tensor.hpp"

namespace deeplas {

// kFrames: x is [batch, time, dims]. kSpatial: x is [batch, channels, freq,
// time]. Frames at or beyond lengths[b] are padding and are kept at zero
// between layers.
enum class Layout { kFrames, kSpatial };
enum class Mode { kTrain, kInfer };

template <typename T>
struct SeqBatch {
  Tensor<T> x;
  std::vector<std::int64_t> lengths;
  Layout layout = Layout::kFrames;

  std::int64_t batch() const { return x.dim(0); }
  std::int64_t time() const {
    return layout == Layout::kFrames ? x.dim(1) : x.dim(3);
  }
  // Feature width per frame: dims, or channels * freq.
  std::int64_t frame_dim() const {
    return layout == Layout::kFrames ? x.dim(2) : x.dim(1) * x.dim(2);
  }
  bool padded() const;
  void validate() const;
};

// 0/1 mask broadcastable against x: [B, T, 1] or [B, 1, 1, T].
template <typename T>
Tensor<T> time_mask(const SeqBatch<T>& s);
// One flag per element of x.
template <typename T>
std::vector<std::uint8_t> element_mask(const SeqBatch<T>& s);
// Multiplies padded frames by zero (no-op without padding).
template <typename T>
SeqBatch<T> zero_pads(SeqBatch<T> s);

// [B, C, F, T] -> [B, T, C * F], channel-major within a frame.
template <typename T>
SeqBatch<T> to_frames(const SeqBatch<T>& s);
// [B, T, C * F] -> [B, C, F, T].
template <typename T>
SeqBatch<T> to_spatial(const SeqBatch<T>& s, std::int64_t channels);

// ---------------------------------------------------------------------------
// Recurrent cells.

// Gate blocks are packed column-wise in i, f, c, o order.
template <typename T>
struct LstmWeights {
  Tensor<T> w_x;  // [in, 4H]
  Tensor<T> w_h;  // [H, 4H]
  Tensor<T> b;    // [4H]
};

template <typename T>
std::pair<Tensor<T>, Tensor<T>> lstm_step(const Tensor<T>& x,
                                          const Tensor<T>& h_prev,
                                          const Tensor<T>& c_prev,
                                          const LstmWeights<T>& w);

// Gate blocks are packed along the output-channel axis in i, f, c, o order.
template <typename T>
struct ConvLstmWeights {
  Tensor<T> w_x;  // [4C, C_in, kf, kt]
  Tensor<T> w_h;  // [4C, C, kf, 1]
  Tensor<T> b;    // [4C]
};

// x [N, C_in, F], h_prev and c_prev [N, C, F]. Convolutions use same
// padding, so the frequency extent is preserved.
template <typename T>
std::pair<Tensor<T>, Tensor<T>> convlstm_step(const Tensor<T>& x,
                                              const Tensor<T>& h_prev,
                                              const Tensor<T>& c_prev,
                                              const ConvLstmWeights<T>& w);

// ---------------------------------------------------------------------------
// Layers. Constructors register parameters in a ParamStore under `prefix`;
// forward() reads them back through ParamStore::use().

template <typename T>
class Layer {
 public:
  virtual ~Layer() = default;
  virtual SeqBatch<T> forward(const SeqBatch<T>& in, ParamStore<T>& store,
                              Mode mode) const = 0;
};

template <typename T>
using LayerPtr = std::unique_ptr<Layer<T>>;

// One direction of an LSTM over a frame sequence; not a Layer by itself.
template <typename T>
class LstmRunner {
 public:
  LstmRunner(ParamStore<T>& store, const std::string& prefix,
             std::int64_t input_dim, std::int64_t hidden);
  LstmWeights<T> weights(const ParamStore<T>& store) const;
  // x [B, T, in] -> [B, T, H]. The reverse direction starts from each
  // utterance's last valid frame.
  Tensor<T> run(const SeqBatch<T>& in, const ParamStore<T>& store,
                bool reverse) const;
  std::int64_t hidden() const { return hidden_; }

 private:
  ParamRef w_x_, w_h_, b_;
  std::int64_t input_dim_, hidden_;
};

template <typename T>
class Blstm final : public Layer<T> {
 public:
  Blstm(ParamStore<T>& store, const std::string& prefix,
        std::int64_t input_dim, std::int64_t hidden);
  SeqBatch<T> forward(const SeqBatch<T>& in, ParamStore<T>& store,
                      Mode mode) const override;

 private:
  LstmRunner<T> fwd_, bwd_;
};

template <typename T>
class ConvLstmRunner {
 public:
  ConvLstmRunner(ParamStore<T>& store, const std::string& prefix,
                 std::int64_t in_channels, std::int64_t channels,
                 std::int64_t kf, std::int64_t kt);
  ConvLstmWeights<T> weights(const ParamStore<T>& store) const;
  // x [B, C_in, F, T] -> [B, C, F, T]. The input-to-state convolution runs
  // once over the whole sequence (time taps kt); the state-to-state one per
  // step.
  Tensor<T> run(const SeqBatch<T>& in, const ParamStore<T>& store,
                bool reverse) const;

 private:
  ParamRef w_x_, w_h_, b_;
  std::int64_t in_channels_, channels_;
};

template <typename T>
class BiConvLstm final : public Layer<T> {
 public:
  BiConvLstm(ParamStore<T>& store, const std::string& prefix,
             std::int64_t in_channels, std::int64_t channels, std::int64_t kf,
             std::int64_t kt);
  SeqBatch<T> forward(const SeqBatch<T>& in, ParamStore<T>& store,
                      Mode mode) const override;

 private:
  ConvLstmRunner<T> fwd_, bwd_;
};

inline constexpr double kBatchNormEps = 1e-6;
inline constexpr double kBatchNormDecay = 0.99;

// Sequence-wise batch norm: statistics pooled over batch and valid frames
// per channel (dims for kFrames, channels for kSpatial).
template <typename T>
class BatchNorm final : public Layer<T> {
 public:
  BatchNorm(ParamStore<T>& store, const std::string& prefix,
            std::int64_t channels, double eps = kBatchNormEps,
            double decay = kBatchNormDecay);
  SeqBatch<T> forward(const SeqBatch<T>& in, ParamStore<T>& store,
                      Mode mode) const override;

 private:
  ParamRef gamma_, beta_;
  std::size_t running_mean_, running_var_;
  std::int64_t channels_;
  double eps_, decay_;
};

template <typename T>
class Relu final : public Layer<T> {
 public:
  SeqBatch<T> forward(const SeqBatch<T>& in, ParamStore<T>& store,
                      Mode mode) const override;
};

// Convolution with bias and same padding, time stride 1 or 2. A stride-2
// layer keeps floor(T / 2) frames. On kFrames input the dims act as
// channels over a single frequency row and the filter is [D, D, 1, kt].
template <typename T>
class Conv final : public Layer<T> {
 public:
  Conv(ParamStore<T>& store, const std::string& prefix,
       std::int64_t in_channels, std::int64_t out_channels, std::int64_t kf,
       std::int64_t kt, std::int64_t stride_t);
  SeqBatch<T> forward(const SeqBatch<T>& in, ParamStore<T>& store,
                      Mode mode) const override;

 private:
  ParamRef w_, b_;
  std::int64_t in_channels_, out_channels_, stride_t_;
};

// relu(BN(P [x_2u; x_2u+1] + b)); an odd final frame is dropped.
template <typename T>
class ProjectedSubsample final : public Layer<T> {
 public:
  ProjectedSubsample(ParamStore<T>& store, const std::string& prefix,
                     std::int64_t dim);
  SeqBatch<T> forward(const SeqBatch<T>& in, ParamStore<T>& store,
                      Mode mode) const override;

 private:
  ParamRef p_, b_;
  BatchNorm<T> bn_;
  std::int64_t dim_;
};

// Keeps frames 0, 2, 4, ...; output length floor(T / 2).
template <typename T>
class SkipSubsample final : public Layer<T> {
 public:
  SeqBatch<T> forward(const SeqBatch<T>& in, ParamStore<T>& store,
                      Mode mode) const override;
};

template <typename T>
class Flatten final : public Layer<T> {
 public:
  SeqBatch<T> forward(const SeqBatch<T>& in, ParamStore<T>& store,
                      Mode mode) const override;
};

template <typename T>
class Unflatten final : public Layer<T> {
 public:
  explicit Unflatten(std::int64_t channels) : channels_(channels) {}
  SeqBatch<T> forward(const SeqBatch<T>& in, ParamStore<T>& store,
                      Mode mode) const override;

 private:
  std::int64_t channels_;
};

template <typename T>
class Sequential final : public Layer<T> {
 public:
  explicit Sequential(std::vector<LayerPtr<T>> layers)
      : layers_(std::move(layers)) {}
  SeqBatch<T> forward(const SeqBatch<T>& in, ParamStore<T>& store,
                      Mode mode) const override;

 private:
  std::vector<LayerPtr<T>> layers_;
};

// y = F(x) + x.
template <typename T>
class Residual final : public Layer<T> {
 public:
  explicit Residual(std::vector<LayerPtr<T>> inner)
      : inner_(std::move(inner)) {}
  SeqBatch<T> forward(const SeqBatch<T>& in, ParamStore<T>& store,
                      Mode mode) const override;

 private:
  std::vector<LayerPtr<T>> inner_;
};

// conv - BN - relu - conv - BN, channels -> channels, with kf x 3 filters
// (kf = 1 on frame input).
template <typename T>
std::unique_ptr<Residual<T>> make_res_cnn(ParamStore<T>& store,
                                          const std::string& prefix,
                                          std::int64_t channels,
                                          std::int64_t kf = 3);
// Bidirectional ConvLSTM (channels per direction) - conv3x3 (2C -> C) - BN.
template <typename T>
std::unique_ptr<Residual<T>> make_res_convlstm(ParamStore<T>& store,
                                               const std::string& prefix,
                                               std::int64_t channels,
                                               std::int64_t kf,
                                               std::int64_t kt);
// BLSTM with `dim / 2` units per direction.
template <typename T>
std::unique_ptr<Residual<T>> make_res_lstm(ParamStore<T>& store,
                                           const std::string& prefix,
                                           std::int64_t dim);

// Runs layers in order.
template <typename T>
SeqBatch<T> run_layers(const std::vector<LayerPtr<T>>& layers,
                       SeqBatch<T> x, ParamStore<T>& store, Mode mode);

}  // namespace deeplas
