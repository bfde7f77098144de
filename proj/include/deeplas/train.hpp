// Copyright 2026 The deeplas Authors.
// SPDX-License-Identifier: Apache-2.0
//
// Optimization recipe: Adam, global-norm clipping, Gaussian weight noise,
// L2 decay and a one-shot learning-rate drop, wrapped in a teacher-forced
// training loop with dev monitoring.

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "deeplas/data.hpp"
#include "deeplas/decode.hpp"
#include "deeplas/las.hpp"
#include "deeplas/params.hpp"

namespace deeplas {

struct ClipResult {
  double norm = 0.0;          // before clipping
  double clipped_norm = 0.0;  // after
  bool finite = true;         // false: grads left untouched, skip the step
};

// Scales every gradient by max_norm / ||g|| when the global L2 norm
// exceeds max_norm.
template <typename T>
ClipResult clip_by_global_norm(std::span<const std::span<T>> grads,
                               double max_norm);

template <typename T>
class Adam {
 public:
  struct Hyper {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
  };

  explicit Adam(std::vector<std::int64_t> sizes, Hyper hyper = {});
  explicit Adam(const ParamStore<T>& store, Hyper hyper = {});

  // Missing gradients (empty spans) count as zero.
  void step(std::span<const std::span<T>> params,
            std::span<const std::span<const T>> grads, double lr);
  // Every parameter of the store, using its accumulated gradient.
  void step(ParamStore<T>& store, double lr);

  std::int64_t steps() const { return steps_; }
  const Hyper& hyper() const { return hyper_; }
  std::vector<std::vector<T>>& first_moments() { return m_; }
  std::vector<std::vector<T>>& second_moments() { return v_; }
  const std::vector<std::vector<T>>& first_moments() const { return m_; }
  const std::vector<std::vector<T>>& second_moments() const { return v_; }
  void set_steps(std::int64_t s) { steps_ = s; }

 private:
  Hyper hyper_;
  std::int64_t steps_ = 0;
  std::vector<std::vector<T>> m_, v_;
};

// N(0, std) draws for parameter `index` at training step `step`; a pure
// function of its arguments.
std::vector<double> weight_noise(std::int64_t n, double std, std::uint64_t seed,
                                 std::int64_t step, std::size_t index);

// Installs W + noise overrides for weight matrices, filters and embeddings.
// The sums are taped, so gradients reach the clean parameters. std == 0
// installs nothing.
template <typename T>
void apply_weight_noise(ParamStore<T>& store, double std, std::uint64_t seed,
                        std::int64_t step);

// lambda * sum ||W||^2 over the clean weights (a taped scalar).
template <typename T>
Tensor<T> l2_penalty(const ParamStore<T>& store, double lambda);

struct TrainConfig {
  double clip_norm = 1.0;
  double weight_noise_std = 0.075;
  double l2 = 1e-5;
  double lr_initial = 1e-3;
  double lr_decayed = 1e-4;
  std::int64_t batch_size = 8;
  std::int64_t max_steps = 5000;
  std::int64_t eval_every = 100;
  // Evaluations without a new best dev CER or dev loss before the one decay.
  std::int64_t patience = 3;
  std::uint64_t seed = 1;
  // Stop this many evaluations after the decay; 0 runs to max_steps.
  std::int64_t stop_after_decay = 0;
  // Metrics, trace and checkpoints go here; empty disables file output.
  std::filesystem::path out_dir;

  void validate() const;
};

struct StepRecord {
  std::int64_t step = 0;
  double loss = 0.0;  // cross-entropy plus L2
  double grad_norm = 0.0;
  double clipped_norm = 0.0;
  double lr = 0.0;
  bool skipped = false;
};

struct EvalRecord {
  std::int64_t step = 0;
  double train_loss = 0.0;  // mean over steps since the previous eval
  double dev_cer = 0.0;
  double dev_wer = 0.0;
  double dev_loss = 0.0;  // teacher-forced, clean parameters
  double lr = 0.0;
  double cpu_seconds = 0.0;  // process CPU time since train_loop started
};

struct TrainResult {
  std::vector<StepRecord> steps;
  std::vector<EvalRecord> evals;
  std::int64_t decay_step = -1;
  double best_cer = 1e300;
  double best_wer = 1e300;
  std::int64_t best_step = -1;
  double final_cer = 0.0;
  double final_wer = 0.0;
  bool diverged = false;
};

class TrainingAborted : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr int kMaxNonFiniteSteps = 3;

inline constexpr const char* kMetricsHeader = "step,train_loss,dev_cer,dev_wer,lr";

// Mean teacher-forced cross-entropy with clean parameters in inference mode.
double dev_loss(LasModel<float>& model, const Dataset& data,
                std::int64_t batch_size = 32);

// Runs config.max_steps teacher-forced updates. Writes metrics.csv,
// trace.csv, last.ckpt and best.ckpt under out_dir when it is set.
// `log` receives one line per evaluation.
TrainResult train_loop(LasModel<float>& model, const Dataset& train,
                       const Dataset& dev, const TrainConfig& config,
                       std::ostream* log = nullptr);

}  // namespace deeplas
