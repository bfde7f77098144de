// Copyright 2026 The deeplas Authors.
// SPDX-License-Identifier: Apache-2.0

#include "deeplas/train.hpp"

#include <algorithm>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <limits>
#include <ostream>
#include <random>
#include <sstream>

#include "deeplas/batch.hpp"
#include "deeplas/checkpoint.hpp"
#include "deeplas/ops.hpp"

namespace deeplas {

template <typename T>
ClipResult clip_by_global_norm(std::span<const std::span<T>> grads,
                               double max_norm) {
  if (!(max_norm > 0)) throw std::invalid_argument("clip: max_norm must be > 0");
  ClipResult r;
  double sq = 0.0;
  for (const auto& g : grads)
    for (T v : g) sq += static_cast<double>(v) * static_cast<double>(v);
  r.norm = std::sqrt(sq);
  r.finite = std::isfinite(r.norm);
  if (!r.finite) {
    r.clipped_norm = r.norm;
    return r;
  }
  if (r.norm > max_norm) {
    const double s = max_norm / r.norm;
    double sq2 = 0.0;
    for (const auto& g : grads)
      for (T& v : g) {
        v = static_cast<T>(v * s);
        sq2 += static_cast<double>(v) * static_cast<double>(v);
      }
    r.clipped_norm = std::sqrt(sq2);
  } else {
    r.clipped_norm = r.norm;
  }
  return r;
}

template <typename T>
Adam<T>::Adam(std::vector<std::int64_t> sizes, Hyper hyper) : hyper_(hyper) {
  for (auto n : sizes) {
    m_.emplace_back(static_cast<std::size_t>(n), T(0));
    v_.emplace_back(static_cast<std::size_t>(n), T(0));
  }
}

template <typename T>
Adam<T>::Adam(const ParamStore<T>& store, Hyper hyper) : hyper_(hyper) {
  for (std::size_t i = 0; i < store.size(); ++i) {
    m_.emplace_back(store.value(i).data().size(), T(0));
    v_.emplace_back(store.value(i).data().size(), T(0));
  }
}

template <typename T>
void Adam<T>::step(std::span<const std::span<T>> params,
                   std::span<const std::span<const T>> grads, double lr) {
  if (params.size() != m_.size() || grads.size() != m_.size())
    throw std::invalid_argument("adam: parameter count mismatch");
  ++steps_;
  const double b1 = hyper_.beta1, b2 = hyper_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(steps_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(steps_));
  for (std::size_t i = 0; i < m_.size(); ++i) {
    auto p = params[i];
    auto g = grads[i];
    if (p.size() != m_[i].size() || (!g.empty() && g.size() != p.size()))
      throw std::invalid_argument("adam: size mismatch for parameter " +
                                  std::to_string(i));
    for (std::size_t k = 0; k < p.size(); ++k) {
      const double gk = g.empty() ? 0.0 : static_cast<double>(g[k]);
      const double m = b1 * m_[i][k] + (1.0 - b1) * gk;
      const double v = b2 * v_[i][k] + (1.0 - b2) * gk * gk;
      m_[i][k] = static_cast<T>(m);
      v_[i][k] = static_cast<T>(v);
      const double update = lr * (m / c1) / (std::sqrt(v / c2) + hyper_.eps);
      p[k] = static_cast<T>(p[k] - update);
    }
  }
}

template <typename T>
void Adam<T>::step(ParamStore<T>& store, double lr) {
  std::vector<std::span<T>> params;
  std::vector<std::span<const T>> grads;
  for (std::size_t i = 0; i < store.size(); ++i) {
    Tensor<T>& p = store.value(i);
    params.push_back(p.mutable_data());
    grads.push_back(p.has_grad() ? p.grad() : std::span<const T>{});
  }
  step(params, grads, lr);
}

std::vector<double> weight_noise(std::int64_t n, double std, std::uint64_t seed,
                                 std::int64_t step, std::size_t index) {
  std::mt19937_64 rng(derive_seed(derive_seed(seed ^ 0x6e6f697365ULL,
                                              static_cast<std::uint64_t>(step)),
                                  index));
  std::normal_distribution<double> dist(0.0, std);
  std::vector<double> out(static_cast<std::size_t>(n));
  for (auto& v : out) v = dist(rng);
  return out;
}

template <typename T>
void apply_weight_noise(ParamStore<T>& store, double std, std::uint64_t seed,
                        std::int64_t step) {
  if (std < 0) throw std::invalid_argument("weight noise: negative std");
  store.clear_overrides();
  if (std == 0) return;
  std::vector<Tensor<T>> over(store.size());
  for (std::size_t i = 0; i < store.size(); ++i) {
    if (!is_weight(store.kind(i))) continue;
    const Tensor<T>& w = store.value(i);
    const auto noise = weight_noise(w.numel(), std, seed, step, i);
    Tensor<T> n(w.shape(), std::vector<T>(noise.begin(), noise.end()));
    over[i] = add(w, n);
  }
  store.set_overrides(std::move(over));
}

template <typename T>
Tensor<T> l2_penalty(const ParamStore<T>& store, double lambda) {
  Tensor<T> total = Tensor<T>::scalar(T(0));
  for (std::size_t i = 0; i < store.size(); ++i) {
    if (!is_weight(store.kind(i))) continue;
    const Tensor<T>& w = store.value(i);
    total = add(total, sum(mul(w, w)));
  }
  return scale(total, static_cast<T>(lambda));
}

void TrainConfig::validate() const {
  auto fail = [](const std::string& m) { throw std::invalid_argument("train config: " + m); };
  if (!(clip_norm > 0)) fail("clip_norm must be > 0");
  if (weight_noise_std < 0) fail("weight_noise must be >= 0");
  if (l2 < 0) fail("l2 must be >= 0");
  if (!(lr_initial > 0) || !(lr_decayed > 0)) fail("learning rates must be > 0");
  if (!(lr_decayed < lr_initial)) fail("lr_decayed must be below lr");
  if (batch_size < 1) fail("batch_size must be >= 1");
  if (max_steps < 1) fail("max_steps must be >= 1");
  if (eval_every < 1) fail("eval_every must be >= 1");
  if (patience < 1) fail("patience must be >= 1");
  if (stop_after_decay < 0) fail("stop_after_decay must be >= 0");
}

namespace {

std::map<std::string, std::string> echo(const TrainConfig& c) {
  auto num = [](double v) {
    std::ostringstream s;
    s << std::setprecision(17) << v;
    return s.str();
  };
  return {{"clip_norm", num(c.clip_norm)},
          {"weight_noise", num(c.weight_noise_std)},
          {"l2", num(c.l2)},
          {"lr", num(c.lr_initial)},
          {"lr_decayed", num(c.lr_decayed)},
          {"batch_size", std::to_string(c.batch_size)},
          {"max_steps", std::to_string(c.max_steps)},
          {"eval_every", std::to_string(c.eval_every)},
          {"patience", std::to_string(c.patience)},
          {"seed", std::to_string(c.seed)}};
}

}  // namespace

double dev_loss(LasModel<float>& model, const Dataset& data,
                std::int64_t batch_size) {
  NoTapeScope<float> no_tape;
  model.params().clear_overrides();
  std::vector<std::size_t> order(data.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return data[a].frames < data[b].frames;
  });
  double total = 0.0;
  std::int64_t tokens = 0;
  const auto bs = static_cast<std::size_t>(batch_size);
  for (std::size_t i = 0; i < order.size(); i += bs) {
    const std::span<const std::size_t> idx(order.data() + i,
                                           std::min(bs, order.size() - i));
    const Batch<float> b = make_batch<float>(data, idx, &model.vocab());
    const auto lp = model.sequence_log_probs(b.features, b.lengths, b.targets,
                                             Mode::kInfer);
    for (std::size_t k = 0; k < lp.size(); ++k) {
      total -= lp[k];
      tokens += static_cast<std::int64_t>(b.targets[k].size());
    }
  }
  return total / static_cast<double>(tokens);
}

TrainResult train_loop(LasModel<float>& model, const Dataset& train,
                       const Dataset& dev, const TrainConfig& config,
                       std::ostream* log) {
  config.validate();
  if (train.empty() || dev.empty())
    throw std::invalid_argument("train: empty train or dev split");
  ParamStore<float>& store = model.params();
  const Vocabulary& vocab = model.vocab();
  const BucketSampler sampler(train, config.batch_size, config.seed);
  Adam<float> adam(store);

  std::ofstream metrics, trace;
  if (!config.out_dir.empty()) {
    std::filesystem::create_directories(config.out_dir);
    metrics.open(config.out_dir / "metrics.csv", std::ios::trunc);
    trace.open(config.out_dir / "trace.csv", std::ios::trunc);
    if (!metrics || !trace)
      throw std::runtime_error("train: cannot write to " + config.out_dir.string());
    metrics << kMetricsHeader << "\n" << std::flush;
    trace << "step,loss,grad_norm,clipped_norm,lr,skipped\n";
  }
  metrics << std::setprecision(9);
  trace << std::setprecision(9);

  TrainResult result;
  double lr = config.lr_initial;
  int bad_in_a_row = 0;
  double loss_sum = 0.0;
  std::int64_t loss_count = 0;
  std::int64_t since_best = 0;
  const std::clock_t clock0 = std::clock();
  double best_dev_loss = std::numeric_limits<double>::infinity();

  for (std::int64_t step = 0; step < config.max_steps; ++step) {
    const auto& idx = sampler.batch_at(step);
    const Batch<float> batch = make_batch<float>(train, idx, &vocab);

    StepRecord rec;
    rec.step = step + 1;
    rec.lr = lr;
    store.zero_grad();
    Tape<float> tape;
    Tensor<float> loss;
    {
      TapeScope<float> scope(tape);
      apply_weight_noise(store, config.weight_noise_std, config.seed, step);
      loss = model.loss(batch.features, batch.lengths, batch.targets, Mode::kTrain);
      if (config.l2 > 0) loss = add(loss, l2_penalty(store, config.l2));
    }
    store.clear_overrides();
    rec.loss = static_cast<double>(loss.item());
    bool ok = std::isfinite(rec.loss);
    if (ok) {
      tape.backward(loss);
      std::vector<std::span<float>> grads;
      for (std::size_t i = 0; i < store.size(); ++i)
        if (store.value(i).has_grad()) grads.push_back(store.value(i).mutable_grad());
      const ClipResult clip = clip_by_global_norm<float>(grads, config.clip_norm);
      rec.grad_norm = clip.norm;
      rec.clipped_norm = clip.clipped_norm;
      ok = clip.finite;
    } else {
      tape.clear();
    }
    if (ok) {
      adam.step(store, lr);
      bad_in_a_row = 0;
      loss_sum += rec.loss;
      ++loss_count;
    } else {
      rec.skipped = true;
      if (log) *log << "step " << rec.step << ": non-finite loss or gradient, skipped\n";
      if (++bad_in_a_row >= kMaxNonFiniteSteps) {
        result.steps.push_back(rec);
        result.diverged = true;
        throw TrainingAborted("train: " + std::to_string(kMaxNonFiniteSteps) +
                              " consecutive non-finite steps ending at step " +
                              std::to_string(rec.step) + " (lr " +
                              std::to_string(lr) + ")");
      }
    }
    result.steps.push_back(rec);
    if (trace.is_open())
      trace << rec.step << ',' << rec.loss << ',' << rec.grad_norm << ','
            << rec.clipped_norm << ',' << rec.lr << ',' << (rec.skipped ? 1 : 0)
            << '\n';

    const bool last = step + 1 == config.max_steps;
    if ((step + 1) % config.eval_every != 0 && !last) continue;

    const EvalResult ev = evaluate(model, dev);
    EvalRecord er;
    er.step = step + 1;
    er.train_loss = loss_count > 0 ? loss_sum / loss_count : std::nan("");
    er.dev_cer = ev.cer;
    er.dev_wer = ev.wer;
    er.dev_loss = dev_loss(model, dev);
    er.lr = lr;
    er.cpu_seconds = static_cast<double>(std::clock() - clock0) / CLOCKS_PER_SEC;
    result.evals.push_back(er);
    loss_sum = 0.0;
    loss_count = 0;
    result.final_cer = ev.cer;
    result.final_wer = ev.wer;
    if (metrics.is_open())
      metrics << er.step << ',' << er.train_loss << ',' << er.dev_cer << ','
              << er.dev_wer << ',' << er.lr << '\n' << std::flush;
    if (log)
      *log << "step " << er.step << " train_loss " << er.train_loss
           << " dev_loss " << er.dev_loss << " dev_cer " << er.dev_cer
           << " dev_wer " << er.dev_wer << " lr "
           << er.lr << std::endl;

    // Either dev number moving counts as progress. CER alone sits flat for
    // hundreds of steps early on while the loss is still falling.
    bool improved = false;
    if (ev.cer < result.best_cer) {
      result.best_cer = ev.cer;
      result.best_wer = ev.wer;
      result.best_step = er.step;
      improved = true;
      if (!config.out_dir.empty())
        save_checkpoint(config.out_dir / "best.ckpt", model, er.step, echo(config));
    }
    if (er.dev_loss < best_dev_loss) {
      best_dev_loss = er.dev_loss;
      improved = true;
    }
    since_best = improved ? 0 : since_best + 1;
    if (!config.out_dir.empty())
      save_checkpoint(config.out_dir / "last.ckpt", model, er.step, echo(config), &adam);

    if (result.decay_step < 0 && since_best >= config.patience) {
      lr = config.lr_decayed;
      result.decay_step = er.step;
      since_best = 0;
      if (log) *log << "step " << er.step << ": learning rate " << config.lr_initial
                    << " -> " << config.lr_decayed << std::endl;
    } else if (result.decay_step >= 0 && config.stop_after_decay > 0 &&
               er.step - result.decay_step >= config.stop_after_decay * config.eval_every) {
      if (log) *log << "step " << er.step << ": stopping after the decay\n";
      break;
    }
  }
  return result;
}

#define DEEPLAS_INSTANTIATE(T)                                                 \
  template ClipResult clip_by_global_norm(std::span<const std::span<T>>, double); \
  template class Adam<T>;                                                      \
  template void apply_weight_noise(ParamStore<T>&, double, std::uint64_t,      \
                                   std::int64_t);                              \
  template Tensor<T> l2_penalty(const ParamStore<T>&, double);

DEEPLAS_INSTANTIATE(float)
DEEPLAS_INSTANTIATE(double)
#undef DEEPLAS_INSTANTIATE

}  // namespace deeplas
