// Copyright 2026 The deeplas Authors.
// SPDX-License-Identifier: Apache-2.0

#include "deeplas/gradsuite.hpp"

#include <chrono>
#include <functional>
#include <random>
#include <stdexcept>

#include "deeplas/gradcheck.hpp"
#include "deeplas/las.hpp"
#include "deeplas/layers.hpp"
#include "deeplas/ops.hpp"

namespace deeplas {

namespace {

using Store = ParamStore<double>;
using Builder = std::function<LayerPtr<double>(Store&)>;

constexpr int kDraws = 2;

Tensor<double> rand_tensor(const Shape& shape, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  std::vector<double> v(static_cast<std::size_t>(shape_numel(shape)));
  for (auto& x : v) x = d(rng);
  return Tensor<double>(shape, std::move(v), true);
}

// sum(y * w) with fixed random w, so each output gets its own weight.
Tensor<double> probe(const Tensor<double>& y, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Tensor<double> w = rand_tensor(y.shape(), rng);
  w.set_requires_grad(false);
  return sum(mul(y, w));
}

void merge(GradSuiteResult& into, const GradCheckReport& r) {
  if (r.max_rel_error >= into.max_rel_error) {
    into.max_rel_error = r.max_rel_error;
    into.worst_param = r.worst_param;
  }
}

void perturb(Store& store, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> d(-0.3, 0.3);
  for (std::size_t i = 0; i < store.size(); ++i)
    for (auto& v : store.value(i).mutable_data()) v += d(rng);
}

GradSuiteResult check_layer(const std::string& name, const Builder& build,
                            const Shape& in_shape, Layout layout,
                            const std::vector<std::int64_t>& lengths,
                            Mode mode = Mode::kTrain) {
  GradSuiteResult r{name};
  for (int s = 0; s < kDraws; ++s) {
    const std::uint64_t seed = 1000 + 31 * s;
    Store store(seed);
    LayerPtr<double> layer = build(store);
    std::mt19937_64 rng(seed);
    perturb(store, rng);
    Tensor<double> x = rand_tensor(in_shape, rng);
    std::vector<NamedTensor> params{{"input", x}};
    for (std::size_t i = 0; i < store.size(); ++i)
      params.push_back({store.name(i), store.value(i)});
    merge(r, finite_difference_check(
                 [&] {
                   SeqBatch<double> in = zero_pads(SeqBatch<double>{x, lengths, layout});
                   return probe(layer->forward(in, store, mode).x, seed + 99);
                 },
                 params));
  }
  return r;
}

ModelConfig micro_config() {
  ModelConfig c;
  c.arch = "L + P/2 + L";
  c.input = {2, 1};
  c.hidden = 3;
  c.channels = 2;
  c.decoder_hidden = 3;
  c.vocab = "ab";
  return c;
}

std::vector<NamedTensor> model_params(LasModel<double>& m, bool decoder_only) {
  std::vector<NamedTensor> out;
  for (std::size_t i = 0; i < m.params().size(); ++i)
    if (!decoder_only || m.params().name(i).rfind("enc.", 0) != 0)
      out.push_back({m.params().name(i), m.params().value(i)});
  return out;
}

using Check = std::function<GradSuiteResult()>;

const std::vector<std::pair<std::string, Check>>& checks() {
  static const std::vector<std::pair<std::string, Check>> all = [] {
    const std::vector<std::int64_t> ragged{4, 3};
    std::vector<std::pair<std::string, Check>> c;
    c.emplace_back("lstm_step", [] {
      GradSuiteResult r{"lstm_step"};
      for (int s = 0; s < kDraws; ++s) {
        std::mt19937_64 rng(200 + s);
        LstmWeights<double> w{rand_tensor({3, 8}, rng), rand_tensor({2, 8}, rng),
                              rand_tensor({8}, rng)};
        auto x = rand_tensor({2, 3}, rng), h = rand_tensor({2, 2}, rng),
             cc = rand_tensor({2, 2}, rng);
        merge(r, finite_difference_check(
                     [&] {
                       auto [hn, cn] = lstm_step(x, h, cc, w);
                       return add(probe(hn, 5), probe(cn, 6));
                     },
                     {{"x", x}, {"h", h}, {"c", cc}, {"w_x", w.w_x},
                      {"w_h", w.w_h}, {"b", w.b}}));
      }
      return r;
    });
    c.emplace_back("blstm", [ragged] {
      return check_layer("blstm", [](Store& s) {
        return std::make_unique<Blstm<double>>(s, "l", 3, 2);
      }, {2, 4, 3}, Layout::kFrames, ragged);
    });
    c.emplace_back("convlstm_step", [] {
      GradSuiteResult r{"convlstm_step"};
      for (int s = 0; s < kDraws; ++s) {
        std::mt19937_64 rng(300 + s);
        ConvLstmWeights<double> w{rand_tensor({8, 3, 3, 1}, rng),
                                  rand_tensor({8, 2, 3, 1}, rng),
                                  rand_tensor({8}, rng)};
        auto x = rand_tensor({2, 3, 4}, rng), h = rand_tensor({2, 2, 4}, rng),
             cc = rand_tensor({2, 2, 4}, rng);
        merge(r, finite_difference_check(
                     [&] {
                       auto [hn, cn] = convlstm_step(x, h, cc, w);
                       return add(probe(hn, 7), probe(cn, 8));
                     },
                     {{"x", x}, {"h", h}, {"c", cc}, {"w_x", w.w_x},
                      {"w_h", w.w_h}, {"b", w.b}}));
      }
      return r;
    });
    c.emplace_back("conv2d", [] {
      GradSuiteResult r{"conv2d"};
      for (int s = 0; s < kDraws; ++s) {
        std::mt19937_64 rng(400 + s);
        auto x = rand_tensor({2, 2, 5, 6}, rng), f = rand_tensor({3, 2, 3, 3}, rng);
        merge(r, finite_difference_check(
                     [&] { return probe(conv2d(x, f, 1, 2, Padding::kSame), 9); },
                     {{"input", x}, {"filters", f}}));
        merge(r, finite_difference_check(
                     [&] { return probe(conv2d(x, f, 2, 1, Padding::kValid), 10); },
                     {{"input", x}, {"filters", f}}));
      }
      return r;
    });
    c.emplace_back("batch_norm", [ragged] {
      return check_layer("batch_norm", [](Store& s) {
        return std::make_unique<BatchNorm<double>>(s, "bn", 2);
      }, {2, 2, 3, 4}, Layout::kSpatial, ragged);
    });
    c.emplace_back("nin", [ragged] {
      return check_layer("nin", [](Store& s) {
        std::vector<LayerPtr<double>> inner;
        inner.push_back(std::make_unique<Blstm<double>>(s, "l0", 4, 2));
        inner.push_back(std::make_unique<Conv<double>>(s, "c", 4, 4, 1, 1, 1));
        inner.push_back(std::make_unique<BatchNorm<double>>(s, "bn", 4));
        inner.push_back(std::make_unique<Relu<double>>());
        inner.push_back(std::make_unique<Blstm<double>>(s, "l1", 4, 2));
        return std::make_unique<Sequential<double>>(std::move(inner));
      }, {2, 4, 4}, Layout::kFrames, ragged);
    });
    c.emplace_back("projected_subsample", [] {
      return check_layer("projected_subsample", [](Store& s) {
        return std::make_unique<ProjectedSubsample<double>>(s, "p", 3);
      }, {2, 5, 3}, Layout::kFrames, {5, 4});
    });
    c.emplace_back("res_cnn", [ragged] {
      return check_layer("res_cnn", [](Store& s) { return make_res_cnn<double>(s, "r", 2); },
                         {2, 2, 3, 4}, Layout::kSpatial, ragged);
    });
    c.emplace_back("res_convlstm", [ragged] {
      return check_layer("res_convlstm", [](Store& s) {
        return make_res_convlstm<double>(s, "r", 2, 3, 1);
      }, {2, 2, 3, 4}, Layout::kSpatial, ragged);
    });
    c.emplace_back("res_lstm", [ragged] {
      return check_layer("res_lstm", [](Store& s) { return make_res_lstm<double>(s, "r", 4); },
                         {2, 4, 4}, Layout::kFrames, ragged);
    });
    c.emplace_back("attention", [] {
      GradSuiteResult r{"attention"};
      for (int s = 0; s < kDraws; ++s) {
        LasModel<double> m(micro_config(), 200 + s);
        std::mt19937_64 rng(s);
        perturb(m.params(), rng);
        auto h = rand_tensor({2, 3, 6}, rng), sv = rand_tensor({2, 3}, rng);
        auto params = model_params(m, true);
        params.push_back({"h", h});
        params.push_back({"s", sv});
        merge(r, finite_difference_check(
                     [&] {
                       auto [ctx, alpha] = m.attend(
                           sv, m.prepare_attention(EncoderOutput<double>{h, {3, 2}}));
                       return add(probe(ctx, 1), probe(alpha, 2));
                     },
                     params));
      }
      return r;
    });
    c.emplace_back("decode_step", [] {
      GradSuiteResult r{"decode_step"};
      for (int s = 0; s < kDraws; ++s) {
        LasModel<double> m(micro_config(), 210 + s);
        std::mt19937_64 rng(10 + s);
        perturb(m.params(), rng);
        auto h = rand_tensor({2, 3, 6}, rng), sv = rand_tensor({2, 3}, rng),
             c0 = rand_tensor({2, 3}, rng), ctx0 = rand_tensor({2, 6}, rng);
        auto params = model_params(m, true);
        params.push_back({"h", h});
        params.push_back({"s", sv});
        params.push_back({"c", c0});
        params.push_back({"context", ctx0});
        const std::vector<std::int64_t> prev{2, 3};
        merge(r, finite_difference_check(
                     [&] {
                       auto cache = m.prepare_attention(EncoderOutput<double>{h, {3, 2}});
                       auto [state, logp] =
                           m.decode_step(prev, DecoderState<double>{sv, c0, ctx0}, cache);
                       return add(probe(logp, 3), probe(state.c, 4));
                     },
                     params));
      }
      return r;
    });
    c.emplace_back("las", [] {
      // T = 6 frames, U = 3 encoder steps, |V| = 4, hidden 3.
      GradSuiteResult r{"las"};
      for (int s = 0; s < kDraws; ++s) {
        LasModel<double> m(micro_config(), 300 + s);
        std::mt19937_64 rng(20 + s);
        perturb(m.params(), rng);
        auto x = rand_tensor({2, 6, 2}, rng);
        auto params = model_params(m, false);
        params.push_back({"features", x});
        const std::vector<std::vector<std::int64_t>> y{{2, 3, 2, 1}, {3, 1}};
        merge(r, finite_difference_check(
                     [&] { return m.loss(x, {6, 4}, y, Mode::kTrain); }, params));
      }
      return r;
    });
    return c;
  }();
  return all;
}

}  // namespace

const std::vector<std::string>& gradient_suite_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> n;
    for (const auto& [name, fn] : checks()) n.push_back(name);
    return n;
  }();
  return names;
}

std::vector<GradSuiteResult> run_gradient_suite(std::string_view only) {
  std::vector<GradSuiteResult> out;
  for (const auto& [name, fn] : checks()) {
    if (!only.empty() && only != name) continue;
    const auto t0 = std::chrono::steady_clock::now();
    GradSuiteResult r = fn();
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    out.push_back(std::move(r));
  }
  if (!only.empty() && out.empty())
    throw std::invalid_argument("gradcheck: unknown module '" + std::string(only) + "'");
  return out;
}

}  // namespace deeplas
