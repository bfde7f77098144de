// Copyright 2026 The deeplas Authors.
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "deeplas/batch.hpp"
#include "deeplas/ops.hpp"
#include "deeplas/train.hpp"
#include "doctest.h"

using namespace deeplas;

namespace {

ModelConfig micro_config(const std::string& arch = "L + P/2 + L") {
  ModelConfig c;
  c.arch = arch;
  c.input = {2, 1};
  c.hidden = 3;
  c.channels = 2;
  c.decoder_hidden = 3;
  c.vocab = "ab";
  return c;
}

Dataset micro_data(std::int64_t n, std::uint64_t seed) {
  SynthSpec s;
  s.vocab = "ab";
  s.freq_bins = 2;
  s.min_chars = 1;
  s.max_chars = 3;
  s.speakers = 1;
  Dataset d = synthesize(s, n, seed);
  normalize_per_speaker(d);
  return d;
}

std::vector<std::span<double>> spans(std::vector<std::vector<double>>& v) {
  std::vector<std::span<double>> out;
  for (auto& x : v) out.emplace_back(x);
  return out;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream f(p);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

}  // namespace

TEST_CASE("clip_by_global_norm: worked examples") {
  std::vector<std::vector<double>> g{{3.0}, {4.0}};
  auto r = clip_by_global_norm<double>(spans(g), 1.0);
  CHECK(r.norm == doctest::Approx(5.0));
  CHECK(r.clipped_norm == doctest::Approx(1.0));
  CHECK(g[0][0] == doctest::Approx(0.6).epsilon(1e-15));
  CHECK(g[1][0] == doctest::Approx(0.8).epsilon(1e-15));

  std::vector<std::vector<double>> two{{2.0, 0.0}};
  clip_by_global_norm<double>(spans(two), 1.0);
  CHECK(two[0][0] == doctest::Approx(1.0));

  std::vector<std::vector<double>> small{{0.3, 0.4}};
  r = clip_by_global_norm<double>(spans(small), 1.0);
  CHECK(small[0][0] == 0.3);
  CHECK(small[0][1] == 0.4);
  CHECK(r.norm == doctest::Approx(0.5));

  std::vector<std::vector<double>> bad{{1.0, NAN}};
  r = clip_by_global_norm<double>(spans(bad), 1.0);
  CHECK_FALSE(r.finite);
  CHECK(bad[0][0] == 1.0);
  CHECK_THROWS(clip_by_global_norm<double>(spans(g), 0.0));
}

TEST_CASE("clip_by_global_norm: bound and direction (property)") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n(0, 1);
  std::uniform_real_distribution<double> scale(0.01, 20.0);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<std::vector<double>> g(1 + trial % 4);
    const double s = scale(rng);
    for (auto& v : g) {
      v.resize(1 + rng() % 50);
      for (auto& x : v) x = s * n(rng);
    }
    const auto before = g;
    const double max_norm = 0.5 + (trial % 3);
    const auto r = clip_by_global_norm<double>(spans(g), max_norm);
    double sq = 0, dot = 0, sq0 = 0;
    for (std::size_t i = 0; i < g.size(); ++i)
      for (std::size_t k = 0; k < g[i].size(); ++k) {
        sq += g[i][k] * g[i][k];
        sq0 += before[i][k] * before[i][k];
        dot += g[i][k] * before[i][k];
      }
    CHECK(std::sqrt(sq) <= max_norm + 1e-6);
    CHECK(r.clipped_norm <= max_norm + 1e-6);
    CHECK(dot / std::sqrt(sq * sq0) == doctest::Approx(1.0).epsilon(1e-7));
  }
}

TEST_CASE("adam: single step, fixed point, symmetry") {
  std::vector<std::vector<double>> p{{1.0, 1.0}};
  std::vector<std::vector<double>> g{{0.1, 0.1}};
  Adam<double> adam(std::vector<std::int64_t>{2});
  std::vector<std::span<double>> ps{p[0]};
  std::vector<std::span<const double>> gs{g[0]};
  adam.step(ps, gs, 1e-3);
  // m-hat = 0.1, v-hat = 0.01: update = 1e-3 * 0.1 / (0.1 + 1e-8).
  CHECK(p[0][0] - 1.0 == doctest::Approx(-1e-3 * 0.1 / (0.1 + 1e-8)).epsilon(1e-9));
  CHECK(p[0][0] == p[0][1]);
  CHECK(adam.steps() == 1);

  std::vector<std::vector<double>> q{{0.5, -2.0, 3.0}};
  std::vector<std::vector<double>> z{{0.0, 0.0, 0.0}};
  Adam<double> fresh(std::vector<std::int64_t>{3});
  for (int i = 0; i < 5; ++i) {
    std::vector<std::span<double>> qs{q[0]};
    std::vector<std::span<const double>> zs{z[0]};
    fresh.step(qs, zs, 1e-3);
  }
  CHECK(q[0] == std::vector<double>{0.5, -2.0, 3.0});
  // An empty gradient span means zero.
  std::vector<std::span<double>> qs{q[0]};
  std::vector<std::span<const double>> none{std::span<const double>{}};
  fresh.step(qs, none, 1e-3);
  CHECK(q[0] == std::vector<double>{0.5, -2.0, 3.0});
}

TEST_CASE("adam: matches a direct evaluation of the update over 20 steps") {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> n(0, 1);
  std::vector<double> p(7), ref;
  for (auto& x : p) x = n(rng);
  ref = p;
  std::vector<double> m(7, 0.0), v(7, 0.0);
  Adam<double> adam(std::vector<std::int64_t>{7});
  for (int t = 1; t <= 20; ++t) {
    std::vector<double> g(7);
    for (auto& x : g) x = n(rng);
    std::vector<std::span<double>> ps{p};
    std::vector<std::span<const double>> gs{g};
    const double lr = t < 10 ? 1e-3 : 1e-4;
    adam.step(ps, gs, lr);
    for (int k = 0; k < 7; ++k) {
      m[k] = 0.9 * m[k] + 0.1 * g[k];
      v[k] = 0.999 * v[k] + 0.001 * g[k] * g[k];
      const double mh = m[k] / (1 - std::pow(0.9, t));
      const double vh = v[k] / (1 - std::pow(0.999, t));
      ref[k] -= lr * mh / (std::sqrt(vh) + 1e-8);
    }
  }
  for (int k = 0; k < 7; ++k) CHECK(p[k] == doctest::Approx(ref[k]).epsilon(1e-12));
}

TEST_CASE("weight noise: statistics over 1e6 draws") {
  const auto v = weight_noise(1000000, 0.075, 42, 17, 3);
  double mean = 0;
  for (double x : v) mean += x;
  mean /= v.size();
  double var = 0;
  for (double x : v) var += (x - mean) * (x - mean);
  const double sd = std::sqrt(var / v.size());
  CHECK(std::abs(mean) < 3e-4);
  CHECK(std::abs(sd - 0.075) < 1e-3);
  CHECK(v == weight_noise(1000000, 0.075, 42, 17, 3));
  CHECK(weight_noise(10, 0.075, 42, 18, 3) != weight_noise(10, 0.075, 42, 17, 3));
  CHECK(weight_noise(10, 0.075, 42, 17, 4) != weight_noise(10, 0.075, 42, 17, 3));
}

TEST_CASE("weight noise: weights only, gradients reach clean parameters") {
  LasModel<double> m(micro_config(), 3);
  auto& store = m.params();
  {
    Tape<double> tape;
    TapeScope<double> scope(tape);
    apply_weight_noise(store, 0.075, 9, 4);
    for (std::size_t i = 0; i < store.size(); ++i) {
      const ParamRef r{i};
      const bool same = store.use(r).impl() == store.value(i).impl();
      CHECK(same != is_weight(store.kind(i)));
      if (is_weight(store.kind(i))) {
        const auto noisy = store.use(r).data();
        const auto clean = store.value(i).data();
        const auto expect = weight_noise(store.value(i).numel(), 0.075, 9, 4, i);
        for (std::size_t k = 0; k < clean.size(); ++k)
          CHECK(noisy[k] - clean[k] == doctest::Approx(expect[k]).epsilon(1e-9));
      }
    }
    const ParamRef w = *store.find("dec.embed");
    store.zero_grad();
    Tensor<double> loss = sum(store.use(w));
    tape.backward(loss);
    for (double g : store.value(w).grad()) CHECK(g == 1.0);
  }
  store.clear_overrides();

  // std == 0 leaves the forward bit-identical.
  Tensor<double> x(Shape{1, 4, 2}, {0.1, -0.2, 0.3, 0.4, -0.5, 0.6, 0.7, -0.8});
  const std::vector<std::vector<std::int64_t>> y{{2, 3, 1}};
  const double clean = m.loss(x, {4}, y, Mode::kInfer).item();
  apply_weight_noise(store, 0.0, 9, 4);
  CHECK(m.loss(x, {4}, y, Mode::kInfer).item() == clean);
  apply_weight_noise(store, 0.075, 9, 4);
  CHECK(m.loss(x, {4}, y, Mode::kInfer).item() != clean);
  store.clear_overrides();
}

TEST_CASE("l2 penalty: value and gradient over weights only") {
  LasModel<double> m(micro_config(), 4);
  auto& store = m.params();
  double expect = 0;
  for (std::size_t i = 0; i < store.size(); ++i)
    if (is_weight(store.kind(i)))
      for (double w : store.value(i).data()) expect += w * w;
  store.zero_grad();
  Tape<double> tape;
  Tensor<double> pen;
  {
    TapeScope<double> scope(tape);
    pen = l2_penalty(store, 1e-5);
  }
  CHECK(pen.item() == doctest::Approx(1e-5 * expect).epsilon(1e-12));
  tape.backward(pen);
  for (std::size_t i = 0; i < store.size(); ++i) {
    const auto& t = store.value(i);
    if (!is_weight(store.kind(i))) {
      CHECK_FALSE(t.has_grad());
      continue;
    }
    for (std::size_t k = 0; k < t.data().size(); ++k)
      CHECK(t.grad()[k] == doctest::Approx(2e-5 * t.data()[k]).epsilon(1e-12));
  }
}

TEST_CASE("bucket sampler: pure function of (seed, step), epochs cover all") {
  const Dataset d = micro_data(37, 1);
  const BucketSampler a(d, 8, 11), b(d, 8, 11), c(d, 8, 12);
  REQUIRE(a.bucket_count() == 5);
  bool differs = false;
  for (std::int64_t s = 0; s < 20; ++s) {
    CHECK(a.batch_at(s) == b.batch_at(s));
    differs = differs || a.batch_at(s) != c.batch_at(s);
  }
  CHECK(differs);
  // Random access agrees with sequential access.
  const auto later = a.batch_at(13);
  a.batch_at(2);
  CHECK(a.batch_at(13) == later);
  for (std::int64_t epoch = 0; epoch < 3; ++epoch) {
    std::multiset<std::size_t> seen;
    for (std::int64_t s = epoch * 5; s < epoch * 5 + 5; ++s) {
      const auto& batch = a.batch_at(s);
      seen.insert(batch.begin(), batch.end());
      std::int64_t lo = 1 << 30, hi = 0;
      for (auto i : batch) lo = std::min(lo, d[i].frames), hi = std::max(hi, d[i].frames);
      for (const auto& u : d)
        if (std::find(batch.begin(), batch.end(),
                      static_cast<std::size_t>(&u - d.data())) == batch.end())
          CHECK((u.frames <= lo || u.frames >= hi));
    }
    CHECK(seen.size() == d.size());
    CHECK(std::set<std::size_t>(seen.begin(), seen.end()).size() == d.size());
  }
}

TEST_CASE("batches: padding values do not change the loss") {
  const Dataset d = micro_data(6, 2);
  LasModel<float> m(micro_config(), 5);
  std::vector<std::size_t> idx{0, 1, 2, 3, 4, 5};
  Batch<float> b = make_batch<float>(d, idx, &m.vocab());
  NoTapeScope<float> no_tape;
  const float base = m.loss(b.features, b.lengths, b.targets, Mode::kTrain).item();
  auto data = b.features.mutable_data();
  const std::int64_t T = b.features.dim(1), D = b.features.dim(2);
  int padded = 0;
  for (std::size_t k = 0; k < idx.size(); ++k)
    for (std::int64_t t = b.lengths[k]; t < T; ++t)
      for (std::int64_t j = 0; j < D; ++j, ++padded) data[(k * T + t) * D + j] = 1e3f;
  CHECK(padded > 0);
  CHECK(m.loss(b.features, b.lengths, b.targets, Mode::kTrain).item() == base);
}

TEST_CASE("train loop: determinism, CSV schema, single decay") {
  const Dataset train = micro_data(24, 3), dev = micro_data(6, 4);
  TrainConfig c;
  c.max_steps = 12;
  c.eval_every = 2;
  c.batch_size = 4;
  c.seed = 9;
  // A vanishing step and no batch norm keep dev CER and loss flat, so the decay
  // fires after exactly `patience` evaluations.
  c.lr_initial = 1e-12;
  c.lr_decayed = 1e-13;
  c.patience = 2;
  const auto dir = std::filesystem::temp_directory_path() / "deeplas_train_test";
  std::filesystem::remove_all(dir);
  c.out_dir = dir / "a";
  LasModel<float> m1(micro_config("L x 2"), 6), m2(micro_config("L x 2"), 6);
  const auto r1 = train_loop(m1, train, dev, c);
  TrainConfig c2 = c;
  c2.out_dir = dir / "b";
  const auto r2 = train_loop(m2, train, dev, c2);
  REQUIRE(r1.steps.size() == 12);
  for (std::size_t i = 0; i < 10; ++i) CHECK(r1.steps[i].loss == r2.steps[i].loss);
  CHECK(r1.final_wer == r2.final_wer);
  CHECK(slurp(dir / "a" / "metrics.csv") == slurp(dir / "b" / "metrics.csv"));
  for (const auto& s : r1.steps) CHECK(s.clipped_norm <= c.clip_norm + 1e-6);

  std::ifstream csv(dir / "a" / "metrics.csv");
  std::string line;
  std::getline(csv, line);
  CHECK(line == "step,train_loss,dev_cer,dev_wer,lr");
  std::vector<double> lrs;
  while (std::getline(csv, line)) {
    std::vector<std::string> cols;
    std::stringstream ss(line);
    for (std::string col; std::getline(ss, col, ',');) cols.push_back(col);
    REQUIRE(cols.size() == 5);
    lrs.push_back(std::stod(cols[4]));
  }
  CHECK(lrs.size() == 6);
  int changes = 0;
  for (std::size_t i = 1; i < lrs.size(); ++i) changes += lrs[i] != lrs[i - 1];
  CHECK(changes == 1);
  CHECK(lrs.back() == doctest::Approx(1e-13));
  CHECK(r1.decay_step == 6);
  CHECK(std::filesystem::exists(dir / "a" / "last.ckpt"));
  CHECK(std::filesystem::exists(dir / "a" / "best.ckpt"));

  // Two evaluations after the decay the run ends early.
  TrainConfig c3 = c;
  c3.max_steps = 100;
  c3.stop_after_decay = 2;
  c3.out_dir.clear();
  LasModel<float> m3(micro_config("L x 2"), 6);
  const auto r3 = train_loop(m3, train, dev, c3);
  CHECK(r3.decay_step == 6);
  CHECK(r3.steps.size() == 10);
  std::filesystem::remove_all(dir);
}

TEST_CASE("train loop: evaluation ignores installed weight noise") {
  const Dataset dev = micro_data(8, 5);
  LasModel<float> m(micro_config(), 7);
  const auto a = evaluate(m, dev);
  apply_weight_noise(m.params(), 0.5, 1, 1);
  const auto b = evaluate(m, dev);
  CHECK(a.cer == b.cer);
  CHECK(a.hypotheses == b.hypotheses);
}

TEST_CASE("train loop: three non-finite steps abort") {
  Dataset train = micro_data(8, 6);
  for (auto& u : train) u.features[0] = NAN;
  const Dataset dev = micro_data(4, 7);
  LasModel<float> m(micro_config(), 8);
  TrainConfig c;
  c.max_steps = 10;
  c.batch_size = 4;
  CHECK_THROWS_AS(train_loop(m, train, dev, c), TrainingAborted);

  TrainConfig bad;
  bad.lr_decayed = bad.lr_initial;
  CHECK_THROWS(bad.validate());
  CHECK_THROWS(train_loop(m, Dataset{}, dev, TrainConfig{}));
}

TEST_CASE("train loop: a few hundred steps lower the loss") {
  const Dataset train = micro_data(64, 8), dev = micro_data(8, 9);
  LasModel<float> m(micro_config(), 10);
  TrainConfig c;
  c.max_steps = 300;
  c.eval_every = 300;
  c.batch_size = 8;
  const auto r = train_loop(m, train, dev, c);
  double first = 0, last = 0;
  for (int i = 0; i < 20; ++i) {
    first += r.steps[i].loss;
    last += r.steps[r.steps.size() - 1 - i].loss;
  }
  CHECK(last < first);
}
