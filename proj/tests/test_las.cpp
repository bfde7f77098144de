// Copyright 2026 The deeplas Authors.
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "deeplas/gradcheck.hpp"
#include "deeplas/las.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace deeplas;
using deeplas::testing::random_tensor;
using deeplas::testing::weighted_sum;

namespace {

ModelConfig micro_config(const std::string& arch = "L + P/2 + L") {
  ModelConfig c;
  c.arch = arch;
  c.input = {2, 1};
  c.hidden = 3;
  c.channels = 2;
  c.decoder_hidden = 3;
  c.vocab = "ab";  // |V| = 4
  return c;
}

template <typename T>
void zero_param(LasModel<T>& m, const std::string& name) {
  for (auto& v : m.params().value(*m.params().find(name)).mutable_data()) v = 0;
}

template <typename T>
void perturb_all(LasModel<T>& m, std::uint64_t seed, double scale = 0.3) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> d(-scale, scale);
  for (std::size_t i = 0; i < m.params().size(); ++i) {
    for (auto& v : m.params().value(i).mutable_data()) v += T(d(rng));
  }
}

}  // namespace

TEST_CASE("vocabulary") {
  const auto v = Vocabulary::from_chars("abc ");
  CHECK(v.size() == 6);
  CHECK(v.token(Vocabulary::kSos) == "<sos>");
  CHECK(v.token(Vocabulary::kEos) == "<eos>");
  CHECK(v.encode("ca b") == std::vector<std::int64_t>{4, 2, 5, 3, 1});
  const std::vector<std::int64_t> ids{0, 4, 2, 1, 3};
  CHECK(v.decode(ids) == "ca");
  CHECK_THROWS_AS(v.encode("abd"), std::invalid_argument);
  CHECK_THROWS_AS(Vocabulary::from_chars("aba"), std::invalid_argument);
  CHECK_THROWS_AS(Vocabulary::from_chars(""), std::invalid_argument);
}

TEST_CASE("listen reduces time by the graph factor") {
  ModelConfig c = micro_config("L x 3");
  c.baseline_subsample = true;
  LasModel<double> m(c, 1);
  std::mt19937_64 rng(1);
  auto enc = m.listen(random_tensor({1, 100, 2}, rng, -1, 1, false), {100},
                      Mode::kInfer);
  CHECK(enc.h.shape() == Shape{1, 25, 6});
  CHECK(enc.lengths == std::vector<std::int64_t>{25});
  CHECK_THROWS_AS(m.listen(random_tensor({1, 3, 2}, rng, -1, 1, false), {3},
                           Mode::kInfer),
                  std::invalid_argument);

  LasModel<double> flat(micro_config("L"), 1);
  enc = flat.listen(random_tensor({2, 7, 2}, rng, -1, 1, false), {7, 5},
                    Mode::kInfer);
  CHECK(enc.h.dim(1) == 7);
  CHECK(enc.lengths == std::vector<std::int64_t>{7, 5});
}

TEST_CASE("encoder parameter count matches the elaborated graph") {
  for (const char* arch :
       {"(L + P/2 + B + R) x 2 + L", "(C(3x3)/2) x 2 + ResCNN x 2 + NiN",
        "(C(3x3)/2) x 2 + ResConvLSTM(3x1) x 2 + NiN", "ConvLSTM x 3",
        "L + ResLSTM"}) {
    ModelConfig c;
    c.arch = arch;
    c.hidden = 4;
    c.channels = 2;
    c.decoder_hidden = 5;
    if (std::string(arch) == "L + ResLSTM") c.hidden = 3;
    LasModel<float> m(c, 2);
    std::int64_t enc = 0;
    for (std::size_t i = 0; i < m.params().size(); ++i) {
      if (m.params().name(i).rfind("enc.", 0) == 0) {
        enc += m.params().value(i).numel();
      }
    }
    INFO(arch);
    CHECK(enc == m.graph().params);
  }
}

TEST_CASE("attention with equal scores averages the valid frames") {
  LasModel<double> m(micro_config(), 3);
  zero_param(m, "att.w_s");
  zero_param(m, "att.w_h");
  std::mt19937_64 rng(3);
  EncoderOutput<double> enc{random_tensor({2, 4, 6}, rng, -1, 1, false), {4, 1}};
  auto cache = m.prepare_attention(enc);
  auto [ctx, alpha] = m.attend(random_tensor({2, 3}, rng), cache);
  for (int u = 0; u < 4; ++u) CHECK(alpha.data()[u] == doctest::Approx(0.25));
  CHECK(alpha.data()[4] == doctest::Approx(1.0));
  for (int u = 1; u < 4; ++u) CHECK(alpha.data()[4 + u] == 0.0);
  for (int e = 0; e < 6; ++e) {
    double mean = 0;
    for (int u = 0; u < 4; ++u) mean += enc.h.data()[u * 6 + e] / 4;
    CHECK(ctx.data()[e] == doctest::Approx(mean));
    CHECK(ctx.data()[6 + e] == doctest::Approx(enc.h.data()[4 * 6 + e]));
  }
}

TEST_CASE("attention weights are a distribution over valid frames") {
  for (int s = 0; s < 20; ++s) {
    LasModel<double> m(micro_config(), 10 + s);
    perturb_all(m, s, 1.0);
    std::mt19937_64 rng(s);
    EncoderOutput<double> enc{random_tensor({3, 5, 6}, rng, -2, 2, false),
                              {5, 2, 4}};
    auto [ctx, alpha] =
        m.attend(random_tensor({3, 3}, rng, -2, 2), m.prepare_attention(enc));
    for (int b = 0; b < 3; ++b) {
      double total = 0;
      for (int u = 0; u < 5; ++u) {
        const double a = alpha.data()[b * 5 + u];
        CHECK(a >= 0.0);
        if (u >= enc.lengths[b]) CHECK(a == 0.0);
        total += a;
      }
      CHECK(std::abs(total - 1.0) < 1e-6);
    }
  }
}

TEST_CASE("decode step distributions") {
  LasModel<double> m(micro_config(), 4);
  std::mt19937_64 rng(4);
  EncoderOutput<double> enc{random_tensor({2, 3, 6}, rng, -1, 1, false), {3, 2}};
  auto cache = m.prepare_attention(enc);
  const std::vector<std::int64_t> sos{0, 0};
  auto [state, logp] = m.decode_step(sos, m.initial_state(2), cache);
  for (int b = 0; b < 2; ++b) {
    double total = 0;
    for (int v = 0; v < 4; ++v) total += std::exp(logp.data()[b * 4 + v]);
    CHECK(std::abs(total - 1.0) < 1e-6);
  }
  zero_param(m, "out.w");
  zero_param(m, "out.b");
  auto uniform = m.decode_step(sos, state, cache).second;
  for (double v : uniform.data()) {
    CHECK(v == doctest::Approx(-std::log(4.0)));
    CHECK(std::exp(v) == doctest::Approx(0.25));
  }
  const std::vector<std::int64_t> bad{0, 4};
  CHECK_THROWS(m.decode_step(bad, state, cache));
}

TEST_CASE("sequence log-probability") {
  LasModel<double> m(micro_config(), 5);
  std::mt19937_64 rng(5);
  auto x = random_tensor({1, 6, 2}, rng, -1, 1, false);
  const std::vector<std::vector<std::int64_t>> y{{2, 3, 1}};

  // Replay with decode_step and sum the per-step log-probs.
  auto enc = m.listen(x, {6}, Mode::kInfer);
  auto cache = m.prepare_attention(enc);
  auto state = m.initial_state(1);
  std::int64_t prev = Vocabulary::kSos;
  double replay = 0;
  for (auto tok : y[0]) {
    auto [s, logp] = m.decode_step(std::span<const std::int64_t>(&prev, 1),
                                   state, cache);
    state = s;
    replay += logp.data()[tok];
    prev = tok;
  }
  const double lp = m.sequence_log_probs(x, {6}, y, Mode::kInfer)[0];
  CHECK(lp == doctest::Approx(replay).epsilon(1e-12));
  CHECK(lp <= 0.0);

  zero_param(m, "out.w");
  zero_param(m, "out.b");
  CHECK(m.sequence_log_probs(x, {6}, y, Mode::kInfer)[0] ==
        doctest::Approx(3 * std::log(0.25)));
  CHECK_THROWS_AS(m.sequence_log_probs(x, {6}, {{2, 7, 1}}, Mode::kInfer),
                  std::invalid_argument);
  CHECK_THROWS_AS(m.sequence_log_probs(x, {6}, {{2, 3}}, Mode::kInfer),
                  std::invalid_argument);
}

TEST_CASE("sequence log-probability is permutation sensitive") {
  int differ = 0;
  for (int s = 0; s < 50; ++s) {
    LasModel<double> m(micro_config(), 100 + s);
    perturb_all(m, s);
    std::mt19937_64 rng(s);
    auto x = random_tensor({1, 6, 2}, rng, -1, 1, false);
    const auto a = m.sequence_log_probs(x, {6}, {{2, 3, 2, 1}}, Mode::kInfer);
    const auto b = m.sequence_log_probs(x, {6}, {{3, 2, 2, 1}}, Mode::kInfer);
    differ += a[0] != b[0];
  }
  CHECK(differ == 50);
}

TEST_CASE("attention and decode step gradients") {
  for (int s = 0; s < 5; ++s) {
    LasModel<double> m(micro_config(), 200 + s);
    perturb_all(m, s);
    std::mt19937_64 rng(s);
    auto h = random_tensor({2, 3, 6}, rng);
    auto sv = random_tensor({2, 3}, rng);
    auto c0 = random_tensor({2, 3}, rng);
    auto ctx0 = random_tensor({2, 6}, rng);
    std::vector<NamedTensor> params{{"h", h}, {"s", sv}, {"c", c0},
                                    {"context", ctx0}};
    for (std::size_t i = 0; i < m.params().size(); ++i) {
      if (m.params().name(i).rfind("enc.", 0) != 0) {
        params.push_back({m.params().name(i), m.params().value(i)});
      }
    }
    const std::vector<std::int64_t> prev{2, 3};
    auto attention = finite_difference_check(
        [&] {
          auto [ctx, alpha] =
              m.attend(sv, m.prepare_attention(EncoderOutput<double>{h, {3, 2}}));
          return add(weighted_sum(ctx, 1), weighted_sum(alpha, 2));
        },
        params);
    CHECK(attention.max_rel_error < 1e-4);
    auto step = finite_difference_check(
        [&] {
          auto cache = m.prepare_attention(EncoderOutput<double>{h, {3, 2}});
          auto [state, logp] =
              m.decode_step(prev, DecoderState<double>{sv, c0, ctx0}, cache);
          return add(weighted_sum(logp, 3), weighted_sum(state.c, 4));
        },
        params);
    CHECK(step.max_rel_error < 1e-4);
  }
}

TEST_CASE("micro LAS end-to-end gradient") {
  // T = 6 frames, U = 3 encoder steps, |V| = 4, hidden 3.
  for (int s = 0; s < 3; ++s) {
    LasModel<double> m(micro_config(), 300 + s);
    perturb_all(m, s);
    std::mt19937_64 rng(s);
    auto x = random_tensor({2, 6, 2}, rng);
    std::vector<NamedTensor> params{{"features", x}};
    for (std::size_t i = 0; i < m.params().size(); ++i) {
      params.push_back({m.params().name(i), m.params().value(i)});
    }
    const std::vector<std::vector<std::int64_t>> y{{2, 3, 2, 1}, {3, 1}};
    auto report = finite_difference_check(
        [&] {
          auto enc = m.listen(x, {6, 4}, Mode::kTrain);
          CHECK(enc.h.dim(1) == 3);
          return sum(m.score(enc, y).log_probs);
        },
        params);
    INFO("worst " << report.worst_param);
    CHECK(report.max_rel_error < 1e-4);
  }
}

TEST_CASE("per-utterance loss does not depend on batch company") {
  for (const char* arch : {"(L + P/2 + B + R) x 2 + L",
                           "(C(3x3)/2) x 2 + ResConvLSTM(3x1) + NiN"}) {
    ModelConfig c;
    c.arch = arch;
    c.hidden = 8;
    c.channels = 4;
    c.decoder_hidden = 8;
    LasModel<float> m(c, 7);
    std::mt19937_64 rng(7);
    auto a = random_tensor<float>({1, 13, 24}, rng, -1, 1, false);
    auto b = random_tensor<float>({1, 21, 24}, rng, -1, 1, false);
    std::vector<float> joint(2 * 21 * 24, 0.0f);
    std::copy(a.data().begin(), a.data().end(), joint.begin());
    std::copy(b.data().begin(), b.data().end(), joint.begin() + 21 * 24);
    const std::vector<std::int64_t> ya{2, 5, 1}, yb{4, 4, 3, 7, 1};
    auto both = m.sequence_log_probs(Tensor<float>({2, 21, 24}, joint), {13, 21},
                                     {ya, yb}, Mode::kInfer);
    auto alone = m.sequence_log_probs(a, {13}, {ya}, Mode::kInfer);
    INFO(arch);
    CHECK(std::abs(both[0] - alone[0]) < 1e-5);
    alone = m.sequence_log_probs(b, {21}, {yb}, Mode::kInfer);
    CHECK(std::abs(both[1] - alone[0]) < 1e-5);
  }
}
