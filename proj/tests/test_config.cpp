// Copyright 2026 The deeplas Authors.
// SPDX-License-Identifier: Apache-2.0

#include <filesystem>
#include <fstream>

#include "deeplas/config.hpp"
#include "deeplas/gradsuite.hpp"
#include "doctest.h"

using namespace deeplas;

namespace {

std::string error_of(std::string_view text) {
  try {
    parse_run_config(text, "cfg");
  } catch (const ConfigError& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_CASE("run config: every documented key is read") {
  const RunConfig c = parse_run_config(
      "# comment\n"
      "arch = (C(3x3)/2) x 2 + NiN\n"
      "lr = 2e-3\n lr_decayed = 3e-4\n"
      "clip_norm = 0.5\nweight_noise = 0.01\nl2 = 0\n"
      "batch_size = 4\neval_every = 7\npatience = 5\nmax_steps = 99\n"
      "vocab = \"ab \"\n"
      "train_data = t.fbk\ndev_data = /abs/d.fbk\nseed = 42\n"
      "hidden = 16\ndecoder_hidden = 12\nchannels = 4\ninput_channels = 1\n"
      "baseline_subsample = true\nstop_after_decay = 2\nout_dir = o\n",
      "cfg", "/base");
  CHECK(c.model.arch == "(C(3x3)/2) x 2 + NiN");
  CHECK(c.train.lr_initial == 2e-3);
  CHECK(c.train.lr_decayed == 3e-4);
  CHECK(c.train.clip_norm == 0.5);
  CHECK(c.train.weight_noise_std == 0.01);
  CHECK(c.train.l2 == 0.0);
  CHECK(c.train.batch_size == 4);
  CHECK(c.train.eval_every == 7);
  CHECK(c.train.patience == 5);
  CHECK(c.train.max_steps == 99);
  CHECK(c.model.vocab == "ab ");
  CHECK(c.train_data == std::filesystem::path("/base/t.fbk"));
  CHECK(c.dev_data == std::filesystem::path("/abs/d.fbk"));
  CHECK(c.train.out_dir == std::filesystem::path("/base/o"));
  CHECK(c.train.seed == 42);
  CHECK(c.model.hidden == 16);
  CHECK(c.model.decoder_hidden == 12);
  CHECK(c.model.channels == 4);
  CHECK(c.model.input.channels == 1);
  CHECK(c.model.baseline_subsample);
  CHECK(c.train.stop_after_decay == 2);
  CHECK(run_config_keys().size() == 21);
}

TEST_CASE("run config: defaults follow the training recipe") {
  const RunConfig c = parse_run_config("");
  CHECK(c.train.clip_norm == 1.0);
  CHECK(c.train.weight_noise_std == 0.075);
  CHECK(c.train.l2 == 1e-5);
  CHECK(c.train.lr_initial == 1e-3);
  CHECK(c.train.lr_decayed == 1e-4);
  CHECK(c.train.patience == 3);
  CHECK(c.train.out_dir == std::filesystem::path("run"));
}

TEST_CASE("run config: errors name the key") {
  CHECK(error_of("learning_rate = 1").find("'learning_rate'") != std::string::npos);
  CHECK(error_of("lr = fast").find("'lr'") != std::string::npos);
  CHECK(error_of("batch_size = 2.5").find("'batch_size'") != std::string::npos);
  CHECK(error_of("seed = 1\nseed = 2").find("'seed'") != std::string::npos);
  CHECK(error_of("baseline_subsample = maybe").find("'baseline_subsample'") !=
        std::string::npos);
  CHECK(error_of("just words").find("cfg:1") != std::string::npos);
  CHECK(error_of("lr = 1e-4\nlr_decayed = 1e-3").find("lr_decayed") != std::string::npos);
  CHECK(error_of("lr = 1e-3").empty());
}

TEST_CASE("run config: missing file names the path") {
  try {
    load_run_config("/no/such/dir/x.cfg");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("/no/such/dir/x.cfg") != std::string::npos);
  }
}

TEST_CASE("run config: file paths resolve next to the config") {
  const auto dir = std::filesystem::temp_directory_path() / "deeplas_cfg_test";
  std::filesystem::create_directories(dir);
  {
    std::ofstream f(dir / "a.cfg");
    f << "train_data = data/train.fbk\n";
  }
  const RunConfig c = load_run_config(dir / "a.cfg");
  CHECK(c.train_data == dir / "data/train.fbk");
  std::filesystem::remove_all(dir);
}

TEST_CASE("synth spec") {
  const SynthJob j = parse_synth_spec(
      "vocab = \"xy \"\nfreq_bins = 4\nmin_frames = 2\nmax_frames = 3\n"
      "min_chars = 1\nmax_chars = 2\nnoise_std = 0\nspeaker_offset_std = 0.1\n"
      "speakers = 2\ntemplate_seed = 9\nn_utts = 5\nseed = 7\n"
      "deltas = false\nnormalize = 0\n");
  CHECK(j.spec.vocab == "xy ");
  CHECK(j.spec.freq_bins == 4);
  CHECK(j.spec.min_frames_per_char == 2);
  CHECK(j.spec.max_frames_per_char == 3);
  CHECK(j.spec.max_chars == 2);
  CHECK(j.spec.noise_std == 0.0);
  CHECK(j.spec.speakers == 2);
  CHECK(j.spec.template_seed == 9);
  CHECK(j.n_utts == 5);
  CHECK(j.seed == 7);
  CHECK_FALSE(j.deltas);
  CHECK_FALSE(j.normalize);
  CHECK_THROWS_AS(parse_synth_spec("vocab = aa"), ConfigError);
  CHECK_THROWS_AS(parse_synth_spec("n_utts = 0"), ConfigError);
  CHECK_THROWS_AS(parse_synth_spec("frames = 3"), ConfigError);
}

TEST_CASE("gradient suite filter") {
  const auto one = run_gradient_suite("lstm_step");
  REQUIRE(one.size() == 1);
  CHECK(one[0].name == "lstm_step");
  CHECK(one[0].max_rel_error < kGradTolerance);
  CHECK(gradient_suite_names().size() == 13);
  CHECK_THROWS_AS(run_gradient_suite("nope"), std::invalid_argument);
}
