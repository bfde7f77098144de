// Copyright 2026 The deeplas Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "deeplas/data.hpp"
#include "deeplas/las.hpp"
#include "deeplas/train.hpp"

namespace deeplas {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  ModelConfig model;
  TrainConfig train;
  std::filesystem::path train_data;
  std::filesystem::path dev_data;
};

// Flat UTF-8 "key = value" lines; '#' starts a comment. Unknown or repeated
// keys and malformed values throw ConfigError naming the key. Relative data
// and output paths resolve against `base_dir`.
RunConfig parse_run_config(std::string_view text, const std::string& origin = "",
                           const std::filesystem::path& base_dir = {});
RunConfig load_run_config(const std::filesystem::path& path);

// Keys accepted by parse_run_config.
const std::vector<std::string>& run_config_keys();

// Same syntax for the synthetic corpus: vocab, freq_bins, min_frames,
// max_frames, min_chars, max_chars, noise_std, speaker_offset_std, speakers,
// template_seed, n_utts, seed, deltas, normalize.
struct SynthJob {
  SynthSpec spec;
  std::int64_t n_utts = 100;
  std::uint64_t seed = 1;
  bool deltas = true;
  bool normalize = true;
};
SynthJob parse_synth_spec(std::string_view text, const std::string& origin = "");
SynthJob load_synth_spec(const std::filesystem::path& path);

}  // namespace deeplas
