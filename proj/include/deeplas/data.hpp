// Copyright 2026 The deeplas Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace deeplas {

struct Utterance {
  std::string id;
  std::string speaker;
  std::int64_t frames = 0;
  std::int64_t dims = 0;
  std::vector<float> features;  // frames x dims, row-major
  std::string transcript;
};

using Dataset = std::vector<Utterance>;

// Toy speech: each character renders as a fixed random spectral template
// held for a random number of frames, plus Gaussian noise and a per-speaker
// offset. Templates and speaker offsets depend only on template_seed, so
// datasets drawn with different seeds share them.
struct SynthSpec {
  std::string vocab = "abcdefghij ";
  std::int64_t freq_bins = 8;
  std::int64_t min_frames_per_char = 3;
  std::int64_t max_frames_per_char = 6;
  std::int64_t min_chars = 4;
  std::int64_t max_chars = 10;
  double noise_std = 0.1;
  double speaker_offset_std = 0.5;
  std::int64_t speakers = 3;
  std::uint64_t template_seed = 1234;

  void validate() const;
};

// Static features only (dims == freq_bins).
Dataset synthesize(const SynthSpec& spec, std::int64_t n_utts,
                   std::uint64_t seed);
// synthesize, then add_deltas(window 2), then normalize_per_speaker.
Dataset synthesize_features(const SynthSpec& spec, std::int64_t n_utts,
                            std::uint64_t seed);
// Per-character templates [vocab.size() x freq_bins].
std::vector<std::vector<double>> char_templates(const SynthSpec& spec);

inline constexpr int kDeltaWindow = 2;

// [static; delta; delta-delta] per frame, regression deltas with edge
// frames replicated. features is frames x dims.
std::vector<float> add_deltas(std::span<const float> features,
                              std::int64_t frames, std::int64_t dims,
                              int window = kDeltaWindow);
void add_deltas(Dataset& data, int window = kDeltaWindow);

inline constexpr double kStdFloor = 1e-6;
// Per speaker and dimension: subtract the mean, divide by the std (floored).
void normalize_per_speaker(Dataset& data);

class FeatureFileError : public std::runtime_error {
 public:
  enum class Kind { kIo, kBadMagic, kTruncated, kDuplicateId, kInvalid };
  FeatureFileError(Kind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

// FBK1 little-endian layout: "FBK1", u32 count; per utterance u16 id length
// + id, u16 speaker length + speaker, u32 frames, u32 dims, frames * dims
// float32, u32 transcript length + transcript.
void write_features(const std::filesystem::path& path, const Dataset& data);
Dataset read_features(const std::filesystem::path& path);
std::string encode_features(const Dataset& data);
Dataset decode_features(std::string_view bytes, const std::string& origin = "");

// "id<TAB>text" lines.
std::vector<std::pair<std::string, std::string>> read_transcripts(
    const std::filesystem::path& path);
void apply_transcripts(Dataset& data,
                       const std::vector<std::pair<std::string, std::string>>& t);

}  // namespace deeplas
