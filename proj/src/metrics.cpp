// Copyright 2026 The deeplas Authors.
// SPDX-License-Identifier: Apache-2.0

#include "deeplas/metrics.hpp"

namespace deeplas {

std::vector<std::string> split_words(std::string_view text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && text[i] == ' ') ++i;
    const std::size_t start = i;
    while (i < text.size() && text[i] != ' ') ++i;
    if (i > start) out.emplace_back(text.substr(start, i - start));
  }
  return out;
}

double character_error_rate(std::string_view ref, std::string_view hyp) {
  if (ref.empty()) throw MetricError("CER: empty reference");
  return static_cast<double>(edit_distance(ref, hyp).distance) /
         static_cast<double>(ref.size());
}

double word_error_rate(std::string_view ref, std::string_view hyp) {
  const auto r = split_words(ref);
  if (r.empty()) throw MetricError("WER: empty reference");
  return static_cast<double>(edit_distance(r, split_words(hyp)).distance) /
         static_cast<double>(r.size());
}

void ErrorCounter::add(std::string_view ref, std::string_view hyp) {
  char_errors_ += edit_distance(ref, hyp).distance;
  char_total_ += static_cast<std::int64_t>(ref.size());
  const auto r = split_words(ref);
  word_errors_ += edit_distance(r, split_words(hyp)).distance;
  word_total_ += static_cast<std::int64_t>(r.size());
}

double ErrorCounter::cer() const {
  if (char_total_ == 0) throw MetricError("CER: empty references");
  return static_cast<double>(char_errors_) / static_cast<double>(char_total_);
}

double ErrorCounter::wer() const {
  if (word_total_ == 0) throw MetricError("WER: empty references");
  return static_cast<double>(word_errors_) / static_cast<double>(word_total_);
}

}  // namespace deeplas
