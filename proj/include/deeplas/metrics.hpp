// Copyright 2026 The deeplas Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace deeplas {

struct EditStats {
  std::int64_t distance = 0;
  std::int64_t substitutions = 0;
  std::int64_t insertions = 0;
  std::int64_t deletions = 0;
};

// Unit-cost Levenshtein distance with one optimal alignment's operation
// counts. Works on any random-access sequence with ==.
template <typename Seq>
EditStats edit_distance(const Seq& ref, const Seq& hyp) {
  const std::size_t n = ref.size(), m = hyp.size();
  std::vector<std::int64_t> d((n + 1) * (m + 1));
  auto at = [&](std::size_t i, std::size_t j) -> std::int64_t& {
    return d[i * (m + 1) + j];
  };
  for (std::size_t i = 0; i <= n; ++i) at(i, 0) = static_cast<std::int64_t>(i);
  for (std::size_t j = 0; j <= m; ++j) at(0, j) = static_cast<std::int64_t>(j);
  for (std::size_t i = 1; i <= n; ++i)
    for (std::size_t j = 1; j <= m; ++j) {
      const std::int64_t sub = at(i - 1, j - 1) + (ref[i - 1] == hyp[j - 1] ? 0 : 1);
      at(i, j) = std::min({sub, at(i - 1, j) + 1, at(i, j - 1) + 1});
    }
  EditStats s;
  s.distance = at(n, m);
  std::size_t i = n, j = m;
  while (i > 0 || j > 0) {
    if (i > 0 && j > 0 &&
        at(i, j) == at(i - 1, j - 1) + (ref[i - 1] == hyp[j - 1] ? 0 : 1)) {
      if (!(ref[i - 1] == hyp[j - 1])) ++s.substitutions;
      --i, --j;
    } else if (i > 0 && at(i, j) == at(i - 1, j) + 1) {
      ++s.deletions;
      --i;
    } else {
      ++s.insertions;
      --j;
    }
  }
  return s;
}

// Words separated by single spaces; leading, trailing and repeated spaces
// produce no empty words.
std::vector<std::string> split_words(std::string_view text);

class MetricError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Throw MetricError on an empty reference.
double character_error_rate(std::string_view ref, std::string_view hyp);
double word_error_rate(std::string_view ref, std::string_view hyp);

// Corpus-level rates: summed distances over summed reference lengths.
class ErrorCounter {
 public:
  void add(std::string_view ref, std::string_view hyp);
  std::int64_t char_errors() const { return char_errors_; }
  std::int64_t char_total() const { return char_total_; }
  std::int64_t word_errors() const { return word_errors_; }
  std::int64_t word_total() const { return word_total_; }
  double cer() const;
  double wer() const;

 private:
  std::int64_t char_errors_ = 0, char_total_ = 0;
  std::int64_t word_errors_ = 0, word_total_ = 0;
};

}  // namespace deeplas
