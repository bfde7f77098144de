// Copyright 2026 The deeplas Authors.
// SPDX-License-Identifier: Apache-2.0

#include "deeplas/data.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "deeplas/params.hpp"

namespace deeplas {

void SynthSpec::validate() const {
  if (vocab.empty()) throw std::invalid_argument("synth: empty vocab");
  std::set<char> seen(vocab.begin(), vocab.end());
  if (seen.size() != vocab.size())
    throw std::invalid_argument("synth: duplicate vocab character");
  if (freq_bins < 2) throw std::invalid_argument("synth: freq_bins < 2");
  if (min_frames_per_char < 1 || max_frames_per_char < min_frames_per_char)
    throw std::invalid_argument("synth: bad frames-per-char range");
  if (min_chars < 1 || max_chars < min_chars)
    throw std::invalid_argument("synth: bad length range");
  if (noise_std < 0 || speaker_offset_std < 0)
    throw std::invalid_argument("synth: negative std");
  if (speakers < 1) throw std::invalid_argument("synth: speakers < 1");
  // Without a non-space character we cannot avoid edge spaces.
  if (vocab.find_first_not_of(' ') == std::string::npos)
    throw std::invalid_argument("synth: vocab has no non-space character");
}

namespace {

std::vector<std::vector<double>> gaussian_rows(std::uint64_t seed,
                                               std::int64_t rows,
                                               std::int64_t cols, double sd) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dist(0.0, 1.0);
  std::vector<std::vector<double>> out(rows, std::vector<double>(cols));
  for (auto& r : out)
    for (auto& v : r) v = sd * dist(rng);
  return out;
}

// Random text: no character repeats its predecessor (a held template would
// hide the boundary) and spaces never sit at either end.
std::string random_text(const SynthSpec& spec, std::mt19937_64& rng) {
  std::uniform_int_distribution<std::int64_t> len_dist(spec.min_chars,
                                                       spec.max_chars);
  const std::int64_t len = len_dist(rng);
  const auto n = static_cast<std::int64_t>(spec.vocab.size());
  std::uniform_int_distribution<std::int64_t> pick(0, n - 1);
  std::string text;
  for (std::int64_t i = 0; i < len; ++i) {
    const bool edge = i == 0 || i + 1 == len;
    for (;;) {
      const char c = spec.vocab[pick(rng)];
      if (edge && c == ' ') continue;
      if (!text.empty() && text.back() == c && n > 1) continue;
      text.push_back(c);
      break;
    }
  }
  return text;
}

}  // namespace

std::vector<std::vector<double>> char_templates(const SynthSpec& spec) {
  return gaussian_rows(derive_seed(spec.template_seed, 0),
                       static_cast<std::int64_t>(spec.vocab.size()),
                       spec.freq_bins, 1.0);
}

Dataset synthesize(const SynthSpec& spec, std::int64_t n_utts,
                   std::uint64_t seed) {
  spec.validate();
  if (n_utts < 1) throw std::invalid_argument("synth: n_utts < 1");
  const auto templates = char_templates(spec);
  const auto offsets = gaussian_rows(derive_seed(spec.template_seed, 1),
                                     spec.speakers, spec.freq_bins,
                                     spec.speaker_offset_std);
  const std::int64_t F = spec.freq_bins;

  Dataset out;
  out.reserve(n_utts);
  for (std::int64_t u = 0; u < n_utts; ++u) {
    std::mt19937_64 rng(derive_seed(seed, static_cast<std::uint64_t>(u)));
    Utterance utt;
    std::ostringstream id;
    id << "u" << seed << "-" << u;
    utt.id = id.str();
    std::uniform_int_distribution<std::int64_t> spk(0, spec.speakers - 1);
    const std::int64_t s = spk(rng);
    utt.speaker = "spk" + std::to_string(s);
    utt.transcript = random_text(spec, rng);
    utt.dims = F;

    std::uniform_int_distribution<std::int64_t> dur(spec.min_frames_per_char,
                                                    spec.max_frames_per_char);
    std::normal_distribution<double> noise(0.0, 1.0);
    for (char c : utt.transcript) {
      const auto& tpl = templates[spec.vocab.find(c)];
      const std::int64_t d = dur(rng);
      for (std::int64_t t = 0; t < d; ++t) {
        for (std::int64_t f = 0; f < F; ++f) {
          utt.features.push_back(static_cast<float>(
              tpl[f] + offsets[s][f] + spec.noise_std * noise(rng)));
        }
        ++utt.frames;
      }
    }
    out.push_back(std::move(utt));
  }
  return out;
}

Dataset synthesize_features(const SynthSpec& spec, std::int64_t n_utts,
                            std::uint64_t seed) {
  Dataset d = synthesize(spec, n_utts, seed);
  add_deltas(d);
  normalize_per_speaker(d);
  return d;
}

namespace {

// Regression delta over a frames x dims block, edges replicated.
std::vector<double> deltas(const std::vector<double>& x, std::int64_t T,
                           std::int64_t D, int N) {
  double denom = 0;
  for (int n = 1; n <= N; ++n) denom += 2.0 * n * n;
  std::vector<double> out(x.size(), 0.0);
  for (std::int64_t t = 0; t < T; ++t) {
    for (int n = 1; n <= N; ++n) {
      const std::int64_t ahead = std::min<std::int64_t>(t + n, T - 1);
      const std::int64_t behind = std::max<std::int64_t>(t - n, 0);
      for (std::int64_t d = 0; d < D; ++d)
        out[t * D + d] += n * (x[ahead * D + d] - x[behind * D + d]);
    }
    for (std::int64_t d = 0; d < D; ++d) out[t * D + d] /= denom;
  }
  return out;
}

}  // namespace

std::vector<float> add_deltas(std::span<const float> features,
                              std::int64_t frames, std::int64_t dims,
                              int window) {
  if (window < 1) throw std::invalid_argument("deltas: window < 1");
  if (frames < 1 || dims < 1 ||
      static_cast<std::int64_t>(features.size()) != frames * dims)
    throw std::invalid_argument("deltas: size mismatch");
  std::vector<double> x(features.begin(), features.end());
  const auto d1 = deltas(x, frames, dims, window);
  const auto d2 = deltas(d1, frames, dims, window);
  std::vector<float> out(static_cast<std::size_t>(frames * dims * 3));
  for (std::int64_t t = 0; t < frames; ++t) {
    float* row = out.data() + t * dims * 3;
    for (std::int64_t d = 0; d < dims; ++d) {
      row[d] = static_cast<float>(x[t * dims + d]);
      row[dims + d] = static_cast<float>(d1[t * dims + d]);
      row[2 * dims + d] = static_cast<float>(d2[t * dims + d]);
    }
  }
  return out;
}

void add_deltas(Dataset& data, int window) {
  for (auto& u : data) {
    u.features = add_deltas(u.features, u.frames, u.dims, window);
    u.dims *= 3;
  }
}

void normalize_per_speaker(Dataset& data) {
  struct Acc {
    std::vector<double> sum, sq;
    std::int64_t n = 0;
  };
  std::map<std::string, Acc> acc;
  for (const auto& u : data) {
    auto& a = acc[u.speaker];
    if (a.sum.empty()) {
      a.sum.assign(u.dims, 0.0);
      a.sq.assign(u.dims, 0.0);
    } else if (static_cast<std::int64_t>(a.sum.size()) != u.dims) {
      throw std::invalid_argument("normalize: mixed feature dims for " +
                                  u.speaker);
    }
    for (std::int64_t t = 0; t < u.frames; ++t)
      for (std::int64_t d = 0; d < u.dims; ++d) {
        const double v = u.features[t * u.dims + d];
        a.sum[d] += v;
        a.sq[d] += v * v;
      }
    a.n += u.frames;
  }
  std::map<std::string, std::pair<std::vector<double>, std::vector<double>>>
      stats;
  for (auto& [spk, a] : acc) {
    std::vector<double> mean(a.sum.size(), 0.0), sd(a.sum.size(), 1.0);
    if (a.n > 0) {
      for (std::size_t d = 0; d < a.sum.size(); ++d) {
        mean[d] = a.sum[d] / a.n;
        const double var = std::max(0.0, a.sq[d] / a.n - mean[d] * mean[d]);
        sd[d] = std::max(std::sqrt(var), kStdFloor);
      }
    }
    stats[spk] = {std::move(mean), std::move(sd)};
  }
  for (auto& u : data) {
    const auto& [mean, sd] = stats[u.speaker];
    for (std::int64_t t = 0; t < u.frames; ++t)
      for (std::int64_t d = 0; d < u.dims; ++d) {
        float& v = u.features[t * u.dims + d];
        v = static_cast<float>((v - mean[d]) / sd[d]);
      }
  }
}

// ---- FBK1 ------------------------------------------------------------------

namespace {

constexpr char kMagic[4] = {'F', 'B', 'K', '1'};

void put_u(std::string& out, std::uint64_t v, int bytes) {
  for (int i = 0; i < bytes; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_str(std::string& out, const std::string& s, int len_bytes) {
  const std::uint64_t limit = len_bytes == 2 ? 0xffffu : 0xffffffffu;
  if (s.size() > limit)
    throw FeatureFileError(FeatureFileError::Kind::kInvalid,
                           "fbk: string too long");
  put_u(out, s.size(), len_bytes);
  out += s;
}

class Reader {
 public:
  Reader(std::string_view b, const std::string& origin) : b_(b), origin_(origin) {}

  void need(std::uint64_t n, const char* what) const {
    if (b_.size() - pos_ < n)
      throw FeatureFileError(FeatureFileError::Kind::kTruncated,
                             "fbk: truncated " + std::string(what) + where());
  }
  std::uint64_t u(int bytes, const char* what) {
    need(bytes, what);
    std::uint64_t v = 0;
    for (int i = 0; i < bytes; ++i)
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(b_[pos_ + i]))
           << (8 * i);
    pos_ += bytes;
    return v;
  }
  std::string str(int len_bytes, const char* what) {
    const std::uint64_t n = u(len_bytes, what);
    need(n, what);
    std::string s(b_.substr(pos_, n));
    pos_ += n;
    return s;
  }
  std::string_view raw(std::uint64_t n, const char* what) {
    need(n, what);
    auto s = b_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  std::size_t remaining() const { return b_.size() - pos_; }
  std::string where() const {
    return " at byte " + std::to_string(pos_) +
           (origin_.empty() ? "" : " in " + origin_);
  }

 private:
  std::string_view b_;
  std::string origin_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string encode_features(const Dataset& data) {
  std::string out(kMagic, 4);
  put_u(out, data.size(), 4);
  for (const auto& u : data) {
    if (static_cast<std::int64_t>(u.features.size()) != u.frames * u.dims)
      throw FeatureFileError(FeatureFileError::Kind::kInvalid,
                             "fbk: feature size mismatch for " + u.id);
    put_str(out, u.id, 2);
    put_str(out, u.speaker, 2);
    put_u(out, static_cast<std::uint64_t>(u.frames), 4);
    put_u(out, static_cast<std::uint64_t>(u.dims), 4);
    for (float f : u.features) {
      std::uint32_t bits;
      std::memcpy(&bits, &f, 4);
      put_u(out, bits, 4);
    }
    put_str(out, u.transcript, 4);
  }
  return out;
}

Dataset decode_features(std::string_view bytes, const std::string& origin) {
  if (bytes.size() < 4 || bytes.substr(0, 4) != std::string_view(kMagic, 4))
    throw FeatureFileError(FeatureFileError::Kind::kBadMagic,
                           "fbk: bad magic" +
                               (origin.empty() ? "" : " in " + origin));
  Reader r(bytes.substr(4), origin);
  const std::uint64_t count = r.u(4, "header");
  Dataset out;
  std::set<std::string> ids;
  for (std::uint64_t i = 0; i < count; ++i) {
    Utterance u;
    u.id = r.str(2, "id");
    if (!ids.insert(u.id).second)
      throw FeatureFileError(FeatureFileError::Kind::kDuplicateId,
                             "fbk: duplicate utterance id '" + u.id + "'" +
                                 r.where());
    u.speaker = r.str(2, "speaker");
    u.frames = static_cast<std::int64_t>(r.u(4, "frames"));
    u.dims = static_cast<std::int64_t>(r.u(4, "dims"));
    const std::uint64_t n = static_cast<std::uint64_t>(u.frames) * u.dims;
    // Check before allocating so a corrupt size cannot exhaust memory.
    auto payload = r.raw(n * 4, "features");
    u.features.resize(n);
    for (std::uint64_t k = 0; k < n; ++k) {
      std::uint32_t bits = 0;
      for (int b = 0; b < 4; ++b)
        bits |= static_cast<std::uint32_t>(
                    static_cast<unsigned char>(payload[k * 4 + b]))
                << (8 * b);
      std::memcpy(&u.features[k], &bits, 4);
    }
    u.transcript = r.str(4, "transcript");
    out.push_back(std::move(u));
  }
  if (r.remaining() != 0)
    throw FeatureFileError(FeatureFileError::Kind::kInvalid,
                           "fbk: trailing bytes" + r.where());
  return out;
}

void write_features(const std::filesystem::path& path, const Dataset& data) {
  const std::string bytes = encode_features(data);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f)
    throw FeatureFileError(FeatureFileError::Kind::kIo,
                           "fbk: cannot open " + path.string());
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!f)
    throw FeatureFileError(FeatureFileError::Kind::kIo,
                           "fbk: write failed " + path.string());
}

Dataset read_features(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f)
    throw FeatureFileError(FeatureFileError::Kind::kIo,
                           "fbk: cannot open " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return decode_features(ss.str(), path.string());
}

std::vector<std::pair<std::string, std::string>> read_transcripts(
    const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("transcripts: cannot open " + path.string());
  std::vector<std::pair<std::string, std::string>> out;
  std::set<std::string> ids;
  std::string line;
  int lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos || tab == 0)
      throw std::runtime_error("transcripts: " + path.string() + ":" +
                               std::to_string(lineno) + ": expected id<TAB>text");
    std::string id = line.substr(0, tab);
    if (!ids.insert(id).second)
      throw std::runtime_error("transcripts: duplicate id '" + id + "'");
    out.emplace_back(std::move(id), line.substr(tab + 1));
  }
  return out;
}

void apply_transcripts(
    Dataset& data, const std::vector<std::pair<std::string, std::string>>& t) {
  std::map<std::string, Utterance*> by_id;
  for (auto& u : data) by_id[u.id] = &u;
  for (const auto& [id, text] : t) {
    auto it = by_id.find(id);
    if (it == by_id.end())
      throw std::runtime_error("transcripts: unknown utterance id '" + id + "'");
    it->second->transcript = text;
  }
}

}  // namespace deeplas
