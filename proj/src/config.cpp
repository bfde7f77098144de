// Copyright 2026 The deeplas Authors.
// SPDX-License-Identifier: Apache-2.0

#include "deeplas/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

namespace deeplas {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

using Setter = std::function<void(const std::string&)>;

struct Parser {
  std::string origin;
  std::string key;

  [[noreturn]] void fail(const std::string& what) const {
    throw ConfigError((origin.empty() ? "" : origin + ": ") + "key '" + key +
                      "': " + what);
  }
  double real(const std::string& v) const {
    std::size_t used = 0;
    double out = 0;
    try {
      out = std::stod(v, &used);
    } catch (const std::exception&) {
      fail("expected a number, got '" + v + "'");
    }
    if (used != v.size()) fail("expected a number, got '" + v + "'");
    return out;
  }
  std::int64_t integer(const std::string& v) const {
    std::int64_t out = 0;
    const auto r = std::from_chars(v.data(), v.data() + v.size(), out);
    if (r.ec != std::errc() || r.ptr != v.data() + v.size())
      fail("expected an integer, got '" + v + "'");
    return out;
  }
  std::uint64_t unsigned_int(const std::string& v) const {
    std::uint64_t out = 0;
    const auto r = std::from_chars(v.data(), v.data() + v.size(), out);
    if (r.ec != std::errc() || r.ptr != v.data() + v.size())
      fail("expected a non-negative integer, got '" + v + "'");
    return out;
  }
  bool boolean(const std::string& v) const {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    fail("expected true or false, got '" + v + "'");
  }
};

// A quoted value keeps surrounding spaces (vocabularies end in ' ').
std::string unquote(const std::string& v) {
  if (v.size() >= 2 && v.front() == '"' && v.back() == '"')
    return v.substr(1, v.size() - 2);
  return v;
}

void parse_lines(std::string_view text, const std::string& origin,
                 const std::map<std::string, Setter>& setters) {
  std::set<std::string> seen;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    const std::string where = origin.empty() ? "line " + std::to_string(lineno)
                                             : origin + ":" + std::to_string(lineno);
    if (eq == std::string::npos)
      throw ConfigError(where + ": expected key = value");
    const std::string key = trim(t.substr(0, eq));
    const std::string value = unquote(trim(t.substr(eq + 1)));
    auto it = setters.find(key);
    if (it == setters.end()) throw ConfigError(where + ": unknown key '" + key + "'");
    if (!seen.insert(key).second)
      throw ConfigError(where + ": key '" + key + "' given twice");
    it->second(value);
  }
}

std::string read_file(const std::filesystem::path& path, const char* what) {
  std::ifstream f(path);
  if (!f) throw ConfigError(std::string("cannot open ") + what + " " + path.string());
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

}  // namespace

const std::vector<std::string>& run_config_keys() {
  static const std::vector<std::string> keys{
      "arch",       "lr",          "lr_decayed",     "clip_norm",
      "weight_noise", "l2",        "batch_size",     "eval_every",
      "patience",   "max_steps",   "vocab",          "train_data",
      "dev_data",   "seed",        "hidden",         "decoder_hidden",
      "channels",   "input_channels", "baseline_subsample", "stop_after_decay",
      "out_dir"};
  return keys;
}

RunConfig parse_run_config(std::string_view text, const std::string& origin,
                           const std::filesystem::path& base_dir) {
  RunConfig c;
  c.train.out_dir = "run";
  Parser p{origin, {}};
  auto path = [&](const std::string& v) {
    std::filesystem::path q(v);
    return q.is_relative() && !base_dir.empty() ? base_dir / q : q;
  };
  std::map<std::string, Setter> s;
  auto bind = [&](const std::string& key, std::function<void(const std::string&)> f) {
    s[key] = [&p, key, f](const std::string& v) {
      p.key = key;
      f(v);
    };
  };
  bind("arch", [&](const std::string& v) { c.model.arch = v; });
  bind("lr", [&](const std::string& v) { c.train.lr_initial = p.real(v); });
  bind("lr_decayed", [&](const std::string& v) { c.train.lr_decayed = p.real(v); });
  bind("clip_norm", [&](const std::string& v) { c.train.clip_norm = p.real(v); });
  bind("weight_noise", [&](const std::string& v) { c.train.weight_noise_std = p.real(v); });
  bind("l2", [&](const std::string& v) { c.train.l2 = p.real(v); });
  bind("batch_size", [&](const std::string& v) { c.train.batch_size = p.integer(v); });
  bind("eval_every", [&](const std::string& v) { c.train.eval_every = p.integer(v); });
  bind("patience", [&](const std::string& v) { c.train.patience = p.integer(v); });
  bind("max_steps", [&](const std::string& v) { c.train.max_steps = p.integer(v); });
  bind("stop_after_decay", [&](const std::string& v) { c.train.stop_after_decay = p.integer(v); });
  bind("vocab", [&](const std::string& v) { c.model.vocab = v; });
  bind("train_data", [&](const std::string& v) { c.train_data = path(v); });
  bind("dev_data", [&](const std::string& v) { c.dev_data = path(v); });
  bind("out_dir", [&](const std::string& v) { c.train.out_dir = path(v); });
  bind("seed", [&](const std::string& v) { c.train.seed = p.unsigned_int(v); });
  bind("hidden", [&](const std::string& v) { c.model.hidden = p.integer(v); });
  bind("decoder_hidden", [&](const std::string& v) { c.model.decoder_hidden = p.integer(v); });
  bind("channels", [&](const std::string& v) { c.model.channels = p.integer(v); });
  bind("input_channels", [&](const std::string& v) { c.model.input.channels = p.integer(v); });
  bind("baseline_subsample", [&](const std::string& v) { c.model.baseline_subsample = p.boolean(v); });
  parse_lines(text, origin, s);
  try {
    c.train.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError((origin.empty() ? "" : origin + ": ") + e.what());
  }
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  return parse_run_config(read_file(path, "config"), path.string(),
                          path.parent_path());
}

SynthJob parse_synth_spec(std::string_view text, const std::string& origin) {
  SynthJob j;
  Parser p{origin, {}};
  std::map<std::string, Setter> s;
  auto bind = [&](const std::string& key, std::function<void(const std::string&)> f) {
    s[key] = [&p, key, f](const std::string& v) {
      p.key = key;
      f(v);
    };
  };
  bind("vocab", [&](const std::string& v) { j.spec.vocab = v; });
  bind("freq_bins", [&](const std::string& v) { j.spec.freq_bins = p.integer(v); });
  bind("min_frames", [&](const std::string& v) { j.spec.min_frames_per_char = p.integer(v); });
  bind("max_frames", [&](const std::string& v) { j.spec.max_frames_per_char = p.integer(v); });
  bind("min_chars", [&](const std::string& v) { j.spec.min_chars = p.integer(v); });
  bind("max_chars", [&](const std::string& v) { j.spec.max_chars = p.integer(v); });
  bind("noise_std", [&](const std::string& v) { j.spec.noise_std = p.real(v); });
  bind("speaker_offset_std", [&](const std::string& v) { j.spec.speaker_offset_std = p.real(v); });
  bind("speakers", [&](const std::string& v) { j.spec.speakers = p.integer(v); });
  bind("template_seed", [&](const std::string& v) { j.spec.template_seed = p.unsigned_int(v); });
  bind("n_utts", [&](const std::string& v) { j.n_utts = p.integer(v); });
  bind("seed", [&](const std::string& v) { j.seed = p.unsigned_int(v); });
  bind("deltas", [&](const std::string& v) { j.deltas = p.boolean(v); });
  bind("normalize", [&](const std::string& v) { j.normalize = p.boolean(v); });
  parse_lines(text, origin, s);
  try {
    j.spec.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError((origin.empty() ? "" : origin + ": ") + e.what());
  }
  if (j.n_utts < 1) throw ConfigError(origin + ": key 'n_utts': must be >= 1");
  return j;
}

SynthJob load_synth_spec(const std::filesystem::path& path) {
  return parse_synth_spec(read_file(path, "synth spec"), path.string());
}

}  // namespace deeplas
