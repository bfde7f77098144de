// Copyright 2026 The deeplas Authors.
// SPDX-License-Identifier: Apache-2.0

#include "deeplas/arch.hpp"

#include <cctype>
#include <cstdio>
#include <sstream>

namespace deeplas::arch {

bool Unit::operator==(const Unit& o) const {
  return kind == o.kind && kf == o.kf && kt == o.kt && stride == o.stride &&
         group == o.group;
}

ParseError::ParseError(const std::string& what, std::size_t offset)
    : std::invalid_argument("arch: " + what + " at offset " +
                            std::to_string(offset)),
      offset_(offset) {}

namespace {

constexpr std::string_view kTimes = "\xC3\x97";  // U+00D7

class Parser {
 public:
  explicit Parser(std::string_view text) : s_(text) {}

  ArchExpr run() {
    ArchExpr e{parse_expr()};
    skip_ws();
    if (pos_ != s_.size()) fail_unexpected();
    return e;
  }

 private:
  std::vector<Term> parse_expr() {
    std::vector<Term> terms;
    while (true) {
      parse_term(terms);
      skip_ws();
      if (pos_ < s_.size() && s_[pos_] == '+') {
        ++pos_;
        continue;
      }
      return terms;
    }
  }

  void parse_term(std::vector<Term>& out) {
    Unit unit = parse_unit();
    std::int64_t repeat = 1;
    skip_ws();
    if (eat_times()) {
      skip_ws();
      const std::size_t at = pos_;
      repeat = parse_int();
      if (repeat < 1) throw ParseError("repetition count must be >= 1", at);
    }
    if (unit.kind == UnitKind::kGroup) {
      if (repeat == 1) {
        out.insert(out.end(), unit.group.begin(), unit.group.end());
        return;
      }
      if (unit.group.size() == 1 && unit.group[0].repeat == 1) {
        out.push_back(Term{unit.group[0].unit, repeat});
        return;
      }
    }
    out.push_back(Term{std::move(unit), repeat});
  }

  Unit parse_unit() {
    skip_ws();
    if (pos_ >= s_.size()) throw ParseError("expected a unit", pos_);
    const std::size_t start = pos_;
    if (s_[pos_] == '(') {
      ++pos_;
      Unit u;
      u.kind = UnitKind::kGroup;
      u.group = parse_expr();
      expect(')');
      return u;
    }
    if (!std::isalpha(static_cast<unsigned char>(s_[pos_]))) {
      throw ParseError("expected a unit", pos_);
    }
    std::size_t end = pos_;
    while (end < s_.size() && std::isalpha(static_cast<unsigned char>(s_[end]))) {
      ++end;
    }
    std::string_view word = s_.substr(pos_, end - pos_);
    if (!known(word) && word.size() > 1 && word.back() == 'x' &&
        known(word.substr(0, word.size() - 1))) {
      word.remove_suffix(1);  // "Lx3": the x is the repetition operator
    }
    if (!known(word)) {
      throw ParseError("unknown unit '" + std::string(word) + "'", start);
    }
    pos_ += word.size();

    Unit u;
    if (word == "L") {
      u.kind = UnitKind::kBlstm;
    } else if (word == "B" || word == "BN") {
      u.kind = UnitKind::kBatchNorm;
    } else if (word == "R") {
      u.kind = UnitKind::kRelu;
    } else if (word == "NiN") {
      u.kind = UnitKind::kNiN;
    } else if (word == "ResCNN") {
      u.kind = UnitKind::kResCnn;
    } else if (word == "ResLSTM") {
      u.kind = UnitKind::kResLstm;
    } else if (word == "P" || word == "S") {
      u.kind = word == "P" ? UnitKind::kProjSubsample : UnitKind::kSkipSubsample;
      expect('/');
      skip_ws();
      const std::size_t at = pos_;
      if (parse_int() != 2) {
        throw ParseError(std::string(word) + " only subsamples by 2", at);
      }
    } else if (word == "C") {
      u.kind = UnitKind::kConv;
      parse_filter(u);
      skip_ws();
      if (pos_ < s_.size() && s_[pos_] == '/') {
        ++pos_;
        skip_ws();
        const std::size_t at = pos_;
        u.stride = parse_int();
        if (u.stride != 1 && u.stride != 2) {
          throw ParseError("stride must be 1 or 2", at);
        }
      }
    } else if (word == "ResConvLSTM") {
      u.kind = UnitKind::kResConvLstm;
      parse_filter(u);
    } else {  // ConvLSTM
      u.kind = UnitKind::kConvLstm;
      skip_ws();
      if (pos_ < s_.size() && s_[pos_] == '(') {
        parse_filter(u);
      } else {
        u.kf = 3;
        u.kt = 1;
      }
    }
    return u;
  }

  void parse_filter(Unit& u) {
    expect('(');
    skip_ws();
    std::size_t at = pos_;
    u.kf = parse_int();
    if (u.kf < 1) throw ParseError("filter extent must be >= 1", at);
    skip_ws();
    if (!eat_times()) throw ParseError("expected 'x' in filter size", pos_);
    skip_ws();
    at = pos_;
    u.kt = parse_int();
    if (u.kt < 1) throw ParseError("filter extent must be >= 1", at);
    expect(')');
  }

  static bool known(std::string_view w) {
    for (std::string_view k : {"L", "B", "BN", "R", "P", "S", "C", "NiN",
                               "ResCNN", "ResLSTM", "ResConvLSTM", "ConvLSTM"}) {
      if (w == k) return true;
    }
    return false;
  }

  bool eat_times() {
    skip_ws();
    if (pos_ < s_.size() && (s_[pos_] == 'x' || s_[pos_] == 'X')) {
      ++pos_;
      return true;
    }
    if (s_.substr(pos_, kTimes.size()) == kTimes) {
      pos_ += kTimes.size();
      return true;
    }
    return false;
  }

  std::int64_t parse_int() {
    skip_ws();
    const std::size_t start = pos_;
    std::int64_t v = 0;
    while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) {
      if (pos_ - start >= 9) throw ParseError("integer too large", start);
      v = v * 10 + (s_[pos_] - '0');
      ++pos_;
    }
    if (pos_ == start) throw ParseError("expected an integer", start);
    return v;
  }

  void expect(char c) {
    skip_ws();
    if (pos_ >= s_.size() || s_[pos_] != c) {
      throw ParseError(std::string("expected '") + c + "'", pos_);
    }
    ++pos_;
  }

  [[noreturn]] void fail_unexpected() {
    throw ParseError("unexpected '" + std::string(1, s_[pos_]) + "'", pos_);
  }

  void skip_ws() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) {
      ++pos_;
    }
  }

  std::string_view s_;
  std::size_t pos_ = 0;
};

std::string filter_str(const Unit& u) {
  return "(" + std::to_string(u.kf) + "x" + std::to_string(u.kt) + ")";
}

std::string unit_str(const Unit& u);

std::string terms_str(const std::vector<Term>& terms) {
  std::string out;
  for (std::size_t i = 0; i < terms.size(); ++i) {
    if (i) out += " + ";
    out += unit_str(terms[i].unit);
    if (terms[i].repeat != 1) out += " x " + std::to_string(terms[i].repeat);
  }
  return out;
}

std::string unit_str(const Unit& u) {
  switch (u.kind) {
    case UnitKind::kBlstm: return "L";
    case UnitKind::kBatchNorm: return "B";
    case UnitKind::kRelu: return "R";
    case UnitKind::kProjSubsample: return "P/2";
    case UnitKind::kSkipSubsample: return "S/2";
    case UnitKind::kConv:
      return "C" + filter_str(u) + (u.stride == 2 ? "/2" : "");
    case UnitKind::kResCnn: return "ResCNN";
    case UnitKind::kResLstm: return "ResLSTM";
    case UnitKind::kResConvLstm: return "ResConvLSTM" + filter_str(u);
    case UnitKind::kConvLstm: return "ConvLSTM" + filter_str(u);
    case UnitKind::kNiN: return "NiN";
    case UnitKind::kGroup: return "(" + terms_str(u.group) + ")";
  }
  return "?";
}

void expand(const std::vector<Term>& terms, std::vector<Unit>& out) {
  for (const Term& t : terms) {
    for (std::int64_t r = 0; r < t.repeat; ++r) {
      if (t.unit.kind == UnitKind::kGroup) {
        expand(t.unit.group, out);
      } else if (t.unit.kind == UnitKind::kNiN) {
        expand(nin_macro().terms, out);
      } else {
        out.push_back(t.unit);
      }
    }
  }
}

bool conv_type(UnitKind k) {
  return k == UnitKind::kConv || k == UnitKind::kResCnn ||
         k == UnitKind::kConvLstm || k == UnitKind::kResConvLstm;
}

std::int64_t lstm_params(std::int64_t in, std::int64_t h) {
  return 2 * (in * 4 * h + h * 4 * h + 4 * h);
}

std::int64_t convlstm_params(std::int64_t in, std::int64_t c, std::int64_t kf,
                             std::int64_t kt) {
  return 2 * (4 * c * in * kf * kt + 4 * c * c * kf + 4 * c);
}

class Elaborator {
 public:
  Elaborator(const InputSpec& input, const ElaborateOptions& opt)
      : input_(input), opt_(opt), frames_(opt.frames.value_or(-1)) {}

  ArchGraph run(const std::vector<Unit>& units) {
    if (input_.dims < 1 || input_.channels < 1) {
      throw ElaborationError("input dims and channels must be positive");
    }
    if (opt_.lstm_hidden < 1 || opt_.conv_channels < 1) {
      throw ElaborationError("hidden size and conv channels must be positive");
    }
    if (units.empty()) throw ElaborationError("empty architecture");
    if (opt_.frames && frames_ < 1) {
      throw ElaborationError("input must have at least one frame");
    }
    cur_ = {Layout::kFrames, input_.dims, 1};
    g_.input = cur_;
    for (const Unit& u : units) {
      if (u.kind == UnitKind::kBatchNorm || u.kind == UnitKind::kRelu) continue;
      if (conv_type(u.kind)) {
        if (input_.dims % input_.channels != 0) {
          throw ElaborationError("input dims " + std::to_string(input_.dims) +
                                 " do not split into " +
                                 std::to_string(input_.channels) + " channels");
        }
        view(input_.channels);
      }
      break;
    }
    for (const Unit& u : units) add(u);
    ensure_frames();  // the decoder attends over flat frame vectors
    g_.output = cur_;
    return std::move(g_);
  }

 private:
  LayerDesc& push(LayerKind kind, std::string label, FeatureShape out,
                  std::int64_t params, int counted, std::int64_t factor = 1) {
    LayerDesc d{kind, std::move(label), cur_, out};
    d.params = params;
    d.counted = counted;
    d.time_factor = factor;
    if (factor > 1) {
      g_.time_reduction *= factor;
      if (frames_ >= 0) {
        frames_ /= factor;
        if (frames_ < 1) {
          throw ElaborationError("layer " + std::to_string(g_.layers.size()) +
                                 " (" + d.label +
                                 "): subsampling below length 1");
        }
      }
    }
    d.frames_out = frames_;
    g_.params += params;
    g_.counted_layers += counted;
    cur_ = out;
    g_.layers.push_back(std::move(d));
    return g_.layers.back();
  }

  void view(std::int64_t channels) {
    push(LayerKind::kView, "view",
         {Layout::kSpatial, channels, cur_.channels / channels}, 0, 0);
  }

  void ensure_frames() {
    if (cur_.layout == Layout::kSpatial) {
      push(LayerKind::kFlatten, "flatten", {Layout::kFrames, cur_.width(), 1},
           0, 0);
    }
  }

  void ensure_spatial() {
    if (cur_.layout == Layout::kFrames) view(cur_.channels);
  }

  void add(const Unit& u) {
    const std::string label = unit_str(u);
    const std::int64_t H = opt_.lstm_hidden, CC = opt_.conv_channels;
    switch (u.kind) {
      case UnitKind::kBlstm: {
        ensure_frames();
        auto& d = push(LayerKind::kBlstm, label, {Layout::kFrames, 2 * H, 1},
                       lstm_params(cur_.channels, H), 1);
        d.units = H;
        break;
      }
      case UnitKind::kBatchNorm:
        push(LayerKind::kBatchNorm, label, cur_, 2 * cur_.channels, 0);
        break;
      case UnitKind::kRelu:
        push(LayerKind::kRelu, label, cur_, 0, 0);
        break;
      case UnitKind::kProjSubsample: {
        ensure_frames();
        const std::int64_t D = cur_.channels;
        if (frames_ >= 0 && frames_ < 2) {
          throw ElaborationError("P/2 needs at least 2 frames");
        }
        push(LayerKind::kProjSubsample, label, cur_, 2 * D * D + D + 2 * D, 1,
             2);
        break;
      }
      case UnitKind::kSkipSubsample:
        push(LayerKind::kSkipSubsample, label, cur_, 0, 0, 2);
        break;
      case UnitKind::kConv: {
        const std::int64_t cin = cur_.channels;
        FeatureShape out = cur_;
        std::int64_t kf = u.kf;
        if (cur_.layout == Layout::kFrames) {
          kf = 1;  // dims act as channels over a single row; width preserved
        } else {
          out.channels = CC;
        }
        auto& d = push(LayerKind::kConv, label, out,
                       out.channels * cin * kf * u.kt + out.channels, 1,
                       u.stride);
        d.kf = kf;
        d.kt = u.kt;
        d.stride = u.stride;
        d.units = out.channels;
        break;
      }
      case UnitKind::kResCnn: {
        const std::int64_t C = cur_.channels;
        std::int64_t kf = 3;
        if (cur_.layout == Layout::kFrames) {
          kf = 1;
        } else if (C != CC) {
          throw ElaborationError(
              "ResCNN: input has " + std::to_string(C) +
              " channels but the residual branch produces " +
              std::to_string(CC));
        }
        auto& d = push(LayerKind::kResCnn, label, cur_,
                       2 * (C * C * kf * 3 + C) + 4 * C, 2);
        d.kf = kf;
        d.kt = 3;
        d.units = C;
        break;
      }
      case UnitKind::kConvLstm: {
        ensure_spatial();
        auto& d = push(LayerKind::kConvLstm, label,
                       {Layout::kSpatial, 2 * CC, cur_.freq},
                       convlstm_params(cur_.channels, CC, u.kf, u.kt), 1);
        d.kf = u.kf;
        d.kt = u.kt;
        d.units = CC;
        break;
      }
      case UnitKind::kResConvLstm: {
        ensure_spatial();
        if (cur_.channels != CC) {
          throw ElaborationError(
              "ResConvLSTM: input has " + std::to_string(cur_.channels) +
              " channels but the residual branch produces " +
              std::to_string(CC));
        }
        auto& d = push(LayerKind::kResConvLstm, label, cur_,
                       convlstm_params(CC, CC, u.kf, u.kt) +
                           (CC * 2 * CC * 9 + CC) + 2 * CC,
                       2);
        d.kf = u.kf;
        d.kt = u.kt;
        d.units = CC;
        break;
      }
      case UnitKind::kResLstm: {
        ensure_frames();
        if (cur_.channels != 2 * H) {
          throw ElaborationError(
              "ResLSTM: input width " + std::to_string(cur_.channels) +
              " differs from the BLSTM output width " + std::to_string(2 * H));
        }
        auto& d = push(LayerKind::kResLstm, label, cur_,
                       lstm_params(2 * H, H), 1);
        d.units = H;
        break;
      }
      case UnitKind::kNiN:
      case UnitKind::kGroup:
        throw ElaborationError("internal: unexpanded unit");
    }
  }

  InputSpec input_;
  ElaborateOptions opt_;
  std::int64_t frames_;
  FeatureShape cur_;
  ArchGraph g_;
};

}  // namespace

ArchExpr parse(std::string_view text) { return Parser(text).run(); }

std::string render(const ArchExpr& expr) { return terms_str(expr.terms); }

ArchExpr nin_macro() {
  return parse("(L + C(1x1) + B + R) x 2 + L");
}

std::string FeatureShape::str() const {
  if (layout == Layout::kFrames) return std::to_string(channels);
  return std::to_string(channels) + "x" + std::to_string(freq);
}

ArchGraph elaborate(const ArchExpr& expr, const InputSpec& input,
                    const ElaborateOptions& options) {
  std::vector<Unit> units;
  expand(expr.terms, units);
  if (options.baseline_subsample) {
    std::vector<Unit> with_skips;
    int inserted = 0;
    for (std::size_t i = 0; i < units.size(); ++i) {
      with_skips.push_back(units[i]);
      if (inserted < 2 && units[i].kind == UnitKind::kBlstm &&
          i + 1 < units.size() && units[i + 1].kind == UnitKind::kBlstm) {
        Unit s;
        s.kind = UnitKind::kSkipSubsample;
        with_skips.push_back(s);
        ++inserted;
      }
    }
    units = std::move(with_skips);
  }
  return Elaborator(input, options).run(units);
}

std::int64_t reduced_length(const ArchGraph& graph, std::int64_t frames) {
  for (const auto& d : graph.layers) {
    if (d.time_factor > 1) frames /= d.time_factor;
  }
  return frames;
}

const char* layer_kind_name(LayerKind kind) {
  switch (kind) {
    case LayerKind::kView: return "view";
    case LayerKind::kFlatten: return "flatten";
    case LayerKind::kBlstm: return "blstm";
    case LayerKind::kBatchNorm: return "batchnorm";
    case LayerKind::kRelu: return "relu";
    case LayerKind::kConv: return "conv";
    case LayerKind::kProjSubsample: return "proj_subsample";
    case LayerKind::kSkipSubsample: return "skip_subsample";
    case LayerKind::kResCnn: return "res_cnn";
    case LayerKind::kResLstm: return "res_lstm";
    case LayerKind::kConvLstm: return "convlstm";
    case LayerKind::kResConvLstm: return "res_convlstm";
  }
  return "?";
}

std::string ArchGraph::table() const {
  std::ostringstream os;
  char line[160];
  std::snprintf(line, sizeof line, "%4s  %-18s %-15s %-10s %-10s %10s %5s\n",
                "#", "unit", "kind", "in", "out", "params", "depth");
  os << line;
  int depth = 0;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto& d = layers[i];
    depth += d.counted;
    std::snprintf(line, sizeof line,
                  "%4zu  %-18s %-15s %-10s %-10s %10lld %5d\n", i,
                  d.label.c_str(), layer_kind_name(d.kind), d.in.str().c_str(),
                  d.out.str().c_str(), static_cast<long long>(d.params), depth);
    os << line;
  }
  os << "layers " << counted_layers << ", parameters " << params
     << ", time reduction " << time_reduction << "\n";
  return os.str();
}

}  // namespace deeplas::arch
