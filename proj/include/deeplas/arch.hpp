// Copyright 2026 The deeplas Authors.
// SPDX-License-Identifier: Apache-2.0
//
// Encoder architecture strings, e.g. "(C(3x3)/2) x 2 + ResCNN x 8 + NiN".
//
//   expr := term ('+' term)*
//   term := unit (('x' | '×') INT)?
//   unit := 'L' | 'B' | 'BN' | 'R' | 'P/2' | 'S/2'
//         | 'C(' INT 'x' INT ')' ('/' INT)?
//         | 'ResCNN' | 'ResLSTM' | 'ResConvLSTM(' INT 'x' INT ')'
//         | 'ConvLSTM' ('(' INT 'x' INT ')')? | 'NiN' | '(' expr ')'
//
// Whitespace is ignored. Parsing canonicalizes groups: a group without a
// repetition count is spliced into its parent, and a group holding one
// unrepeated term becomes that term.

#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "deeplas/layers.hpp"

namespace deeplas::arch {

enum class UnitKind {
  kBlstm,          // L
  kBatchNorm,      // B
  kRelu,           // R
  kProjSubsample,  // P/2
  kSkipSubsample,  // S/2
  kConv,           // C(kf x kt)/stride
  kResCnn,
  kResLstm,
  kResConvLstm,    // ResConvLSTM(kf x kt)
  kConvLstm,       // ConvLSTM(kf x kt)
  kNiN,
  kGroup,
};

struct Term;

struct Unit {
  UnitKind kind = UnitKind::kBlstm;
  std::int64_t kf = 0, kt = 0;  // filter extents (conv-type units)
  std::int64_t stride = 1;      // time stride (kConv)
  std::vector<Term> group;      // kGroup

  bool operator==(const Unit&) const;
};

struct Term {
  Unit unit;
  std::int64_t repeat = 1;

  bool operator==(const Term&) const = default;
};

struct ArchExpr {
  std::vector<Term> terms;

  bool operator==(const ArchExpr&) const = default;
};

class ParseError : public std::invalid_argument {
 public:
  ParseError(const std::string& what, std::size_t offset);
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

ArchExpr parse(std::string_view text);
std::string render(const ArchExpr& expr);
// The NiN macro: (L + C(1x1) + B + R) x 2 + L.
ArchExpr nin_macro();

// ---------------------------------------------------------------------------
// Elaboration.

struct InputSpec {
  std::int64_t dims = 24;
  // Conv-first graphs view each frame as channels x (dims / channels).
  std::int64_t channels = 3;
};

struct ElaborateOptions {
  std::int64_t lstm_hidden = 256;  // units per direction
  std::int64_t conv_channels = 32;
  // Insert S/2 after each BLSTM that feeds another BLSTM (at most two).
  bool baseline_subsample = false;
  // When set, frame counts are propagated and checked.
  std::optional<std::int64_t> frames;
};

struct FeatureShape {
  Layout layout = Layout::kFrames;
  std::int64_t channels = 0;  // dims for kFrames
  std::int64_t freq = 1;

  std::int64_t width() const { return channels * freq; }
  std::string str() const;
  bool operator==(const FeatureShape&) const = default;
};

enum class LayerKind {
  kView,     // frames -> spatial
  kFlatten,  // spatial -> frames
  kBlstm,
  kBatchNorm,
  kRelu,
  kConv,
  kProjSubsample,
  kSkipSubsample,
  kResCnn,
  kResLstm,
  kConvLstm,
  kResConvLstm,
};

struct LayerDesc {
  LayerKind kind;
  std::string label;
  FeatureShape in, out;
  std::int64_t kf = 1, kt = 1, stride = 1;
  std::int64_t units = 0;  // hidden per direction, or conv output channels
  std::int64_t params = 0;
  int counted = 0;            // contribution to the encoder depth
  std::int64_t time_factor = 1;
  std::int64_t frames_out = -1;
};

struct ArchGraph {
  std::vector<LayerDesc> layers;
  FeatureShape input, output;
  int counted_layers = 0;
  std::int64_t params = 0;
  std::int64_t time_reduction = 1;

  std::string table() const;
};

class ElaborationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

ArchGraph elaborate(const ArchExpr& expr, const InputSpec& input = {},
                    const ElaborateOptions& options = {});

// Output length for an input of `frames` frames (floor-composed halvings).
std::int64_t reduced_length(const ArchGraph& graph, std::int64_t frames);

const char* layer_kind_name(LayerKind kind);

}  // namespace deeplas::arch
