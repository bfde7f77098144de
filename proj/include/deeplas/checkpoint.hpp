// Copyright 2026 The deeplas Authors.
// SPDX-License-Identifier: Apache-2.0
//
// File layout: "DLCKPT01", u64 LE header length, UTF-8 JSON header, then the
// payload. The header lists every tensor with its shape, dtype (f32 for
// parameters and optimizer moments, f64 for batch-norm running statistics)
// and byte offset into the payload.

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>

#include "deeplas/las.hpp"
#include "deeplas/train.hpp"

namespace deeplas {

inline constexpr int kCheckpointVersion = 1;

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CheckpointInfo {
  int version = kCheckpointVersion;
  ModelConfig model;
  std::int64_t step = 0;
  std::map<std::string, std::string> extra;  // hyperparameter echo
  bool has_optimizer = false;
};

void save_checkpoint(const std::filesystem::path& path,
                     const LasModel<float>& model, std::int64_t step = 0,
                     const std::map<std::string, std::string>& extra = {},
                     const Adam<float>* optimizer = nullptr);

// Rebuilds the model from the echoed config, then fills every parameter and
// buffer by name. Missing, duplicate or misshaped entries throw.
std::unique_ptr<LasModel<float>> load_checkpoint(
    const std::filesystem::path& path, CheckpointInfo* info = nullptr,
    Adam<float>* optimizer = nullptr);

}  // namespace deeplas
