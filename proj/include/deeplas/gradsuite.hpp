// Copyright 2026 The deeplas Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace deeplas {

struct GradSuiteResult {
  std::string name;
  double max_rel_error = 0.0;
  std::string worst_param;
  double seconds = 0.0;
};

// Names of the checked units, in report order.
const std::vector<std::string>& gradient_suite_names();

// Central finite differences in double precision over every parameter and
// input of each unit (several random draws each). An empty filter runs all;
// an unknown name throws std::invalid_argument.
std::vector<GradSuiteResult> run_gradient_suite(std::string_view only = {});

inline constexpr double kGradTolerance = 1e-4;

}  // namespace deeplas
