// Copyright 2026 The deeplas Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "deeplas/tensor.hpp"

namespace deeplas {

struct NamedTensor {
  std::string name;
  Tensor<double> tensor;
};

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::string worst_param;
  std::vector<std::pair<std::string, double>> per_param;
};

class GradCheckError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Compares reverse-mode gradients of build_loss() against central differences
// (f(p + eps) - f(p - eps)) / 2eps, element by element. The error of one
// element is |analytic - numeric| / max(1, |analytic|). eps must lie in
// [1e-5, 1e-2]. A non-finite loss throws GradCheckError naming the parameter
// being perturbed.
GradCheckReport finite_difference_check(
    const std::function<Tensor<double>()>& build_loss,
    std::vector<NamedTensor> params, double eps = 1e-5);

}  // namespace deeplas
