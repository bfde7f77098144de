// Copyright 2026 The deeplas Authors.
// SPDX-License-Identifier: Apache-2.0

#include "deeplas/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace deeplas {
namespace {

double eval_loss(const std::function<Tensor<double>()>& build_loss,
                 const std::string& context) {
  NoTapeScope<double> no_tape;
  const double v = build_loss().item();
  if (!std::isfinite(v)) {
    throw GradCheckError("gradcheck: non-finite loss while perturbing " +
                         context);
  }
  return v;
}

}  // namespace

GradCheckReport finite_difference_check(
    const std::function<Tensor<double>()>& build_loss,
    std::vector<NamedTensor> params, double eps) {
  if (!(eps >= 1e-5 && eps <= 1e-2)) {
    throw std::invalid_argument("gradcheck: eps must lie in [1e-5, 1e-2]");
  }
  for (auto& p : params) {
    p.tensor.set_requires_grad(true);
    p.tensor.zero_grad();
  }
  {
    Tape<double> tape;
    Tensor<double> loss;
    {
      TapeScope<double> scope(tape);
      loss = build_loss();
    }
    if (!std::isfinite(loss.item())) {
      throw GradCheckError("gradcheck: non-finite loss at the base point");
    }
    tape.backward(loss);
  }

  GradCheckReport report;
  for (auto& p : params) {
    std::vector<double> analytic(p.tensor.data().size(), 0.0);
    if (p.tensor.has_grad()) {
      std::copy(p.tensor.grad().begin(), p.tensor.grad().end(),
                analytic.begin());
    }
    double worst = 0.0;
    auto values = p.tensor.mutable_data();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double saved = values[i];
      values[i] = saved + eps;
      const double up = eval_loss(build_loss, p.name);
      values[i] = saved - eps;
      const double down = eval_loss(build_loss, p.name);
      values[i] = saved;
      const double numeric = (up - down) / (2.0 * eps);
      const double err =
          std::abs(analytic[i] - numeric) / std::max(1.0, std::abs(analytic[i]));
      worst = std::max(worst, err);
    }
    report.per_param.emplace_back(p.name, worst);
    if (worst >= report.max_rel_error) {
      report.max_rel_error = worst;
      report.worst_param = p.name;
    }
  }
  return report;
}

}  // namespace deeplas
