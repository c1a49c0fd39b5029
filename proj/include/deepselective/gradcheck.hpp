/* Copyright 2026 The DeepSelective Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License. */

#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "deepselective/tensor.hpp"

namespace deepselective {

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::size_t worst_leaf = 0;
  std::size_t worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
};

// Compares reverse-mode gradients of the scalar `loss` against central finite
// differences (step h) for every element of every leaf. `loss` is re-evaluated
// from scratch for each perturbation and must read the leaves' current values.
//
// The per-element error is |analytic - numeric| / max(|analytic|, |numeric|, floor);
// the floor keeps components that are zero up to round-off from dominating.
// Throws NumericalError if any evaluation is non-finite.
GradCheckResult gradient_check(const std::function<Tensor()>& loss, std::vector<Tensor> leaves,
                               double h = 1e-5, double floor = 1e-6);

// Single-point form: f is evaluated at `point` (which is made a grad leaf).
double gradient_check(const std::function<Tensor(const Tensor&)>& f, const Tensor& point,
                      double h = 1e-5, double floor = 1e-6);

}  // namespace deepselective
