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

#include "deepselective/optimizer.hpp"

#include <cmath>

#include "deepselective/errors.hpp"

namespace deepselective {

void adam_step(ParamList& params, AdamState& state, const AdamConfig& config) {
  if (state.first.empty()) {
    for (const auto& p : params) {
      state.first.emplace_back(p.tensor.numel(), 0.0);
      state.second.emplace_back(p.tensor.numel(), 0.0);
    }
  }
  if (state.first.size() != params.size()) {
    throw DimensionError("optimizer state does not match the parameter list");
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(config.beta1, t);
  const double c2 = 1.0 - std::pow(config.beta2, t);
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto& tensor = params[k].tensor;
    const bool has_grad = tensor.has_grad();
    auto value = tensor.mutable_values();
    std::span<const double> grad;
    if (has_grad) grad = tensor.mutable_grad();
    auto& m = state.first[k];
    auto& v = state.second[k];
    for (std::size_t i = 0; i < value.size(); ++i) {
      const double g = has_grad ? grad[i] : 0.0;
      m[i] = config.beta1 * m[i] + (1.0 - config.beta1) * g;
      v[i] = config.beta2 * v[i] + (1.0 - config.beta2) * g * g;
      value[i] -= config.learning_rate * (m[i] / c1) / (std::sqrt(v[i] / c2) + config.eps);
    }
  }
}

void zero_grads(ParamList& params) {
  for (auto& p : params) p.tensor.zero_grad();
}

}  // namespace deepselective
