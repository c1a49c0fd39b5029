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

#include "deepselective/gumbel.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "deepselective/errors.hpp"
#include "deepselective/ops.hpp"

namespace deepselective::gumbel {

double gumbel_from_uniform(double u) {
  u = std::clamp(u, kUniformClamp, 1.0 - kUniformClamp);
  return -std::log(-std::log(u));
}

GumbelSample sample_gumbel(const Shape& shape, std::uint64_t seed) {
  if (shape.empty()) throw DimensionError("sample_gumbel: empty shape");
  std::mt19937_64 rng(seed);
  std::vector<double> values(shape_numel(shape));
  for (auto& v : values) {
    // 53 random mantissa bits -> [0, 1); identical across standard libraries.
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    v = gumbel_from_uniform(u);
  }
  return {Tensor::from(shape, std::move(values)), seed};
}

Tensor gumbel_softmax(const Tensor& log_pi, const Tensor& noise, double tau) {
  if (!(tau > 0.0) || !std::isfinite(tau)) {
    throw ParameterError("gumbel_softmax: temperature must be positive, got " + std::to_string(tau));
  }
  if (log_pi.rank() != 1 || noise.shape() != log_pi.shape()) {
    throw DimensionError("gumbel_softmax: logits " + shape_string(log_pi.shape()) + " vs noise " +
                         shape_string(noise.shape()));
  }
  for (double v : log_pi.values()) {
    if (!std::isfinite(v)) throw NumericalError("gumbel_softmax: non-finite logit");
  }
  return ops::softmax(ops::scale(ops::add(log_pi, noise), 1.0 / tau), 0);
}

std::size_t hard_limit_argmax(std::span<const double> log_pi, std::span<const double> noise) {
  if (log_pi.size() != noise.size() || log_pi.empty()) {
    throw DimensionError("hard_limit_argmax: " + std::to_string(log_pi.size()) + " logits vs " +
                         std::to_string(noise.size()) + " noise values");
  }
  std::size_t best = 0;
  double best_value = log_pi[0] + noise[0];
  for (std::size_t i = 1; i < log_pi.size(); ++i) {
    const double v = log_pi[i] + noise[i];
    if (v > best_value) {
      best = i;
      best_value = v;
    }
  }
  return best;
}

}  // namespace deepselective::gumbel
