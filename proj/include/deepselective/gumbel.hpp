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
#include <cstdint>
#include <span>

#include "deepselective/tensor.hpp"

namespace deepselective::gumbel {

// Uniform draws are clamped into this open interval before the double log.
inline constexpr double kUniformClamp = 1e-12;

struct GumbelSample {
  Tensor noise;  // i.i.d. Gumbel(0, 1), never requires grad
  std::uint64_t seed = 0;
};

// -log(-log(u)) with u clamped to (kUniformClamp, 1 - kUniformClamp).
double gumbel_from_uniform(double u);

// Reproducible Gumbel(0,1) noise: the same (shape, seed) gives the same bits.
GumbelSample sample_gumbel(const Shape& shape, std::uint64_t seed);

// z_i = exp((log_pi_i + g_i) / tau) / sum_j exp((log_pi_j + g_j) / tau) on a
// 1-D tensor. Differentiable in log_pi; the noise is a constant.
// Throws ParameterError for tau <= 0, NumericalError for non-finite logits.
Tensor gumbel_softmax(const Tensor& log_pi, const Tensor& noise, double tau);

// Index of the largest log_pi_i + g_i; ties go to the lowest index.
std::size_t hard_limit_argmax(std::span<const double> log_pi, std::span<const double> noise);

}  // namespace deepselective::gumbel
