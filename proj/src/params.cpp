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

#include "deepselective/params.hpp"

#include <cmath>

#include "deepselective/ops.hpp"

namespace deepselective {

double Initializer::uniform(double lo, double hi) {
  const double u = static_cast<double>(rng_() >> 11) * 0x1.0p-53;
  return lo + (hi - lo) * u;
}

Tensor Initializer::uniform(Shape shape, double bound) {
  std::vector<double> v(shape_numel(shape));
  for (auto& x : v) x = uniform(-bound, bound);
  return Tensor::from(std::move(shape), std::move(v), true);
}

Tensor Initializer::fan_in(Shape shape, std::size_t fan_in) {
  return uniform(std::move(shape), 1.0 / std::sqrt(static_cast<double>(fan_in)));
}

Tensor Initializer::constant(Shape shape, double value) {
  return Tensor::full(std::move(shape), value, true);
}

Linear Linear::init(Initializer& init, std::size_t in, std::size_t out) {
  return {init.fan_in({in, out}, in), init.constant({out}, 0.0)};
}

Tensor Linear::operator()(const Tensor& x) const { return ops::linear(x, weight, bias); }

void Linear::collect(ParamList& out, const std::string& prefix) const {
  out.push_back({prefix + ".weight", weight});
  out.push_back({prefix + ".bias", bias});
}

}  // namespace deepselective
