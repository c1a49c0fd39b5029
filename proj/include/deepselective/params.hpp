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

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "deepselective/tensor.hpp"

namespace deepselective {

struct NamedParam {
  std::string name;
  Tensor tensor;
};
using ParamList = std::vector<NamedParam>;

// Seeded source for parameter initialization.
class Initializer {
 public:
  explicit Initializer(std::uint64_t seed) : rng_(seed) {}

  double uniform(double lo, double hi);
  // U(-bound, bound) leaf that requires grad.
  Tensor uniform(Shape shape, double bound);
  // U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
  Tensor fan_in(Shape shape, std::size_t fan_in);
  Tensor constant(Shape shape, double value);

 private:
  std::mt19937_64 rng_;
};

// Standard trainable affine map x·W + b, weight stored [in, out].
struct Linear {
  Tensor weight;
  Tensor bias;

  static Linear init(Initializer& init, std::size_t in, std::size_t out);
  Tensor operator()(const Tensor& x) const;
  void collect(ParamList& out, const std::string& prefix) const;
};

}  // namespace deepselective
