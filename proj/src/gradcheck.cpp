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

#include "deepselective/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "deepselective/errors.hpp"

namespace deepselective {

namespace {
double finite_item(const Tensor& t) {
  const double v = t.item();
  if (!std::isfinite(v)) throw NumericalError("gradient_check: non-finite loss value");
  return v;
}
}  // namespace

GradCheckResult gradient_check(const std::function<Tensor()>& loss, std::vector<Tensor> leaves,
                               double h, double floor) {
  for (auto& leaf : leaves) {
    leaf.set_requires_grad(true);
    leaf.zero_grad();
  }
  auto out = loss();
  finite_item(out);
  out.backward();

  GradCheckResult result;
  for (std::size_t l = 0; l < leaves.size(); ++l) {
    auto& leaf = leaves[l];
    const auto analytic = leaf.grad();
    auto values = leaf.mutable_values();
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (!std::isfinite(analytic[i])) throw NumericalError("gradient_check: non-finite gradient");
      const double original = values[i];
      double plus = 0.0, minus = 0.0;
      {
        NoGradGuard guard;
        values[i] = original + h;
        plus = finite_item(loss());
        values[i] = original - h;
        minus = finite_item(loss());
        values[i] = original;
      }
      const double numeric = (plus - minus) / (2.0 * h);
      const double denom = std::max({std::abs(analytic[i]), std::abs(numeric), floor});
      const double err = std::abs(analytic[i] - numeric) / denom;
      if (err > result.max_relative_error) {
        result = {err, l, i, analytic[i], numeric};
      }
    }
  }
  return result;
}

double gradient_check(const std::function<Tensor(const Tensor&)>& f, const Tensor& point, double h,
                      double floor) {
  Tensor leaf = point.clone(true);
  return gradient_check([&] { return f(leaf); }, {leaf}, h, floor).max_relative_error;
}

}  // namespace deepselective
