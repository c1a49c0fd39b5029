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

#include "deepselective/dgfs.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <nlohmann/json.hpp>

#include "deepselective/errors.hpp"
#include "deepselective/gumbel.hpp"
#include "deepselective/ops.hpp"

namespace deepselective::dgfs {

std::vector<std::size_t> select_support(std::span<const double> p) {
  std::vector<std::size_t> order(p.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return p[a] > p[b]; });
  std::vector<std::size_t> support;
  double mass = 0.0;
  for (auto i : order) {
    support.push_back(i);
    mass += p[i];
    if (mass >= kSupportMass) break;
  }
  std::sort(support.begin(), support.end());
  return support;
}

SelectionState compute_selection(const Tensor& log_pi, double tau, const Tensor& noise) {
  if (log_pi.rank() != 1) {
    throw DimensionError("compute_selection: logits must be 1-D, got " +
                         shape_string(log_pi.shape()));
  }
  SelectionState state;
  state.log_pi = log_pi;
  state.tau = tau;
  state.noise = noise;
  state.p = gumbel::gumbel_softmax(log_pi, noise, tau);
  state.support = select_support(state.p.values());
  state.mask.assign(log_pi.numel(), 0.0);
  for (auto i : state.support) state.mask[i] = 1.0;
  return state;
}

SelectionState compute_selection(const Tensor& log_pi, double tau,
                                 std::optional<std::uint64_t> seed) {
  Tensor noise = seed ? gumbel::sample_gumbel(log_pi.shape(), *seed).noise
                      : Tensor::zeros(log_pi.shape());
  return compute_selection(log_pi, tau, noise);
}

namespace {
void check_last_dim(const char* op, const Tensor& x, const SelectionState& state) {
  if (x.rank() == 0 || x.shape().back() != state.num_features()) {
    throw DimensionError(std::string(op) + ": input " + shape_string(x.shape()) +
                         " does not end in " + std::to_string(state.num_features()) + " features");
  }
}
}  // namespace

Tensor apply_mask(const Tensor& x, const SelectionState& state) {
  check_last_dim("apply_mask", x, state);
  return ops::mul(x, Tensor::from({state.num_features()}, state.mask));
}

Tensor straight_through_mask(const Tensor& x, const SelectionState& state, MaskForward forward) {
  check_last_dim("straight_through_mask", x, state);
  const std::size_t n = state.num_features();
  const auto p = state.p.values();
  // Per-coordinate forward factor: m_i, or p_i on the support when relaxed.
  std::vector<double> factor(state.mask);
  if (forward == MaskForward::kRelaxed) {
    for (std::size_t i = 0; i < n; ++i) factor[i] *= p[i];
  }
  const auto vx = x.values();
  std::vector<double> out(vx.size());
  for (std::size_t f = 0; f < vx.size(); ++f) out[f] = vx[f] * factor[f % n];

  auto* xn = x.node().get();
  auto* pn = state.p.node().get();
  return detail::make_result(
      x.shape(), std::move(out), {x, state.p},
      [xn, pn, n, factor = std::move(factor), mask = state.mask](detail::Node& self) {
        const auto& g = self.grad;
        if (xn->requires_grad) {
          auto& gx = xn->grad_buffer();
          for (std::size_t f = 0; f < g.size(); ++f) gx[f] += g[f] * factor[f % n];
        }
        if (pn->requires_grad) {
          auto& gp = pn->grad_buffer();
          for (std::size_t f = 0; f < g.size(); ++f) {
            const std::size_t i = f % n;
            if (mask[i] != 0.0) gp[i] += g[f] * xn->value[f];
          }
        }
      });
}

Tensor sparsity_penalty(const SelectionState& state, double alpha) {
  const std::size_t n = state.num_features();
  if (n < 2) return Tensor::scalar(0.0);
  const double inv_log_n = 1.0 / std::log(static_cast<double>(n));
  // alpha - alpha * H / log N
  return ops::add_scalar(ops::scale(ops::entropy(state.p), -alpha * inv_log_n), alpha);
}

std::string support_json(const SelectionState& state,
                         std::span<const std::string> feature_names) {
  nlohmann::json j;
  j["support"] = state.support;
  j["probabilities"] = std::vector<double>(state.p.values().begin(), state.p.values().end());
  j["feature_names"] = std::vector<std::string>(feature_names.begin(), feature_names.end());
  return j.dump(2);
}

}  // namespace deepselective::dgfs
