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

// Dynamic gating feature selection: per-feature logits are relaxed with
// Gumbel-Softmax, the relaxed probabilities are thresholded to the smallest
// support carrying half of the mass, and inputs are masked to that support.

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "deepselective/tensor.hpp"

namespace deepselective::dgfs {

inline constexpr double kSupportMass = 0.5;

struct SelectionState {
  Tensor log_pi;                     // trainable logits [N]
  double tau = 1.0;
  Tensor noise;                      // Gumbel noise used for p (zeros at inference)
  Tensor p;                          // relaxed selection probabilities [N]
  std::vector<double> mask;          // m_i = 1 iff i in support
  std::vector<std::size_t> support;  // ascending feature indices

  std::size_t num_features() const { return mask.size(); }
  bool selected(std::size_t i) const { return mask.at(i) != 0.0; }
};

// Smallest index set whose probabilities sum to at least kSupportMass, built by
// admitting indices in descending-probability order (equal probabilities: lower
// index first). Returned in ascending index order.
std::vector<std::size_t> select_support(std::span<const double> p);

// p = gumbel_softmax(log_pi, noise, tau), then the support above.
// With no seed the noise is zero, which is the deterministic inference path.
SelectionState compute_selection(const Tensor& log_pi, double tau,
                                 std::optional<std::uint64_t> seed);
SelectionState compute_selection(const Tensor& log_pi, double tau, const Tensor& noise);

// x ⊙ m over the last axis. Unselected coordinates are exactly 0 and receive
// exactly 0 gradient.
Tensor apply_mask(const Tensor& x, const SelectionState& state);

enum class MaskForward {
  kHard,     // forward x ⊙ m (training and inference)
  kRelaxed,  // forward x ⊙ p_S; the function whose exact gradient kHard reports for log_pi
};

// Forward x ⊙ m; backward sends g ⊙ m to x and Σ_rows g ⊙ x ⊙ 1_S to p, so the
// logits learn only through selected coordinates. kRelaxed switches the forward
// to x ⊙ p_S (and the x-gradient to g ⊙ p_S) for gradient checking.
Tensor straight_through_mask(const Tensor& x, const SelectionState& state,
                             MaskForward forward = MaskForward::kHard);

// alpha * (1 - H(p) / log N): 0 for uniform p, alpha for one-hot p.
Tensor sparsity_penalty(const SelectionState& state, double alpha);

// {"support": [...], "probabilities": [...], "feature_names": [...]}
std::string support_json(const SelectionState& state, std::span<const std::string> feature_names);

}  // namespace deepselective::dgfs
