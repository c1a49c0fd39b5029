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

// Differentiable tensor operations. Every function records its backward pass
// on the graph when grad mode is on and an input requires grad.
//
// Binary elementwise ops broadcast with the usual right-aligned rule: a size-1
// or missing leading dimension stretches to match the other operand.

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "deepselective/tensor.hpp"

namespace deepselective::ops {

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double factor);
Tensor add_scalar(const Tensor& a, double offset);

Tensor sigmoid(const Tensor& x);
// Subgradient at exactly 0 is 0.
Tensor relu(const Tensor& x);

// Max-subtracted softmax along `axis`.
Tensor softmax(const Tensor& x, std::size_t axis);
// Normalizes over the last axis, then applies gain and bias of that length.
Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias,
                  double eps = 1e-5);

Tensor concat(const Tensor& a, const Tensor& b, std::size_t axis);
Tensor reshape(const Tensor& x, Shape shape);
// Selects entries of `axis` in the given order (indices may repeat).
Tensor gather(const Tensor& x, std::size_t axis, std::span<const std::size_t> indices);

Tensor sum(const Tensor& x);
Tensor sum(const Tensor& x, std::size_t axis);
Tensor mean(const Tensor& x);
Tensor mean(const Tensor& x, std::size_t axis);

// Euclidean norm over the last axis; result drops that axis ([1] for vectors).
Tensor l2_norm(const Tensor& x);
// sqrt of the sum of squares of every element. The gradient at 0 is taken as 0.
Tensor frobenius_norm(const Tensor& x);

// Mean binary cross-entropy of probabilities against {0,1} targets.
// Probabilities are clamped to [1e-7, 1 - 1e-7] first; the clamp passes no gradient.
Tensor binary_cross_entropy(const Tensor& prob, std::span<const double> targets);

// Shannon entropy (nats) of all elements, with 0 log 0 = 0.
Tensor entropy(const Tensor& p);

struct CosineResult {
  Tensor similarity;           // one value per row of the last axis
  std::size_t degenerate = 0;  // rows where either norm was below the floor
};
// Cosine similarity along the last axis. Rows where either vector has norm
// below `norm_floor` report similarity 0 and pass no gradient.
CosineResult cosine_similarity(const Tensor& a, const Tensor& b, double norm_floor = 1e-12);

// softmax(Q Kᵀ / sqrt(d_k)) V on 2-D operands, built from the primitives above.
Tensor attention(const Tensor& q, const Tensor& k, const Tensor& v);

// Fused multi-head self-attention on [batch, tokens, model_dim] inputs.
Tensor multihead_attention(const Tensor& q, const Tensor& k, const Tensor& v,
                           std::size_t heads);

// x[..., in] · weight[in, out] + bias[out]
Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias);

}  // namespace deepselective::ops

namespace deepselective {

inline Tensor operator+(const Tensor& a, const Tensor& b) { return ops::add(a, b); }
inline Tensor operator-(const Tensor& a, const Tensor& b) { return ops::sub(a, b); }
inline Tensor operator*(const Tensor& a, const Tensor& b) { return ops::mul(a, b); }
inline Tensor operator*(const Tensor& a, double s) { return ops::scale(a, s); }
inline Tensor operator*(double s, const Tensor& a) { return ops::scale(a, s); }

}  // namespace deepselective
