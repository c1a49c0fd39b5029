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

// Dense compute kernels behind the tensor ops. The default namespace holds the
// OpenMP-parallel versions; kernels::serial holds straightforward single-thread
// references that the tests and the benchmark compare against.
//
// Parallel loops only ever partition *output* elements, so every value is
// accumulated by exactly one thread in a fixed order and results do not depend
// on the thread count.

#pragma once

#include <cstddef>
#include <span>

namespace deepselective::kernels {

// c[m×n] = a[m×k] · b[k×n]   (overwrites c)
void matmul(std::span<const double> a, std::span<const double> b, std::span<double> c,
            std::size_t m, std::size_t k, std::size_t n);
// grad_a[m×k] += g[m×n] · bᵀ
void matmul_grad_a(std::span<const double> g, std::span<const double> b,
                   std::span<double> grad_a, std::size_t m, std::size_t k, std::size_t n);
// grad_b[k×n] += aᵀ · g[m×n]
void matmul_grad_b(std::span<const double> a, std::span<const double> g,
                   std::span<double> grad_b, std::size_t m, std::size_t k, std::size_t n);

struct AttentionDims {
  std::size_t batch = 1;
  std::size_t tokens = 1;
  std::size_t model_dim = 1;
  std::size_t heads = 1;
  std::size_t head_dim() const { return model_dim / heads; }
};

// Multi-head scaled dot-product self-attention on [batch, tokens, model_dim]
// inputs already projected to Q, K, V. Head h owns columns
// [h*head_dim, (h+1)*head_dim). probs receives the [batch, heads, tokens,
// tokens] attention matrices for reuse in the backward pass.
void attention_forward(std::span<const double> q, std::span<const double> k,
                       std::span<const double> v, const AttentionDims& dims,
                       std::span<double> out, std::span<double> probs);
// Accumulates into grad_q/grad_k/grad_v; any of them may be empty to skip.
void attention_backward(std::span<const double> q, std::span<const double> k,
                        std::span<const double> v, std::span<const double> probs,
                        std::span<const double> grad_out, const AttentionDims& dims,
                        std::span<double> grad_q, std::span<double> grad_k,
                        std::span<double> grad_v);

namespace serial {

void matmul(std::span<const double> a, std::span<const double> b, std::span<double> c,
            std::size_t m, std::size_t k, std::size_t n);
void matmul_grad_a(std::span<const double> g, std::span<const double> b,
                   std::span<double> grad_a, std::size_t m, std::size_t k, std::size_t n);
void matmul_grad_b(std::span<const double> a, std::span<const double> g,
                   std::span<double> grad_b, std::size_t m, std::size_t k, std::size_t n);
void attention_forward(std::span<const double> q, std::span<const double> k,
                       std::span<const double> v, const AttentionDims& dims,
                       std::span<double> out, std::span<double> probs);
void attention_backward(std::span<const double> q, std::span<const double> k,
                        std::span<const double> v, std::span<const double> probs,
                        std::span<const double> grad_out, const AttentionDims& dims,
                        std::span<double> grad_q, std::span<double> grad_k,
                        std::span<double> grad_v);

}  // namespace serial

// Number of threads the parallel kernels will use (1 without OpenMP).
int max_threads();

}  // namespace deepselective::kernels
