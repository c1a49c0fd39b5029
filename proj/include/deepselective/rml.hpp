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

// Representation matching: fuses the selection-side representation z_s with
// the autoencoder latent z_r.
//   r_add = sigmoid([z_s; z_r]·W1 + b1) ⊙ (z_s + z_r)
//   r_sub = relu((z_r - z_s)·W2 + b2)
// Weights are stored [in, out] and applied to row vectors.

#pragma once

#include <cstddef>
#include <string>

#include "deepselective/params.hpp"
#include "deepselective/tensor.hpp"

namespace deepselective::rml {

struct RmlParams {
  Linear gate;        // 2d -> d  (W1, b1)
  Linear complement;  // d -> d   (W2, b2)
  Tensor projection;  // [N, d]   z_s = x_masked · P

  static RmlParams init(std::size_t num_features, std::size_t latent_dim, Initializer& init);
  void collect(ParamList& out, const std::string& prefix = "rml") const;
};

Tensor project_zs(const Tensor& x_masked, const Tensor& projection);
Tensor r_add(const Tensor& z_s, const Tensor& z_r, const Linear& gate);
Tensor r_sub(const Tensor& z_s, const Tensor& z_r, const Linear& complement);

enum class AlignMode {
  kComplement,  // 1 - cos(z_r, z_s): minimizing aligns the two
  kRawCosine,   // cos(z_r, z_s) exactly as written
};

struct AlignResult {
  Tensor loss;                 // batch mean
  std::size_t degenerate = 0;  // rows with a (near-)zero vector, scored neutral
};

// Rows where either vector has norm below 1e-12 contribute cos = 0.
AlignResult align_loss(const Tensor& z_r, const Tensor& z_s,
                       AlignMode mode = AlignMode::kComplement);

// [r_add; r_sub] along the last axis.
Tensor final_representation(const Tensor& r_add, const Tensor& r_sub);

}  // namespace deepselective::rml
