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

// Attentive transformer autoencoder. Each selected feature is a token: its
// value times a per-feature value vector plus a per-feature identity embedding.
// The encoder attends only among selected tokens and mean-pools them into the
// latent z_r; the decoder expands z_r into one token per feature through
// learned queries, attends over all of them, and reads out one value per
// feature.

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "deepselective/params.hpp"
#include "deepselective/tensor.hpp"

namespace deepselective::ata {

struct AtaConfig {
  std::size_t num_features = 1;
  std::size_t latent_dim = 16;  // d; also the token width
  std::size_t heads = 4;
  std::size_t encoder_layers = 2;
  std::size_t decoder_layers = 2;
  std::size_t ff_multiplier = 4;

  std::size_t key_dim() const { return latent_dim / heads; }
  std::size_t ff_dim() const { return ff_multiplier * latent_dim; }
  void validate() const;
};

// Post-norm transformer block: LN(h + MHA(h)), then LN(h + FFN(h)).
struct TransformerLayer {
  Linear query, key, value, output;
  Tensor norm1_gain, norm1_bias;
  Linear ff_in, ff_out;
  Tensor norm2_gain, norm2_bias;

  static TransformerLayer init(Initializer& init, std::size_t width, std::size_t ff_width);
  // h: [batch, tokens, width]
  Tensor operator()(const Tensor& h, std::size_t heads) const;
  void collect(ParamList& out, const std::string& prefix) const;
};

struct AtaParams {
  AtaConfig config;
  // encoder
  Tensor value_vectors;       // [N, d]
  Tensor feature_embeddings;  // [N, d]
  std::vector<TransformerLayer> encoder;
  Linear pool;  // d -> d
  // decoder
  Linear expand;  // d -> d
  Tensor queries;  // [N, d]
  std::vector<TransformerLayer> decoder;
  Tensor readout_weight;  // [N, d]
  Tensor readout_bias;    // [N]

  static AtaParams init(const AtaConfig& config, Initializer& init);
  void collect(ParamList& out, const std::string& prefix = "ata") const;
};

struct AtaOutput {
  Tensor z_r;    // [batch, d]
  Tensor x_hat;  // [batch, N]
  Tensor recon_loss;
};

// softmax(Q_S K_Sᵀ / sqrt(d_k)) V_S on 2-D [tokens, dim] operands: rows outside
// the support never enter the computation. Output rows follow `support` order.
// Throws SelectionError for an empty support.
Tensor masked_attention(const Tensor& q, const Tensor& k, const Tensor& v,
                        std::span<const std::size_t> support);

// x_masked: [batch, N] (or [N]). Returns z_r [batch, d].
Tensor encode(const Tensor& x_masked, std::span<const std::size_t> support,
              const AtaParams& params);

// z_r: [batch, d]. Returns x_hat [batch, N] over every feature.
Tensor decode(const Tensor& z_r, const AtaParams& params);

// ‖target - x_hat‖_F over the whole batch.
Tensor reconstruction_loss(const Tensor& target, const Tensor& x_hat);

// Encode `x_masked`, decode, and score the reconstruction against `target`
// (the masked input) on the support coordinates only.
AtaOutput run(const Tensor& x_masked, const Tensor& target, std::span<const double> mask,
              std::span<const std::size_t> support, const AtaParams& params);

}  // namespace deepselective::ata
