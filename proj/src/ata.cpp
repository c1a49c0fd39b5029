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

#include "deepselective/ata.hpp"

#include <string>

#include "deepselective/errors.hpp"
#include "deepselective/ops.hpp"

namespace deepselective::ata {

void AtaConfig::validate() const {
  if (num_features == 0 || latent_dim == 0 || heads == 0 || encoder_layers == 0 ||
      decoder_layers == 0 || ff_multiplier == 0) {
    throw ParameterError("ATA dimensions must all be >= 1");
  }
  if (latent_dim % heads != 0) {
    throw ParameterError("latent dim " + std::to_string(latent_dim) + " not divisible by " +
                         std::to_string(heads) + " heads");
  }
}

TransformerLayer TransformerLayer::init(Initializer& init, std::size_t width,
                                        std::size_t ff_width) {
  TransformerLayer l;
  l.query = Linear::init(init, width, width);
  l.key = Linear::init(init, width, width);
  l.value = Linear::init(init, width, width);
  l.output = Linear::init(init, width, width);
  l.norm1_gain = init.constant({width}, 1.0);
  l.norm1_bias = init.constant({width}, 0.0);
  l.ff_in = Linear::init(init, width, ff_width);
  l.ff_out = Linear::init(init, ff_width, width);
  l.norm2_gain = init.constant({width}, 1.0);
  l.norm2_bias = init.constant({width}, 0.0);
  return l;
}

Tensor TransformerLayer::operator()(const Tensor& h, std::size_t heads) const {
  auto attended = ops::multihead_attention(query(h), key(h), value(h), heads);
  auto x = ops::layer_norm(h + output(attended), norm1_gain, norm1_bias);
  auto ff = ff_out(ops::relu(ff_in(x)));
  return ops::layer_norm(x + ff, norm2_gain, norm2_bias);
}

void TransformerLayer::collect(ParamList& out, const std::string& prefix) const {
  query.collect(out, prefix + ".query");
  key.collect(out, prefix + ".key");
  value.collect(out, prefix + ".value");
  output.collect(out, prefix + ".output");
  out.push_back({prefix + ".norm1.gain", norm1_gain});
  out.push_back({prefix + ".norm1.bias", norm1_bias});
  ff_in.collect(out, prefix + ".ff_in");
  ff_out.collect(out, prefix + ".ff_out");
  out.push_back({prefix + ".norm2.gain", norm2_gain});
  out.push_back({prefix + ".norm2.bias", norm2_bias});
}

AtaParams AtaParams::init(const AtaConfig& config, Initializer& init) {
  config.validate();
  const std::size_t n = config.num_features, d = config.latent_dim;
  AtaParams p;
  p.config = config;
  p.value_vectors = init.uniform({n, d}, 1.0);
  p.feature_embeddings = init.fan_in({n, d}, d);
  for (std::size_t i = 0; i < config.encoder_layers; ++i) {
    p.encoder.push_back(TransformerLayer::init(init, d, config.ff_dim()));
  }
  p.pool = Linear::init(init, d, d);
  p.expand = Linear::init(init, d, d);
  p.queries = init.fan_in({n, d}, d);
  for (std::size_t i = 0; i < config.decoder_layers; ++i) {
    p.decoder.push_back(TransformerLayer::init(init, d, config.ff_dim()));
  }
  p.readout_weight = init.fan_in({n, d}, d);
  p.readout_bias = init.constant({n}, 0.0);
  return p;
}

void AtaParams::collect(ParamList& out, const std::string& prefix) const {
  out.push_back({prefix + ".encoder.value_vectors", value_vectors});
  out.push_back({prefix + ".encoder.feature_embeddings", feature_embeddings});
  for (std::size_t i = 0; i < encoder.size(); ++i) {
    encoder[i].collect(out, prefix + ".encoder.layer" + std::to_string(i));
  }
  pool.collect(out, prefix + ".encoder.pool");
  expand.collect(out, prefix + ".decoder.expand");
  out.push_back({prefix + ".decoder.queries", queries});
  for (std::size_t i = 0; i < decoder.size(); ++i) {
    decoder[i].collect(out, prefix + ".decoder.layer" + std::to_string(i));
  }
  out.push_back({prefix + ".decoder.readout.weight", readout_weight});
  out.push_back({prefix + ".decoder.readout.bias", readout_bias});
}

Tensor masked_attention(const Tensor& q, const Tensor& k, const Tensor& v,
                        std::span<const std::size_t> support) {
  if (support.empty()) throw SelectionError("masked_attention: empty support");
  return ops::attention(ops::gather(q, 0, support), ops::gather(k, 0, support),
                        ops::gather(v, 0, support));
}

namespace {
Tensor as_batch(const Tensor& x, std::size_t n) {
  if (x.rank() == 1 && x.dim(0) == n) return ops::reshape(x, {1, n});
  if (x.rank() == 2 && x.dim(1) == n) return x;
  throw DimensionError("ATA input " + shape_string(x.shape()) + " does not have " +
                       std::to_string(n) + " features");
}
}  // namespace

Tensor encode(const Tensor& x_masked, std::span<const std::size_t> support,
              const AtaParams& params) {
  if (support.empty()) throw SelectionError("encode: empty support");
  const auto& cfg = params.config;
  auto x = as_batch(x_masked, cfg.num_features);
  const std::size_t batch = x.dim(0), tokens = support.size();
  auto selected = ops::reshape(ops::gather(x, 1, support), {batch, tokens, 1});
  auto h = selected * ops::gather(params.value_vectors, 0, support) +
           ops::gather(params.feature_embeddings, 0, support);
  for (const auto& layer : params.encoder) h = layer(h, cfg.heads);
  return params.pool(ops::mean(h, 1));
}

Tensor decode(const Tensor& z_r, const AtaParams& params) {
  const auto& cfg = params.config;
  if (z_r.rank() != 2 || z_r.dim(1) != cfg.latent_dim) {
    throw DimensionError("decode: latent " + shape_string(z_r.shape()) + " is not [batch, " +
                         std::to_string(cfg.latent_dim) + "]");
  }
  const std::size_t batch = z_r.dim(0);
  auto h = ops::reshape(params.expand(z_r), {batch, 1, cfg.latent_dim}) + params.queries;
  for (const auto& layer : params.decoder) h = layer(h, cfg.heads);
  return ops::sum(h * params.readout_weight, 2) + params.readout_bias;
}

Tensor reconstruction_loss(const Tensor& target, const Tensor& x_hat) {
  if (target.shape() != x_hat.shape()) {
    throw DimensionError("reconstruction_loss: target " + shape_string(target.shape()) +
                         " vs reconstruction " + shape_string(x_hat.shape()));
  }
  return ops::frobenius_norm(target - x_hat);
}

AtaOutput run(const Tensor& x_masked, const Tensor& target, std::span<const double> mask,
              std::span<const std::size_t> support, const AtaParams& params) {
  const std::size_t n = params.config.num_features;
  AtaOutput out;
  out.z_r = encode(x_masked, support, params);
  out.x_hat = decode(out.z_r, params);
  auto m = Tensor::from({n}, std::vector<double>(mask.begin(), mask.end()));
  out.recon_loss = reconstruction_loss(as_batch(target, n), out.x_hat * m);
  return out;
}

}  // namespace deepselective::ata
