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

#include "deepselective/rml.hpp"

#include "deepselective/errors.hpp"
#include "deepselective/ops.hpp"

namespace deepselective::rml {

RmlParams RmlParams::init(std::size_t num_features, std::size_t latent_dim, Initializer& init) {
  RmlParams p;
  p.gate = Linear::init(init, 2 * latent_dim, latent_dim);
  p.complement = Linear::init(init, latent_dim, latent_dim);
  p.projection = init.fan_in({num_features, latent_dim}, num_features);
  return p;
}

void RmlParams::collect(ParamList& out, const std::string& prefix) const {
  gate.collect(out, prefix + ".gate");
  complement.collect(out, prefix + ".complement");
  out.push_back({prefix + ".projection", projection});
}

namespace {
void check_pair(const char* op, const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": z_s " + shape_string(a.shape()) + " vs z_r " +
                         shape_string(b.shape()));
  }
}
}  // namespace

Tensor project_zs(const Tensor& x_masked, const Tensor& projection) {
  if (x_masked.rank() == 1) {
    return ops::reshape(ops::matmul(ops::reshape(x_masked, {1, x_masked.numel()}), projection),
                        {projection.dim(1)});
  }
  return ops::matmul(x_masked, projection);
}

Tensor r_add(const Tensor& z_s, const Tensor& z_r, const Linear& gate) {
  check_pair("r_add", z_s, z_r);
  auto z = ops::concat(z_s, z_r, z_s.rank() - 1);
  return ops::sigmoid(gate(z)) * (z_s + z_r);
}

Tensor r_sub(const Tensor& z_s, const Tensor& z_r, const Linear& complement) {
  check_pair("r_sub", z_s, z_r);
  return ops::relu(complement(z_r - z_s));
}

AlignResult align_loss(const Tensor& z_r, const Tensor& z_s, AlignMode mode) {
  check_pair("align_loss", z_s, z_r);
  auto cos = ops::cosine_similarity(z_r, z_s, 1e-12);
  auto mean_cos = ops::mean(cos.similarity);
  Tensor loss = mode == AlignMode::kComplement ? ops::add_scalar(ops::scale(mean_cos, -1.0), 1.0)
                                               : mean_cos;
  return {loss, cos.degenerate};
}

Tensor final_representation(const Tensor& r_add, const Tensor& r_sub) {
  check_pair("final_representation", r_add, r_sub);
  return ops::concat(r_add, r_sub, r_add.rank() - 1);
}

}  // namespace deepselective::rml
