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

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include <gtest/gtest.h>

#include "deepselective/ata.hpp"
#include "deepselective/errors.hpp"
#include "deepselective/gradcheck.hpp"
#include "deepselective/ops.hpp"
#include "deepselective/optimizer.hpp"
#include "testing.hpp"

namespace deepselective::ata {
namespace {

using testing::random_tensor;

AtaParams tiny(std::size_t n = 6, std::size_t d = 4, std::size_t heads = 1,
               std::uint64_t seed = 1) {
  AtaConfig c;
  c.num_features = n;
  c.latent_dim = d;
  c.heads = heads;
  c.encoder_layers = 1;
  c.decoder_layers = 1;
  c.ff_multiplier = 2;
  Initializer init(seed);
  return AtaParams::init(c, init);
}

Tensor mask_input(const Tensor& x, const std::vector<std::size_t>& support) {
  const std::size_t n = x.shape().back();
  std::vector<double> m(n, 0.0);
  for (auto i : support) m[i] = 1.0;
  return ops::mul(x, Tensor::from({n}, m));
}

std::vector<double> mask_of(std::size_t n, const std::vector<std::size_t>& support) {
  std::vector<double> m(n, 0.0);
  for (auto i : support) m[i] = 1.0;
  return m;
}

TEST(AttentionTest, SingleTokenReturnsValue) {
  auto v = Tensor::matrix({{0.3, -1.2, 4.0}});
  auto out = ops::attention(random_tensor({1, 2}, 1, false), random_tensor({1, 2}, 2, false), v);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_DOUBLE_EQ(out.at(i), v.at(i));
}

TEST(AttentionTest, OrthogonalQueryAveragesValues) {
  auto q = Tensor::matrix({{1, 0}});
  auto k = Tensor::matrix({{0, 2}, {0, -2}, {0, 2}});
  auto v = Tensor::matrix({{1, 2}, {3, 5}, {-1, 8}});
  auto out = ops::attention(q, k, v);
  EXPECT_NEAR(out.at(0), 1.0, 1e-15);
  EXPECT_NEAR(out.at(1), 5.0, 1e-15);
}

TEST(AttentionTest, MatchesExtendedPrecisionEvaluation) {
  auto q = random_tensor({2, 4}, 3, false), k = random_tensor({2, 4}, 4, false),
       v = random_tensor({2, 4}, 5, false);
  auto out = ops::attention(q, k, v);
  for (std::size_t i = 0; i < 2; ++i) {
    long double s[2], z = 0;
    for (std::size_t j = 0; j < 2; ++j) {
      long double dot = 0;
      for (std::size_t c = 0; c < 4; ++c) dot += (long double)q.at(i * 4 + c) * k.at(j * 4 + c);
      s[j] = std::exp(dot / 2.0L);
      z += s[j];
    }
    for (std::size_t c = 0; c < 4; ++c) {
      long double o = (s[0] * v.at(c) + s[1] * v.at(4 + c)) / z;
      EXPECT_NEAR(out.at(i * 4 + c), static_cast<double>(o), 1e-10);
    }
  }
  EXPECT_THROW(ops::attention(q, random_tensor({2, 3}, 6, false), v), DimensionError);
}

TEST(MaskedAttentionTest, FullSupportEqualsPlainAttention) {
  auto q = random_tensor({5, 4}, 7, false), k = random_tensor({5, 4}, 8, false),
       v = random_tensor({5, 3}, 9, false);
  std::vector<std::size_t> all(5);
  std::iota(all.begin(), all.end(), 0);
  auto a = masked_attention(q, k, v, all);
  auto b = ops::attention(q, k, v);
  EXPECT_TRUE(std::equal(a.values().begin(), a.values().end(), b.values().begin()));
}

TEST(MaskedAttentionTest, SingleSelectedTokenSeesOnlyItself) {
  auto q = random_tensor({5, 4}, 10, false), k = random_tensor({5, 4}, 11, false),
       v = random_tensor({5, 3}, 12, false);
  const std::vector<std::size_t> s{3};
  auto out = masked_attention(q, k, v, s);
  for (std::size_t c = 0; c < 3; ++c) EXPECT_DOUBLE_EQ(out.at(c), v.at(9 + c));
  EXPECT_THROW(masked_attention(q, k, v, std::vector<std::size_t>{}), SelectionError);
}

TEST(MaskedAttentionTest, RowsOutsideSupportAreIrrelevant) {
  const std::vector<std::size_t> s{0, 2, 3};
  auto q = random_tensor({5, 4}, 13), k = random_tensor({5, 4}, 14), v = random_tensor({5, 3}, 15);
  auto w = random_tensor({3, 3}, 16, false);
  auto out1 = masked_attention(q, k, v, s);
  ops::sum(out1 * w).backward();
  const auto gq = q.grad(), gk = k.grad(), gv = v.grad();

  auto q2 = q.clone(true), k2 = k.clone(true), v2 = v.clone(true);
  for (std::size_t r : {1u, 4u}) {
    for (std::size_t c = 0; c < 4; ++c) {
      q2.mutable_values()[r * 4 + c] = 100.0 + c;
      k2.mutable_values()[r * 4 + c] = -50.0;
    }
    for (std::size_t c = 0; c < 3; ++c) v2.mutable_values()[r * 3 + c] = 1e6;
  }
  auto out2 = masked_attention(q2, k2, v2, s);
  ops::sum(out2 * w).backward();
  EXPECT_TRUE(std::equal(out1.values().begin(), out1.values().end(), out2.values().begin()));
  EXPECT_EQ(gq, q2.grad());
  EXPECT_EQ(gk, k2.grad());
  EXPECT_EQ(gv, v2.grad());
  for (std::size_t r : {1u, 4u})
    for (std::size_t c = 0; c < 4; ++c) EXPECT_EQ(gq[r * 4 + c], 0.0);
}

TEST(EncodeTest, DeterministicAndBlindOutsideSupport) {
  auto p = tiny(6, 8, 2);
  const std::vector<std::size_t> s{1, 4, 5};
  auto x = random_tensor({3, 6}, 17, false);
  auto z1 = encode(mask_input(x, s), s, p);
  auto z2 = encode(mask_input(x, s), s, p);
  EXPECT_TRUE(std::equal(z1.values().begin(), z1.values().end(), z2.values().begin()));
  EXPECT_EQ(z1.shape(), (Shape{3, 8}));

  // Raw (unmasked) input with arbitrary values outside S encodes identically.
  auto noisy = x.clone();
  for (std::size_t r = 0; r < 3; ++r) {
    noisy.mutable_values()[r * 6 + 0] = 42.0;
    noisy.mutable_values()[r * 6 + 3] = -7.0 * r;
  }
  auto z3 = encode(noisy, s, p);
  EXPECT_TRUE(std::equal(z1.values().begin(), z1.values().end(), z3.values().begin()));
  EXPECT_THROW(encode(x, std::vector<std::size_t>{}, p), SelectionError);
}

TEST(EncodeTest, SingleSampleVectorInput) {
  auto p = tiny();
  const std::vector<std::size_t> s{0, 2};
  auto x = random_tensor({6}, 18, false);
  auto z = encode(x, s, p);
  EXPECT_EQ(z.shape(), (Shape{1, 4}));
}

TEST(EncodeTest, LatentNormGradientMatchesFiniteDifferences) {
  auto p = tiny();
  const std::vector<std::size_t> s{0, 3, 4};
  auto x = random_tensor({2, 6}, 19, false);
  ParamList params;
  p.collect(params);
  std::vector<Tensor> encoder_leaves;
  for (auto& np : params)
    if (np.name.find(".encoder.") != std::string::npos) encoder_leaves.push_back(np.tensor);
  ASSERT_FALSE(encoder_leaves.empty());
  auto loss = [&] {
    auto z = encode(x, s, p);
    return ops::sum(z * z);
  };
  const auto r = gradient_check(loss, encoder_leaves);
  EXPECT_LT(r.max_relative_error, 1e-4) << params.size();
}

TEST(DecodeTest, ShapeAndDeterminism) {
  auto p = tiny(7, 4, 2);
  auto z = random_tensor({5, 4}, 20, false);
  auto a = decode(z, p), b = decode(z, p);
  EXPECT_EQ(a.shape(), (Shape{5, 7}));
  EXPECT_TRUE(std::equal(a.values().begin(), a.values().end(), b.values().begin()));
  EXPECT_THROW(decode(random_tensor({5, 3}, 21, false), p), DimensionError);
}

TEST(ReconstructionLossTest, Values) {
  auto t = Tensor::matrix({{1, 2}, {3, 4}});
  EXPECT_EQ(reconstruction_loss(t, t).item(), 0.0);
  auto diff = Tensor::matrix({{3, 0}, {0, 4}});
  EXPECT_DOUBLE_EQ(reconstruction_loss(t + diff, t).item(), 5.0);
  auto a = random_tensor({4, 5}, 22, false), b = random_tensor({4, 5}, 23, false);
  double ss = 0.0;
  for (std::size_t i = 0; i < 20; ++i) ss += (a.at(i) - b.at(i)) * (a.at(i) - b.at(i));
  EXPECT_NEAR(reconstruction_loss(a, b).item(), std::sqrt(ss), 1e-12);
  EXPECT_THROW(reconstruction_loss(a, random_tensor({5, 4}, 24, false)), DimensionError);
}

TEST(AtaRunTest, LeakageInvarianceOfLatentAndReconstruction) {
  auto p = tiny(6, 4, 2);
  const std::vector<std::size_t> s{1, 2};
  const auto m = mask_of(6, s);
  auto x = random_tensor({4, 6}, 25, true);
  auto xm = mask_input(x, s);
  auto out = run(xm, xm.detach(), m, s, p);
  out.recon_loss.backward();
  auto x2 = x.clone(true);
  for (std::size_t r = 0; r < 4; ++r) x2.mutable_values()[r * 6 + 5] = 9.0;
  auto xm2 = mask_input(x2, s);
  auto out2 = run(xm2, xm2.detach(), m, s, p);
  EXPECT_TRUE(std::equal(out.z_r.values().begin(), out.z_r.values().end(), out2.z_r.values().begin()));
  EXPECT_TRUE(std::equal(out.x_hat.values().begin(), out.x_hat.values().end(),
                         out2.x_hat.values().begin()));
  const auto g = x.grad();
  for (std::size_t r = 0; r < 4; ++r)
    for (std::size_t i : {0u, 3u, 4u, 5u}) EXPECT_EQ(g[r * 6 + i], 0.0);
}

TEST(AtaRunTest, AllParametersPassFiniteDifferences) {
  auto p = tiny();
  const std::vector<std::size_t> s{0, 2, 5};
  const auto m = mask_of(6, s);
  auto x = mask_input(random_tensor({3, 6}, 26, false), s);
  ParamList params;
  p.collect(params);
  std::vector<Tensor> leaves;
  for (auto& np : params) leaves.push_back(np.tensor);
  auto loss = [&] {
    auto o = run(x, x, m, s, p);
    return o.recon_loss + ops::sum(o.z_r * o.z_r) * 0.1;
  };
  const auto r = gradient_check(loss, leaves);
  EXPECT_LT(r.max_relative_error, 1e-4) << params[r.worst_leaf].name;
}

TEST(AtaRunTest, ReconstructionLossIsPermutationEquivariant) {
  auto p = tiny(5, 4, 2);
  const std::vector<std::size_t> s{0, 1, 3};
  const std::vector<std::size_t> perm{3, 0, 4, 1, 2};  // new i <- old perm[i]
  auto x = mask_input(random_tensor({3, 5}, 27, false), s);
  const auto loss = run(x, x, mask_of(5, s), s, p).recon_loss.item();

  auto q = p;
  auto rows = [&](const Tensor& t) { return ops::gather(t, 0, perm).detach(); };
  q.value_vectors = rows(p.value_vectors);
  q.feature_embeddings = rows(p.feature_embeddings);
  q.queries = rows(p.queries);
  q.readout_weight = rows(p.readout_weight);
  q.readout_bias = rows(p.readout_bias);
  auto xp = ops::gather(x, 1, perm);
  std::vector<std::size_t> sp;
  for (std::size_t i = 0; i < 5; ++i)
    if (std::find(s.begin(), s.end(), perm[i]) != s.end()) sp.push_back(i);
  const auto permuted = run(xp, xp, mask_of(5, sp), sp, q).recon_loss.item();
  EXPECT_NEAR(loss, permuted, 1e-12);
}

TEST(AtaRunTest, ReconstructionOverfitsSixteenSamples) {
  auto p = tiny(6, 8, 2, 3);
  const std::vector<std::size_t> s{0, 1, 2, 4};
  const auto m = mask_of(6, s);
  auto x = mask_input(random_tensor({16, 6}, 28, false), s);
  ParamList params;
  p.collect(params);
  AdamState state;
  AdamConfig cfg;
  cfg.learning_rate = 1e-2;
  double first = 0.0, last = 0.0;
  for (int step = 0; step < 500; ++step) {
    zero_grads(params);
    auto loss = run(x, x, m, s, p).recon_loss;
    if (step == 0) first = loss.item();
    last = loss.item();
    loss.backward();
    adam_step(params, state, cfg);
  }
  EXPECT_LT(last, 0.1 * first) << first << " -> " << last;
}

TEST(AtaConfigTest, Validation) {
  AtaConfig c;
  c.num_features = 4;
  c.latent_dim = 6;
  c.heads = 4;
  EXPECT_THROW(c.validate(), ParameterError);
  c.heads = 3;
  EXPECT_NO_THROW(c.validate());
  EXPECT_EQ(c.key_dim(), 2u);
  c.encoder_layers = 0;
  EXPECT_THROW(c.validate(), ParameterError);
}

}  // namespace
}  // namespace deepselective::ata
