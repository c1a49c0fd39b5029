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

#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "deepselective/kernels.hpp"
#include "testing.hpp"

namespace deepselective::kernels {
namespace {

using testing::random_values;

// Triple loop written out here rather than borrowed from the library.
std::vector<double> reference_matmul(const std::vector<double>& a, const std::vector<double>& b,
                                     std::size_t m, std::size_t k, std::size_t n) {
  std::vector<double> c(m * n, 0.0);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t p = 0; p < k; ++p) c[i * n + j] += a[i * k + p] * b[p * n + j];
  return c;
}

void expect_close(const std::vector<double>& x, const std::vector<double>& y, double tol) {
  ASSERT_EQ(x.size(), y.size());
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_NEAR(x[i], y[i], tol) << "at " << i;
}

struct MatmulCase {
  std::size_t m, k, n;
};

class MatmulKernelTest : public ::testing::TestWithParam<MatmulCase> {};

TEST_P(MatmulKernelTest, ParallelAndSerialAgreeWithReference) {
  const auto [m, k, n] = GetParam();
  const auto a = random_values(m * k, 1), b = random_values(k * n, 2), g = random_values(m * n, 3);
  const auto ref = reference_matmul(a, b, m, k, n);

  std::vector<double> c(m * n), cs(m * n);
  matmul(a, b, c, m, k, n);
  serial::matmul(a, b, cs, m, k, n);
  expect_close(c, ref, 1e-12);
  expect_close(cs, ref, 1e-12);

  std::vector<double> ga(m * k, 1.0), gas(m * k, 1.0), gb(k * n, -1.0), gbs(k * n, -1.0);
  matmul_grad_a(g, b, ga, m, k, n);
  serial::matmul_grad_a(g, b, gas, m, k, n);
  matmul_grad_b(a, g, gb, m, k, n);
  serial::matmul_grad_b(a, g, gbs, m, k, n);
  expect_close(ga, gas, 1e-12);
  expect_close(gb, gbs, 1e-12);

  std::vector<double> again(k * n, -1.0);
  matmul_grad_b(a, g, again, m, k, n);
  EXPECT_EQ(gb, again);

  // grad_a = 1 + G Bᵀ, grad_b = -1 + Aᵀ G
  std::vector<double> bt(n * k), at(k * m);
  for (std::size_t p = 0; p < k; ++p)
    for (std::size_t j = 0; j < n; ++j) bt[j * k + p] = b[p * n + j];
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t p = 0; p < k; ++p) at[p * m + i] = a[i * k + p];
  auto ga_ref = reference_matmul(g, bt, m, n, k);
  auto gb_ref = reference_matmul(at, g, k, m, n);
  for (auto& v : ga_ref) v += 1.0;
  for (auto& v : gb_ref) v -= 1.0;
  expect_close(ga, ga_ref, 1e-12);
  expect_close(gb, gb_ref, 1e-12);
}

INSTANTIATE_TEST_SUITE_P(Shapes, MatmulKernelTest,
                         ::testing::Values(MatmulCase{1, 1, 1}, MatmulCase{3, 5, 2},
                                           MatmulCase{17, 9, 33}, MatmulCase{64, 128, 96}));

// Straightforward per-head attention with explicit softmax.
std::vector<double> reference_attention(const std::vector<double>& q, const std::vector<double>& k,
                                        const std::vector<double>& v, const AttentionDims& d) {
  const std::size_t dh = d.head_dim();
  std::vector<double> out(d.batch * d.tokens * d.model_dim, 0.0);
  for (std::size_t b = 0; b < d.batch; ++b)
    for (std::size_t h = 0; h < d.heads; ++h)
      for (std::size_t i = 0; i < d.tokens; ++i) {
        std::vector<double> s(d.tokens);
        double mx = -1e300;
        for (std::size_t j = 0; j < d.tokens; ++j) {
          double dot = 0.0;
          for (std::size_t c = 0; c < dh; ++c)
            dot += q[(b * d.tokens + i) * d.model_dim + h * dh + c] *
                   k[(b * d.tokens + j) * d.model_dim + h * dh + c];
          s[j] = dot / std::sqrt(static_cast<double>(dh));
          mx = std::max(mx, s[j]);
        }
        double z = 0.0;
        for (auto& x : s) z += x = std::exp(x - mx);
        for (std::size_t j = 0; j < d.tokens; ++j)
          for (std::size_t c = 0; c < dh; ++c)
            out[(b * d.tokens + i) * d.model_dim + h * dh + c] +=
                s[j] / z * v[(b * d.tokens + j) * d.model_dim + h * dh + c];
      }
  return out;
}

class AttentionKernelTest : public ::testing::TestWithParam<AttentionDims> {};

TEST_P(AttentionKernelTest, ParallelAndSerialAgreeWithReference) {
  const auto d = GetParam();
  const std::size_t n = d.batch * d.tokens * d.model_dim;
  const auto q = random_values(n, 4), k = random_values(n, 5), v = random_values(n, 6);
  const auto go = random_values(n, 7);
  const std::size_t np = d.batch * d.heads * d.tokens * d.tokens;

  std::vector<double> out(n), outs(n), probs(np), probss(np);
  attention_forward(q, k, v, d, out, probs);
  serial::attention_forward(q, k, v, d, outs, probss);
  expect_close(out, reference_attention(q, k, v, d), 1e-12);
  expect_close(outs, out, 1e-12);
  expect_close(probss, probs, 1e-12);
  for (std::size_t r = 0; r < d.batch * d.heads * d.tokens; ++r) {
    double s = 0.0;
    for (std::size_t j = 0; j < d.tokens; ++j) s += probs[r * d.tokens + j];
    EXPECT_NEAR(s, 1.0, 1e-12);
  }

  std::vector<double> gq(n, 0.0), gk(n, 0.0), gv(n, 0.0), gqs(n, 0.0), gks(n, 0.0), gvs(n, 0.0);
  attention_backward(q, k, v, probs, go, d, gq, gk, gv);
  serial::attention_backward(q, k, v, probs, go, d, gqs, gks, gvs);
  expect_close(gq, gqs, 1e-12);
  expect_close(gk, gks, 1e-12);
  expect_close(gv, gvs, 1e-12);

  std::vector<double> gq2(n, 0.0), gk2(n, 0.0), gv2(n, 0.0);
  attention_backward(q, k, v, probs, go, d, gq2, gk2, gv2);
  EXPECT_EQ(gq, gq2);
  EXPECT_EQ(gk, gk2);
  EXPECT_EQ(gv, gv2);

  // Directional finite difference of <go, out> along random directions.
  const double h = 1e-6;
  const auto dir_q = random_values(n, 8), dir_k = random_values(n, 9), dir_v = random_values(n, 10);
  auto objective = [&](double t) {
    std::vector<double> qq(q), kk(k), vv(v), o(n), p(np);
    for (std::size_t i = 0; i < n; ++i) {
      qq[i] += t * dir_q[i];
      kk[i] += t * dir_k[i];
      vv[i] += t * dir_v[i];
    }
    serial::attention_forward(qq, kk, vv, d, o, p);
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += o[i] * go[i];
    return s;
  };
  const double numeric = (objective(h) - objective(-h)) / (2 * h);
  double analytic = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    analytic += gq[i] * dir_q[i] + gk[i] * dir_k[i] + gv[i] * dir_v[i];
  EXPECT_NEAR(analytic, numeric, 1e-6 * std::max(1.0, std::abs(numeric)));
}

INSTANTIATE_TEST_SUITE_P(Dims, AttentionKernelTest,
                         ::testing::Values(AttentionDims{1, 1, 2, 1}, AttentionDims{2, 5, 4, 2},
                                           AttentionDims{3, 8, 12, 3},
                                           AttentionDims{16, 32, 32, 4}));

TEST(AttentionKernelTest, EmptyGradientSpansAreSkipped) {
  const AttentionDims d{1, 3, 4, 2};
  const std::size_t n = 12;
  const auto q = random_values(n, 1), k = random_values(n, 2), v = random_values(n, 3);
  std::vector<double> out(n), probs(18), gv(n, 0.0), gv_all(n, 0.0), gq(n, 0.0), gk(n, 0.0);
  attention_forward(q, k, v, d, out, probs);
  const auto go = random_values(n, 4);
  attention_backward(q, k, v, probs, go, d, {}, {}, gv);
  attention_backward(q, k, v, probs, go, d, gq, gk, gv_all);
  EXPECT_EQ(gv, gv_all);
}

TEST(KernelsTest, ReportsThreadCount) { EXPECT_GE(max_threads(), 1); }

}  // namespace
}  // namespace deepselective::kernels
