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

#include "deepselective/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace deepselective::kernels {

namespace {
// Below this many multiply-adds the fork/join cost dominates.
constexpr std::size_t kParallelWork = 1 << 15;

using Index = std::ptrdiff_t;
}  // namespace

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

void matmul(std::span<const double> a, std::span<const double> b, std::span<double> c,
            std::size_t m, std::size_t k, std::size_t n) {
  const bool par = m * k * n >= kParallelWork;
#pragma omp parallel for schedule(static) if (par)
  for (Index ii = 0; ii < static_cast<Index>(m); ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    double* crow = c.data() + i * n;
    std::fill(crow, crow + n, 0.0);
    const double* arow = a.data() + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = arow[p];
      const double* brow = b.data() + p * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += aip * brow[j];
    }
  }
}

void matmul_grad_a(std::span<const double> g, std::span<const double> b,
                   std::span<double> grad_a, std::size_t m, std::size_t k, std::size_t n) {
  const bool par = m * k * n >= kParallelWork;
#pragma omp parallel for schedule(static) if (par)
  for (Index ii = 0; ii < static_cast<Index>(m); ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    const double* grow = g.data() + i * n;
    double* darow = grad_a.data() + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const double* brow = b.data() + p * n;
      double s = 0.0;
      for (std::size_t j = 0; j < n; ++j) s += grow[j] * brow[j];
      darow[p] += s;
    }
  }
}

void matmul_grad_b(std::span<const double> a, std::span<const double> g,
                   std::span<double> grad_b, std::size_t m, std::size_t k, std::size_t n) {
  const bool par = m * k * n >= kParallelWork;
#pragma omp parallel for schedule(static) if (par)
  for (Index pp = 0; pp < static_cast<Index>(k); ++pp) {
    const auto p = static_cast<std::size_t>(pp);
    double* dbrow = grad_b.data() + p * n;
    for (std::size_t i = 0; i < m; ++i) {
      const double aip = a[i * k + p];
      if (aip == 0.0) continue;
      const double* grow = g.data() + i * n;
      for (std::size_t j = 0; j < n; ++j) dbrow[j] += aip * grow[j];
    }
  }
}

void attention_forward(std::span<const double> q, std::span<const double> k,
                       std::span<const double> v, const AttentionDims& dims,
                       std::span<double> out, std::span<double> probs) {
  const std::size_t T = dims.tokens, D = dims.model_dim, H = dims.heads;
  const std::size_t hd = dims.head_dim();
  const double scale = 1.0 / std::sqrt(static_cast<double>(hd));
  const std::size_t units = dims.batch * H;
  const bool par = units * T * T * hd >= kParallelWork;
#pragma omp parallel for schedule(static) if (par)
  for (Index u = 0; u < static_cast<Index>(units); ++u) {
    const std::size_t b = static_cast<std::size_t>(u) / H;
    const std::size_t h = static_cast<std::size_t>(u) % H;
    const std::size_t base = b * T * D + h * hd;
    double* P = probs.data() + static_cast<std::size_t>(u) * T * T;
    for (std::size_t i = 0; i < T; ++i) {
      const double* qi = q.data() + base + i * D;
      double* prow = P + i * T;
      double mx = -std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < T; ++j) {
        const double* kj = k.data() + base + j * D;
        double s = 0.0;
        for (std::size_t c = 0; c < hd; ++c) s += qi[c] * kj[c];
        prow[j] = s * scale;
        mx = std::max(mx, prow[j]);
      }
      double z = 0.0;
      for (std::size_t j = 0; j < T; ++j) {
        prow[j] = std::exp(prow[j] - mx);
        z += prow[j];
      }
      double* oi = out.data() + base + i * D;
      std::fill(oi, oi + hd, 0.0);
      for (std::size_t j = 0; j < T; ++j) {
        prow[j] /= z;
        const double* vj = v.data() + base + j * D;
        for (std::size_t c = 0; c < hd; ++c) oi[c] += prow[j] * vj[c];
      }
    }
  }
}

void attention_backward(std::span<const double> q, std::span<const double> k,
                        std::span<const double> v, std::span<const double> probs,
                        std::span<const double> grad_out, const AttentionDims& dims,
                        std::span<double> grad_q, std::span<double> grad_k,
                        std::span<double> grad_v) {
  const std::size_t T = dims.tokens, D = dims.model_dim, H = dims.heads;
  const std::size_t hd = dims.head_dim();
  const double scale = 1.0 / std::sqrt(static_cast<double>(hd));
  const std::size_t units = dims.batch * H;
  const bool par = units * T * T * hd >= kParallelWork;
#pragma omp parallel for schedule(static) if (par)
  for (Index u = 0; u < static_cast<Index>(units); ++u) {
    const std::size_t b = static_cast<std::size_t>(u) / H;
    const std::size_t h = static_cast<std::size_t>(u) % H;
    const std::size_t base = b * T * D + h * hd;
    const double* P = probs.data() + static_cast<std::size_t>(u) * T * T;
    std::vector<double> dscore(T);
    for (std::size_t i = 0; i < T; ++i) {
      const double* gi = grad_out.data() + base + i * D;
      const double* prow = P + i * T;
      double row_dot = 0.0;
      for (std::size_t j = 0; j < T; ++j) {
        const double* vj = v.data() + base + j * D;
        double s = 0.0;
        for (std::size_t c = 0; c < hd; ++c) s += gi[c] * vj[c];
        dscore[j] = s;
        row_dot += prow[j] * s;
        if (!grad_v.empty()) {
          double* dvj = grad_v.data() + base + j * D;
          for (std::size_t c = 0; c < hd; ++c) dvj[c] += prow[j] * gi[c];
        }
      }
      const double* qi = q.data() + base + i * D;
      for (std::size_t j = 0; j < T; ++j) {
        const double ds = prow[j] * (dscore[j] - row_dot) * scale;
        if (ds == 0.0) continue;
        const double* kj = k.data() + base + j * D;
        if (!grad_q.empty()) {
          double* dqi = grad_q.data() + base + i * D;
          for (std::size_t c = 0; c < hd; ++c) dqi[c] += ds * kj[c];
        }
        if (!grad_k.empty()) {
          double* dkj = grad_k.data() + base + j * D;
          for (std::size_t c = 0; c < hd; ++c) dkj[c] += ds * qi[c];
        }
      }
    }
  }
}

namespace serial {

void matmul(std::span<const double> a, std::span<const double> b, std::span<double> c,
            std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (std::size_t p = 0; p < k; ++p) s += a[i * k + p] * b[p * n + j];
      c[i * n + j] = s;
    }
  }
}

void matmul_grad_a(std::span<const double> g, std::span<const double> b,
                   std::span<double> grad_a, std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t p = 0; p < k; ++p) {
      double s = 0.0;
      for (std::size_t j = 0; j < n; ++j) s += g[i * n + j] * b[p * n + j];
      grad_a[i * k + p] += s;
    }
  }
}

void matmul_grad_b(std::span<const double> a, std::span<const double> g,
                   std::span<double> grad_b, std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t p = 0; p < k; ++p) {
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (std::size_t i = 0; i < m; ++i) s += a[i * k + p] * g[i * n + j];
      grad_b[p * n + j] += s;
    }
  }
}

void attention_forward(std::span<const double> q, std::span<const double> k,
                       std::span<const double> v, const AttentionDims& dims,
                       std::span<double> out, std::span<double> probs) {
  const std::size_t T = dims.tokens, D = dims.model_dim, H = dims.heads;
  const std::size_t hd = dims.head_dim();
  const double scale = 1.0 / std::sqrt(static_cast<double>(hd));
  auto at = [&](std::span<const double> x, std::size_t b, std::size_t t, std::size_t h,
                std::size_t c) { return x[b * T * D + t * D + h * hd + c]; };
  for (std::size_t b = 0; b < dims.batch; ++b) {
    for (std::size_t h = 0; h < H; ++h) {
      double* P = probs.data() + (b * H + h) * T * T;
      for (std::size_t i = 0; i < T; ++i) {
        double mx = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < T; ++j) {
          double s = 0.0;
          for (std::size_t c = 0; c < hd; ++c) s += at(q, b, i, h, c) * at(k, b, j, h, c);
          P[i * T + j] = s * scale;
          mx = std::max(mx, P[i * T + j]);
        }
        double z = 0.0;
        for (std::size_t j = 0; j < T; ++j) z += std::exp(P[i * T + j] - mx);
        for (std::size_t j = 0; j < T; ++j) P[i * T + j] = std::exp(P[i * T + j] - mx) / z;
        for (std::size_t c = 0; c < hd; ++c) {
          double s = 0.0;
          for (std::size_t j = 0; j < T; ++j) s += P[i * T + j] * at(v, b, j, h, c);
          out[b * T * D + i * D + h * hd + c] = s;
        }
      }
    }
  }
}

void attention_backward(std::span<const double> q, std::span<const double> k,
                        std::span<const double> v, std::span<const double> probs,
                        std::span<const double> grad_out, const AttentionDims& dims,
                        std::span<double> grad_q, std::span<double> grad_k,
                        std::span<double> grad_v) {
  const std::size_t T = dims.tokens, D = dims.model_dim, H = dims.heads;
  const std::size_t hd = dims.head_dim();
  const double scale = 1.0 / std::sqrt(static_cast<double>(hd));
  auto idx = [&](std::size_t b, std::size_t t, std::size_t h, std::size_t c) {
    return b * T * D + t * D + h * hd + c;
  };
  std::vector<double> dP(T * T), dS(T * T);
  for (std::size_t b = 0; b < dims.batch; ++b) {
    for (std::size_t h = 0; h < H; ++h) {
      const double* P = probs.data() + (b * H + h) * T * T;
      for (std::size_t i = 0; i < T; ++i) {
        for (std::size_t j = 0; j < T; ++j) {
          double s = 0.0;
          for (std::size_t c = 0; c < hd; ++c) s += grad_out[idx(b, i, h, c)] * v[idx(b, j, h, c)];
          dP[i * T + j] = s;
        }
      }
      for (std::size_t i = 0; i < T; ++i) {
        double r = 0.0;
        for (std::size_t j = 0; j < T; ++j) r += P[i * T + j] * dP[i * T + j];
        for (std::size_t j = 0; j < T; ++j) dS[i * T + j] = P[i * T + j] * (dP[i * T + j] - r);
      }
      for (std::size_t t = 0; t < T; ++t) {
        for (std::size_t c = 0; c < hd; ++c) {
          double sq = 0.0, sk = 0.0, sv = 0.0;
          for (std::size_t o = 0; o < T; ++o) {
            sq += dS[t * T + o] * k[idx(b, o, h, c)];
            sk += dS[o * T + t] * q[idx(b, o, h, c)];
            sv += P[o * T + t] * grad_out[idx(b, o, h, c)];
          }
          if (!grad_q.empty()) grad_q[idx(b, t, h, c)] += sq * scale;
          if (!grad_k.empty()) grad_k[idx(b, t, h, c)] += sk * scale;
          if (!grad_v.empty()) grad_v[idx(b, t, h, c)] += sv;
        }
      }
    }
  }
}

}  // namespace serial

}  // namespace deepselective::kernels
