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

#include "deepselective/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "deepselective/errors.hpp"
#include "deepselective/kernels.hpp"

namespace deepselective::ops {

using detail::make_result;
using detail::Node;

namespace {

[[noreturn]] void dim_error(const char* op, const Tensor& a, const Tensor& b) {
  throw DimensionError(std::string(op) + ": incompatible shapes " + shape_string(a.shape()) +
                       " and " + shape_string(b.shape()));
}

void check_axis(const char* op, const Tensor& x, std::size_t axis) {
  if (axis >= x.rank()) {
    throw DimensionError(std::string(op) + ": axis " + std::to_string(axis) +
                         " invalid for shape " + shape_string(x.shape()));
  }
}

// outer × axis × inner decomposition of a shape around one axis.
struct AxisSplit {
  std::size_t outer = 1, extent = 1, inner = 1;
};

AxisSplit split_at(const Shape& s, std::size_t axis) {
  AxisSplit r;
  for (std::size_t i = 0; i < axis; ++i) r.outer *= s[i];
  r.extent = s[axis];
  for (std::size_t i = axis + 1; i < s.size(); ++i) r.inner *= s[i];
  return r;
}

// Flat index maps from the broadcast output into each operand.
struct Broadcast {
  Shape out;
  bool same = false;
  std::vector<std::size_t> ia, ib;
};

Broadcast broadcast(const char* op, const Tensor& a, const Tensor& b) {
  Broadcast r;
  const Shape& sa = a.shape();
  const Shape& sb = b.shape();
  if (sa == sb) {
    r.out = sa;
    r.same = true;
    return r;
  }
  const std::size_t rank = std::max(sa.size(), sb.size());
  Shape pa(rank, 1), pb(rank, 1);
  std::copy(sa.begin(), sa.end(), pa.begin() + (rank - sa.size()));
  std::copy(sb.begin(), sb.end(), pb.begin() + (rank - sb.size()));
  r.out.resize(rank);
  for (std::size_t i = 0; i < rank; ++i) {
    if (pa[i] != pb[i] && pa[i] != 1 && pb[i] != 1) dim_error(op, a, b);
    r.out[i] = std::max(pa[i], pb[i]);
  }
  std::vector<std::size_t> stride_a(rank, 0), stride_b(rank, 0);
  std::size_t acc_a = 1, acc_b = 1;
  for (std::size_t i = rank; i-- > 0;) {
    stride_a[i] = pa[i] == 1 ? 0 : acc_a;
    stride_b[i] = pb[i] == 1 ? 0 : acc_b;
    acc_a *= pa[i];
    acc_b *= pb[i];
  }
  const std::size_t n = shape_numel(r.out);
  r.ia.resize(n);
  r.ib.resize(n);
  std::vector<std::size_t> counter(rank, 0);
  std::size_t oa = 0, ob = 0;
  for (std::size_t f = 0; f < n; ++f) {
    r.ia[f] = oa;
    r.ib[f] = ob;
    for (std::size_t i = rank; i-- > 0;) {
      ++counter[i];
      oa += stride_a[i];
      ob += stride_b[i];
      if (counter[i] < r.out[i]) break;
      oa -= stride_a[i] * counter[i];
      ob -= stride_b[i] * counter[i];
      counter[i] = 0;
    }
  }
  return r;
}

template <typename Fwd, typename DA, typename DB>
Tensor binary(const char* name, const Tensor& a, const Tensor& b, Fwd fwd, DA da, DB db) {
  auto bc = broadcast(name, a, b);
  const std::size_t n = shape_numel(bc.out);
  std::vector<double> out(n);
  const auto va = a.values();
  const auto vb = b.values();
  if (bc.same) {
    for (std::size_t i = 0; i < n; ++i) out[i] = fwd(va[i], vb[i]);
  } else {
    for (std::size_t i = 0; i < n; ++i) out[i] = fwd(va[bc.ia[i]], vb[bc.ib[i]]);
  }
  Node* an = a.node().get();
  Node* bn = b.node().get();
  return make_result(std::move(bc.out), std::move(out), {a, b},
                     [an, bn, ia = std::move(bc.ia), ib = std::move(bc.ib), same = bc.same, da,
                      db](Node& self) {
                       const auto& g = self.grad;
                       const auto& xa = an->value;
                       const auto& xb = bn->value;
                       const std::size_t n = g.size();
                       if (an->requires_grad) {
                         auto& ga = an->grad_buffer();
                         for (std::size_t i = 0; i < n; ++i) {
                           const std::size_t p = same ? i : ia[i];
                           const std::size_t q = same ? i : ib[i];
                           ga[p] += g[i] * da(xa[p], xb[q]);
                         }
                       }
                       if (bn->requires_grad) {
                         auto& gb = bn->grad_buffer();
                         for (std::size_t i = 0; i < n; ++i) {
                           const std::size_t p = same ? i : ia[i];
                           const std::size_t q = same ? i : ib[i];
                           gb[q] += g[i] * db(xa[p], xb[q]);
                         }
                       }
                     });
}

template <typename Fwd, typename Deriv>
Tensor unary(const Tensor& x, Fwd fwd, Deriv deriv) {
  const auto vx = x.values();
  std::vector<double> out(vx.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = fwd(vx[i]);
  Node* xn = x.node().get();
  return make_result(x.shape(), std::move(out), {x}, [xn, deriv](Node& self) {
    auto& gx = xn->grad_buffer();
    for (std::size_t i = 0; i < gx.size(); ++i) {
      gx[i] += self.grad[i] * deriv(xn->value[i], self.value[i]);
    }
  });
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0)) dim_error("matmul", a, b);
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  std::vector<double> out(m * n);
  kernels::matmul(a.values(), b.values(), out, m, k, n);
  Node* an = a.node().get();
  Node* bn = b.node().get();
  return make_result({m, n}, std::move(out), {a, b}, [an, bn, m, k, n](Node& self) {
    if (an->requires_grad) kernels::matmul_grad_a(self.grad, bn->value, an->grad_buffer(), m, k, n);
    if (bn->requires_grad) kernels::matmul_grad_b(an->value, self.grad, bn->grad_buffer(), m, k, n);
  });
}

Tensor transpose(const Tensor& a) {
  if (a.rank() != 2) throw DimensionError("transpose: expected 2-D, got " + shape_string(a.shape()));
  const std::size_t r = a.dim(0), c = a.dim(1);
  std::vector<double> out(r * c);
  const auto va = a.values();
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out[j * r + i] = va[i * c + j];
  Node* an = a.node().get();
  return make_result({c, r}, std::move(out), {a}, [an, r, c](Node& self) {
    auto& ga = an->grad_buffer();
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < c; ++j) ga[i * c + j] += self.grad[j * r + i];
  });
}

Tensor add(const Tensor& a, const Tensor& b) {
  return binary(
      "add", a, b, [](double x, double y) { return x + y; }, [](double, double) { return 1.0; },
      [](double, double) { return 1.0; });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  return binary(
      "sub", a, b, [](double x, double y) { return x - y; }, [](double, double) { return 1.0; },
      [](double, double) { return -1.0; });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  return binary(
      "mul", a, b, [](double x, double y) { return x * y; }, [](double, double y) { return y; },
      [](double x, double) { return x; });
}

Tensor scale(const Tensor& a, double factor) {
  return unary(
      a, [factor](double x) { return x * factor; }, [factor](double, double) { return factor; });
}

Tensor add_scalar(const Tensor& a, double offset) {
  return unary(
      a, [offset](double x) { return x + offset; }, [](double, double) { return 1.0; });
}

Tensor sigmoid(const Tensor& x) {
  return unary(
      x,
      [](double v) {
        if (v >= 0) return 1.0 / (1.0 + std::exp(-v));
        const double e = std::exp(v);
        return e / (1.0 + e);
      },
      [](double, double y) { return y * (1.0 - y); });
}

Tensor relu(const Tensor& x) {
  return unary(
      x, [](double v) { return v > 0.0 ? v : 0.0; },
      [](double v, double) { return v > 0.0 ? 1.0 : 0.0; });
}

Tensor softmax(const Tensor& x, std::size_t axis) {
  check_axis("softmax", x, axis);
  const auto sp = split_at(x.shape(), axis);
  const auto vx = x.values();
  std::vector<double> out(vx.size());
  for (std::size_t o = 0; o < sp.outer; ++o) {
    for (std::size_t in = 0; in < sp.inner; ++in) {
      const std::size_t base = o * sp.extent * sp.inner + in;
      double mx = -std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < sp.extent; ++j) mx = std::max(mx, vx[base + j * sp.inner]);
      double z = 0.0;
      for (std::size_t j = 0; j < sp.extent; ++j) {
        const double e = std::exp(vx[base + j * sp.inner] - mx);
        out[base + j * sp.inner] = e;
        z += e;
      }
      for (std::size_t j = 0; j < sp.extent; ++j) out[base + j * sp.inner] /= z;
    }
  }
  Node* xn = x.node().get();
  return make_result(x.shape(), std::move(out), {x}, [xn, sp](Node& self) {
    auto& gx = xn->grad_buffer();
    const auto& y = self.value;
    const auto& g = self.grad;
    for (std::size_t o = 0; o < sp.outer; ++o) {
      for (std::size_t in = 0; in < sp.inner; ++in) {
        const std::size_t base = o * sp.extent * sp.inner + in;
        double dot = 0.0;
        for (std::size_t j = 0; j < sp.extent; ++j) {
          const std::size_t f = base + j * sp.inner;
          dot += g[f] * y[f];
        }
        for (std::size_t j = 0; j < sp.extent; ++j) {
          const std::size_t f = base + j * sp.inner;
          gx[f] += y[f] * (g[f] - dot);
        }
      }
    }
  });
}

Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps) {
  if (x.rank() == 0) throw DimensionError("layer_norm: scalar input");
  const std::size_t d = x.shape().back();
  if (gain.numel() != d || bias.numel() != d) dim_error("layer_norm", x, gain);
  const std::size_t rows = x.numel() / d;
  const auto vx = x.values();
  const auto vg = gain.values();
  const auto vb = bias.values();
  std::vector<double> out(vx.size()), xhat(vx.size()), inv_std(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    const double* row = vx.data() + r * d;
    double mu = 0.0;
    for (std::size_t j = 0; j < d; ++j) mu += row[j];
    mu /= static_cast<double>(d);
    double var = 0.0;
    for (std::size_t j = 0; j < d; ++j) var += (row[j] - mu) * (row[j] - mu);
    var /= static_cast<double>(d);
    inv_std[r] = 1.0 / std::sqrt(var + eps);
    for (std::size_t j = 0; j < d; ++j) {
      const std::size_t f = r * d + j;
      xhat[f] = (row[j] - mu) * inv_std[r];
      out[f] = xhat[f] * vg[j] + vb[j];
    }
  }
  Node* xn = x.node().get();
  Node* gn = gain.node().get();
  Node* bn = bias.node().get();
  return make_result(x.shape(), std::move(out), {x, gain, bias},
                     [xn, gn, bn, d, rows, xhat = std::move(xhat),
                      inv_std = std::move(inv_std)](Node& self) {
                       const auto& g = self.grad;
                       if (gn->requires_grad) {
                         auto& gg = gn->grad_buffer();
                         for (std::size_t f = 0; f < g.size(); ++f) gg[f % d] += g[f] * xhat[f];
                       }
                       if (bn->requires_grad) {
                         auto& gb = bn->grad_buffer();
                         for (std::size_t f = 0; f < g.size(); ++f) gb[f % d] += g[f];
                       }
                       if (!xn->requires_grad) return;
                       auto& gx = xn->grad_buffer();
                       const auto& gain_v = gn->value;
                       const double inv_d = 1.0 / static_cast<double>(d);
                       for (std::size_t r = 0; r < rows; ++r) {
                         double m1 = 0.0, m2 = 0.0;
                         for (std::size_t j = 0; j < d; ++j) {
                           const std::size_t f = r * d + j;
                           const double dx = g[f] * gain_v[j];
                           m1 += dx;
                           m2 += dx * xhat[f];
                         }
                         m1 *= inv_d;
                         m2 *= inv_d;
                         for (std::size_t j = 0; j < d; ++j) {
                           const std::size_t f = r * d + j;
                           const double dx = g[f] * gain_v[j];
                           gx[f] += inv_std[r] * (dx - m1 - xhat[f] * m2);
                         }
                       }
                     });
}

Tensor concat(const Tensor& a, const Tensor& b, std::size_t axis) {
  check_axis("concat", a, axis);
  if (a.rank() != b.rank()) dim_error("concat", a, b);
  for (std::size_t i = 0; i < a.rank(); ++i) {
    if (i != axis && a.dim(i) != b.dim(i)) dim_error("concat", a, b);
  }
  const auto sa = split_at(a.shape(), axis);
  const auto sb = split_at(b.shape(), axis);
  const std::size_t ca = sa.extent * sa.inner, cb = sb.extent * sb.inner;
  Shape shape = a.shape();
  shape[axis] += b.dim(axis);
  std::vector<double> out(a.numel() + b.numel());
  const auto va = a.values();
  const auto vb = b.values();
  for (std::size_t o = 0; o < sa.outer; ++o) {
    std::copy_n(va.data() + o * ca, ca, out.data() + o * (ca + cb));
    std::copy_n(vb.data() + o * cb, cb, out.data() + o * (ca + cb) + ca);
  }
  Node* an = a.node().get();
  Node* bn = b.node().get();
  const std::size_t outer = sa.outer;
  return make_result(std::move(shape), std::move(out), {a, b},
                     [an, bn, outer, ca, cb](Node& self) {
                       for (std::size_t o = 0; o < outer; ++o) {
                         const double* g = self.grad.data() + o * (ca + cb);
                         if (an->requires_grad) {
                           auto& ga = an->grad_buffer();
                           for (std::size_t j = 0; j < ca; ++j) ga[o * ca + j] += g[j];
                         }
                         if (bn->requires_grad) {
                           auto& gb = bn->grad_buffer();
                           for (std::size_t j = 0; j < cb; ++j) gb[o * cb + j] += g[ca + j];
                         }
                       }
                     });
}

Tensor reshape(const Tensor& x, Shape shape) {
  if (shape_numel(shape) != x.numel()) {
    throw DimensionError("reshape: cannot view " + shape_string(x.shape()) + " as " +
                         shape_string(shape));
  }
  Node* xn = x.node().get();
  return make_result(std::move(shape), std::vector<double>(x.values().begin(), x.values().end()),
                     {x}, [xn](Node& self) {
                       auto& gx = xn->grad_buffer();
                       for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += self.grad[i];
                     });
}

Tensor gather(const Tensor& x, std::size_t axis, std::span<const std::size_t> indices) {
  check_axis("gather", x, axis);
  if (indices.empty()) throw DimensionError("gather: empty index list");
  const auto sp = split_at(x.shape(), axis);
  for (auto i : indices) {
    if (i >= sp.extent) {
      throw DimensionError("gather: index " + std::to_string(i) + " out of range for axis of size " +
                           std::to_string(sp.extent));
    }
  }
  Shape shape = x.shape();
  shape[axis] = indices.size();
  const std::size_t m = indices.size();
  std::vector<double> out(sp.outer * m * sp.inner);
  const auto vx = x.values();
  for (std::size_t o = 0; o < sp.outer; ++o)
    for (std::size_t j = 0; j < m; ++j)
      std::copy_n(vx.data() + (o * sp.extent + indices[j]) * sp.inner, sp.inner,
                  out.data() + (o * m + j) * sp.inner);
  Node* xn = x.node().get();
  return make_result(std::move(shape), std::move(out), {x},
                     [xn, sp, idx = std::vector<std::size_t>(indices.begin(), indices.end())](
                         Node& self) {
                       auto& gx = xn->grad_buffer();
                       const std::size_t m = idx.size();
                       for (std::size_t o = 0; o < sp.outer; ++o)
                         for (std::size_t j = 0; j < m; ++j)
                           for (std::size_t c = 0; c < sp.inner; ++c)
                             gx[(o * sp.extent + idx[j]) * sp.inner + c] +=
                                 self.grad[(o * m + j) * sp.inner + c];
                     });
}

Tensor sum(const Tensor& x) {
  double s = 0.0;
  for (double v : x.values()) s += v;
  Node* xn = x.node().get();
  return make_result({1}, {s}, {x}, [xn](Node& self) {
    auto& gx = xn->grad_buffer();
    for (auto& g : gx) g += self.grad[0];
  });
}

Tensor sum(const Tensor& x, std::size_t axis) {
  check_axis("sum", x, axis);
  const auto sp = split_at(x.shape(), axis);
  Shape shape = x.shape();
  shape.erase(shape.begin() + static_cast<std::ptrdiff_t>(axis));
  if (shape.empty()) shape = {1};
  std::vector<double> out(sp.outer * sp.inner, 0.0);
  const auto vx = x.values();
  for (std::size_t o = 0; o < sp.outer; ++o)
    for (std::size_t j = 0; j < sp.extent; ++j)
      for (std::size_t c = 0; c < sp.inner; ++c)
        out[o * sp.inner + c] += vx[(o * sp.extent + j) * sp.inner + c];
  Node* xn = x.node().get();
  return make_result(std::move(shape), std::move(out), {x}, [xn, sp](Node& self) {
    auto& gx = xn->grad_buffer();
    for (std::size_t o = 0; o < sp.outer; ++o)
      for (std::size_t j = 0; j < sp.extent; ++j)
        for (std::size_t c = 0; c < sp.inner; ++c)
          gx[(o * sp.extent + j) * sp.inner + c] += self.grad[o * sp.inner + c];
  });
}

Tensor mean(const Tensor& x) { return scale(sum(x), 1.0 / static_cast<double>(x.numel())); }

Tensor mean(const Tensor& x, std::size_t axis) {
  check_axis("mean", x, axis);
  return scale(sum(x, axis), 1.0 / static_cast<double>(x.dim(axis)));
}

Tensor l2_norm(const Tensor& x) {
  const std::size_t d = x.shape().back();
  const std::size_t rows = x.numel() / d;
  Shape shape(x.shape().begin(), x.shape().end() - 1);
  if (shape.empty()) shape = {1};
  const auto vx = x.values();
  std::vector<double> out(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    double s = 0.0;
    for (std::size_t j = 0; j < d; ++j) s += vx[r * d + j] * vx[r * d + j];
    out[r] = std::sqrt(s);
  }
  Node* xn = x.node().get();
  return make_result(std::move(shape), std::move(out), {x}, [xn, d, rows](Node& self) {
    auto& gx = xn->grad_buffer();
    for (std::size_t r = 0; r < rows; ++r) {
      const double n = self.value[r];
      if (n == 0.0) continue;
      for (std::size_t j = 0; j < d; ++j) gx[r * d + j] += self.grad[r] * xn->value[r * d + j] / n;
    }
  });
}

Tensor frobenius_norm(const Tensor& x) {
  double s = 0.0;
  for (double v : x.values()) s += v * v;
  Node* xn = x.node().get();
  return make_result({1}, {std::sqrt(s)}, {x}, [xn](Node& self) {
    const double n = self.value[0];
    if (n == 0.0) return;
    auto& gx = xn->grad_buffer();
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += self.grad[0] * xn->value[i] / n;
  });
}

Tensor binary_cross_entropy(const Tensor& prob, std::span<const double> targets) {
  if (prob.numel() != targets.size()) {
    throw DimensionError("binary_cross_entropy: " + std::to_string(prob.numel()) +
                         " probabilities vs " + std::to_string(targets.size()) + " targets");
  }
  constexpr double lo = 1e-7, hi = 1.0 - 1e-7;
  const auto vp = prob.values();
  const double n = static_cast<double>(targets.size());
  double loss = 0.0;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    const double p = std::clamp(vp[i], lo, hi);
    loss -= targets[i] * std::log(p) + (1.0 - targets[i]) * std::log(1.0 - p);
  }
  Node* pn = prob.node().get();
  return make_result({1}, {loss / n}, {prob},
                     [pn, n, y = std::vector<double>(targets.begin(), targets.end())](Node& self) {
                       auto& gp = pn->grad_buffer();
                       for (std::size_t i = 0; i < y.size(); ++i) {
                         const double p = pn->value[i];
                         if (p < lo || p > hi) continue;
                         gp[i] += self.grad[0] * (-y[i] / p + (1.0 - y[i]) / (1.0 - p)) / n;
                       }
                     });
}

Tensor entropy(const Tensor& p) {
  double h = 0.0;
  for (double v : p.values())
    if (v > 0.0) h -= v * std::log(v);
  Node* pn = p.node().get();
  return make_result({1}, {h}, {p}, [pn](Node& self) {
    auto& gp = pn->grad_buffer();
    for (std::size_t i = 0; i < gp.size(); ++i) {
      const double v = pn->value[i];
      if (v > 0.0) gp[i] -= self.grad[0] * (std::log(v) + 1.0);
    }
  });
}

CosineResult cosine_similarity(const Tensor& a, const Tensor& b, double norm_floor) {
  if (a.shape() != b.shape()) dim_error("cosine_similarity", a, b);
  const std::size_t d = a.shape().back();
  const std::size_t rows = a.numel() / d;
  Shape shape(a.shape().begin(), a.shape().end() - 1);
  if (shape.empty()) shape = {1};
  const auto va = a.values();
  const auto vb = b.values();
  std::vector<double> out(rows, 0.0), na(rows), nb(rows);
  std::size_t degenerate = 0;
  for (std::size_t r = 0; r < rows; ++r) {
    double dot = 0.0, sa = 0.0, sb = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      dot += va[r * d + j] * vb[r * d + j];
      sa += va[r * d + j] * va[r * d + j];
      sb += vb[r * d + j] * vb[r * d + j];
    }
    na[r] = std::sqrt(sa);
    nb[r] = std::sqrt(sb);
    if (na[r] < norm_floor || nb[r] < norm_floor) {
      ++degenerate;
      na[r] = nb[r] = 0.0;
      continue;
    }
    out[r] = dot / (na[r] * nb[r]);
  }
  Node* an = a.node().get();
  Node* bn = b.node().get();
  auto sim = make_result(std::move(shape), std::move(out), {a, b},
                         [an, bn, d, rows, na = std::move(na), nb = std::move(nb)](Node& self) {
                           for (std::size_t r = 0; r < rows; ++r) {
                             if (na[r] == 0.0) continue;
                             const double c = self.value[r];
                             const double g = self.grad[r];
                             const double inv = 1.0 / (na[r] * nb[r]);
                             for (std::size_t j = 0; j < d; ++j) {
                               const double x = an->value[r * d + j];
                               const double y = bn->value[r * d + j];
                               if (an->requires_grad)
                                 an->grad_buffer()[r * d + j] += g * (y * inv - c * x / (na[r] * na[r]));
                               if (bn->requires_grad)
                                 bn->grad_buffer()[r * d + j] += g * (x * inv - c * y / (nb[r] * nb[r]));
                             }
                           }
                         });
  return {std::move(sim), degenerate};
}

Tensor attention(const Tensor& q, const Tensor& k, const Tensor& v) {
  if (q.rank() != 2 || k.rank() != 2 || v.rank() != 2 || q.dim(1) != k.dim(1) ||
      k.dim(0) != v.dim(0)) {
    throw DimensionError("attention: Q " + shape_string(q.shape()) + ", K " +
                         shape_string(k.shape()) + ", V " + shape_string(v.shape()));
  }
  const double inv_sqrt_dk = 1.0 / std::sqrt(static_cast<double>(k.dim(1)));
  auto weights = softmax(scale(matmul(q, transpose(k)), inv_sqrt_dk), 1);
  return matmul(weights, v);
}

Tensor multihead_attention(const Tensor& q, const Tensor& k, const Tensor& v, std::size_t heads) {
  if (q.rank() != 3 || q.shape() != k.shape() || q.shape() != v.shape()) {
    throw DimensionError("multihead_attention: Q " + shape_string(q.shape()) + ", K " +
                         shape_string(k.shape()) + ", V " + shape_string(v.shape()));
  }
  kernels::AttentionDims dims{q.dim(0), q.dim(1), q.dim(2), heads};
  if (heads == 0 || dims.model_dim % heads != 0) {
    throw DimensionError("multihead_attention: model dim " + std::to_string(dims.model_dim) +
                         " not divisible by " + std::to_string(heads) + " heads");
  }
  std::vector<double> out(q.numel());
  std::vector<double> probs(dims.batch * heads * dims.tokens * dims.tokens);
  kernels::attention_forward(q.values(), k.values(), v.values(), dims, out, probs);
  Node* qn = q.node().get();
  Node* kn = k.node().get();
  Node* vn = v.node().get();
  return make_result(q.shape(), std::move(out), {q, k, v},
                     [qn, kn, vn, dims, probs = std::move(probs)](Node& self) {
                       std::span<double> gq, gk, gv;
                       if (qn->requires_grad) gq = qn->grad_buffer();
                       if (kn->requires_grad) gk = kn->grad_buffer();
                       if (vn->requires_grad) gv = vn->grad_buffer();
                       kernels::attention_backward(qn->value, kn->value, vn->value, probs,
                                                   self.grad, dims, gq, gk, gv);
                     });
}

Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias) {
  if (weight.rank() != 2 || x.shape().back() != weight.dim(0) || bias.numel() != weight.dim(1)) {
    dim_error("linear", x, weight);
  }
  if (x.rank() == 2) return add(matmul(x, weight), bias);
  Shape out_shape = x.shape();
  out_shape.back() = weight.dim(1);
  auto flat = reshape(x, {x.numel() / weight.dim(0), weight.dim(0)});
  return reshape(add(matmul(flat, weight), bias), std::move(out_shape));
}

}  // namespace deepselective::ops
