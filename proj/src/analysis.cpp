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

#include "deepselective/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <Eigen/Dense>
#include <boost/math/distributions/students_t.hpp>
#include <nlohmann/json.hpp>

#include "deepselective/errors.hpp"

namespace deepselective::analysis {

namespace {

struct ClassCounts {
  std::size_t pos = 0, neg = 0;
};

ClassCounts check_binary(std::span<const double> labels, std::span<const double> scores,
                         const char* metric) {
  if (labels.size() != scores.size()) {
    throw DimensionError(std::string(metric) + ": " + std::to_string(labels.size()) +
                         " labels vs " + std::to_string(scores.size()) + " scores");
  }
  ClassCounts c;
  for (double y : labels) {
    if (y == 1.0) ++c.pos;
    else if (y == 0.0) ++c.neg;
    else throw ValidationError(std::string(metric) + ": labels must be 0 or 1");
  }
  return c;
}

// Indices by descending score.
std::vector<std::size_t> descending(std::span<const double> scores) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  return order;
}

// Walks groups of tied scores from the top; fn(tp_in_group, group_size).
template <typename Fn>
void for_each_threshold(std::span<const double> labels, std::span<const double> scores, Fn fn) {
  const auto order = descending(scores);
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i, tp = 0;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) {
      tp += labels[order[j]] == 1.0 ? 1 : 0;
      ++j;
    }
    fn(tp, j - i);
    i = j;
  }
}

}  // namespace

double auroc(std::span<const double> labels, std::span<const double> scores) {
  const auto c = check_binary(labels, scores, "auroc");
  if (c.pos == 0 || c.neg == 0) throw UndefinedMetricError("auroc needs both classes present");
  // Pairs won by positives, counting ties as half, accumulated per tie group.
  double wins = 0.0;
  std::size_t neg_above = 0;
  for_each_threshold(labels, scores, [&](std::size_t tp, std::size_t size) {
    const std::size_t fp = size - tp;
    wins += static_cast<double>(tp) * (static_cast<double>(c.neg - neg_above - fp) + 0.5 * static_cast<double>(fp));
    neg_above += fp;
  });
  return wins / (static_cast<double>(c.pos) * static_cast<double>(c.neg));
}

double auprc(std::span<const double> labels, std::span<const double> scores) {
  const auto c = check_binary(labels, scores, "auprc");
  if (c.pos == 0) throw UndefinedMetricError("auprc needs at least one positive");
  double ap = 0.0;
  std::size_t tp_total = 0, seen = 0;
  for_each_threshold(labels, scores, [&](std::size_t tp, std::size_t size) {
    tp_total += tp;
    seen += size;
    ap += static_cast<double>(tp) * static_cast<double>(tp_total) / static_cast<double>(seen);
  });
  return ap / static_cast<double>(c.pos);
}

double min_se_pplus(std::span<const double> labels, std::span<const double> scores) {
  const auto c = check_binary(labels, scores, "min_se_pplus");
  if (c.pos == 0 || c.neg == 0) throw UndefinedMetricError("min(Se, P+) needs both classes present");
  double best = 0.0;  // threshold +inf: nothing predicted positive
  std::size_t tp_total = 0, seen = 0;
  for_each_threshold(labels, scores, [&](std::size_t tp, std::size_t size) {
    tp_total += tp;
    seen += size;
    const double se = static_cast<double>(tp_total) / static_cast<double>(c.pos);
    const double pp = static_cast<double>(tp_total) / static_cast<double>(seen);
    best = std::max(best, std::min(se, pp));
  });
  return best;
}

double f1_score(std::span<const double> labels, std::span<const double> scores, double threshold,
                Confusion* confusion) {
  check_binary(labels, scores, "f1");
  Confusion c;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const bool pred = scores[i] >= threshold;
    const bool pos = labels[i] == 1.0;
    if (pred && pos) ++c.tp;
    else if (pred) ++c.fp;
    else if (pos) ++c.fn;
    else ++c.tn;
  }
  if (confusion) *confusion = c;
  const double denom = static_cast<double>(2 * c.tp + c.fp + c.fn);
  return denom > 0.0 ? 2.0 * static_cast<double>(c.tp) / denom : 0.0;
}

MetricSet evaluate(std::span<const double> labels, std::span<const double> scores,
                   double threshold) {
  MetricSet m;
  m.threshold = threshold;
  m.auroc = auroc(labels, scores);
  m.auprc = auprc(labels, scores);
  m.min_se_pplus = min_se_pplus(labels, scores);
  m.f1 = f1_score(labels, scores, threshold, &m.confusion);
  return m;
}

std::string metrics_json(const MetricSet& m, std::size_t samples) {
  nlohmann::json j;
  j["samples"] = samples;
  j["auroc"] = m.auroc;
  j["auprc"] = m.auprc;
  j["f1"] = m.f1;
  j["min_se_pplus"] = m.min_se_pplus;
  j["threshold"] = m.threshold;
  j["confusion"] = {{"tp", m.confusion.tp}, {"fp", m.confusion.fp},
                    {"tn", m.confusion.tn}, {"fn", m.confusion.fn}};
  return j.dump(2);
}

namespace {

struct Binned {
  std::vector<std::size_t> bin;
  bool constant = false;
};

Binned bin_column(std::span<const double> v, std::size_t bins) {
  Binned b;
  b.bin.resize(v.size(), 0);
  const auto [lo_it, hi_it] = std::minmax_element(v.begin(), v.end());
  const double lo = *lo_it, hi = *hi_it;
  if (!(hi > lo)) {
    b.constant = true;
    return b;
  }
  const double width = (hi - lo) / static_cast<double>(bins);
  for (std::size_t i = 0; i < v.size(); ++i) {
    auto k = static_cast<std::size_t>((v[i] - lo) / width);
    b.bin[i] = std::min(k, bins - 1);
  }
  return b;
}

double mi_from_bins(const Binned& bx, const Binned& by, std::size_t bins) {
  const std::size_t n = bx.bin.size();
  std::vector<std::size_t> joint(bins * bins, 0), cx(bins, 0), cy(bins, 0);
  for (std::size_t i = 0; i < n; ++i) {
    ++joint[bx.bin[i] * bins + by.bin[i]];
    ++cx[bx.bin[i]];
    ++cy[by.bin[i]];
  }
  // Sorting the terms makes the sum independent of argument order.
  std::vector<double> terms;
  const double total = static_cast<double>(n);
  for (std::size_t a = 0; a < bins; ++a) {
    for (std::size_t b = 0; b < bins; ++b) {
      const auto c = joint[a * bins + b];
      if (c == 0) continue;
      const double cd = static_cast<double>(c);
      terms.push_back(cd / total *
                      std::log(cd * total / (static_cast<double>(cx[a]) * static_cast<double>(cy[b]))));
    }
  }
  std::sort(terms.begin(), terms.end());
  double mi = 0.0;
  for (double t : terms) mi += t;
  return std::max(mi, 0.0);
}

}  // namespace

MiResult mutual_information(std::span<const double> x, std::span<const double> y,
                            std::size_t bins) {
  if (x.size() != y.size()) {
    throw DimensionError("mutual_information: columns of length " + std::to_string(x.size()) +
                         " and " + std::to_string(y.size()));
  }
  if (x.size() < 2) throw ValidationError("mutual_information needs at least two samples");
  if (bins < 1) throw ParameterError("mutual_information needs at least one bin");
  const auto bx = bin_column(x, bins);
  const auto by = bin_column(y, bins);
  if (bx.constant || by.constant) return {0.0, true};
  return {mi_from_bins(bx, by, bins), false};
}

double MiMatrix::row_mean(std::size_t i) const {
  double s = 0.0;
  for (std::size_t j = 0; j < cols; ++j) s += at(i, j);
  return cols ? s / static_cast<double>(cols) : 0.0;
}

MiMatrix mi_matrix(std::span<const double> inputs, std::size_t input_dim,
                   std::span<const double> latents, std::size_t latent_dim, std::size_t n,
                   std::size_t bins) {
  if (inputs.size() != n * input_dim || latents.size() != n * latent_dim) {
    throw DimensionError("mi_matrix: matrices do not have " + std::to_string(n) + " rows");
  }
  MiMatrix m;
  m.rows = input_dim;
  m.cols = latent_dim;
  m.bins = bins;
  m.values.assign(input_dim * latent_dim, 0.0);
  auto column = [n](std::span<const double> mat, std::size_t dim, std::size_t j) {
    std::vector<double> c(n);
    for (std::size_t i = 0; i < n; ++i) c[i] = mat[i * dim + j];
    return c;
  };
  std::vector<Binned> latent_bins;
  for (std::size_t j = 0; j < latent_dim; ++j) latent_bins.push_back(bin_column(column(latents, latent_dim, j), bins));
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t ii = 0; ii < static_cast<std::ptrdiff_t>(input_dim); ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    const auto bx = bin_column(column(inputs, input_dim, i), bins);
    for (std::size_t j = 0; j < latent_dim; ++j) {
      if (bx.constant || latent_bins[j].constant) continue;
      m.values[i * latent_dim + j] = mi_from_bins(bx, latent_bins[j], bins);
    }
  }
  return m;
}

TTestResult welch_ttest(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2) {
    throw ValidationError("welch_ttest needs at least two values per group");
  }
  auto moments = [](std::span<const double> v) {
    const double n = static_cast<double>(v.size());
    const double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    return std::pair{mean, ss / (n - 1.0)};
  };
  const auto [ma, va] = moments(a);
  const auto [mb, vb] = moments(b);
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  const double sa = va / na, sb = vb / nb;
  TTestResult r;
  if (sa + sb == 0.0) {
    r.degenerate = true;
    if (ma == mb) {
      r.t = 0.0;
      r.p = 1.0;
    } else {
      r.t = ma > mb ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
      r.p = 0.0;
    }
    r.df = na + nb - 2.0;
    return r;
  }
  r.t = (ma - mb) / std::sqrt(sa + sb);
  r.df = (sa + sb) * (sa + sb) / (sa * sa / (na - 1.0) + sb * sb / (nb - 1.0));
  const boost::math::students_t dist(r.df);
  r.p = std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(r.t))));
  return r;
}

std::vector<FeatureSignificance> feature_significance(
    std::span<const double> features, std::size_t dim, std::span<const double> labels,
    std::span<const std::string> names, std::span<const std::size_t> support) {
  const std::size_t n = labels.size();
  if (features.size() != n * dim || names.size() != dim) {
    throw DimensionError("feature_significance: inconsistent feature matrix");
  }
  std::vector<bool> selected(dim, false);
  for (auto s : support) selected.at(s) = true;
  std::vector<FeatureSignificance> out(dim);
  std::vector<double> pos, neg;
  for (std::size_t j = 0; j < dim; ++j) {
    pos.clear();
    neg.clear();
    for (std::size_t i = 0; i < n; ++i) (labels[i] == 1.0 ? pos : neg).push_back(features[i * dim + j]);
    auto& f = out[j];
    f.index = j;
    f.name = names[j];
    f.selected = selected[j];
    f.test = welch_ttest(pos, neg);
    f.below_001 = f.test.p < 0.01;
    f.below_005 = f.test.p < 0.05;
  }
  return out;
}

PcaResult pca_project(std::span<const double> matrix, std::size_t rows, std::size_t dim,
                      std::size_t components) {
  if (matrix.size() != rows * dim) throw DimensionError("pca_project: matrix size mismatch");
  if (components < 1 || components > dim || rows < components || rows < 2) {
    throw ValidationError("pca_project: need rows >= components >= 1 and components <= dim");
  }
  using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  Eigen::Map<const Mat> x(matrix.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(dim));
  const Eigen::VectorXd mean = x.colwise().mean().transpose();
  const Mat centered = x.rowwise() - mean.transpose();
  const Eigen::MatrixXd cov = (centered.transpose() * centered) / static_cast<double>(rows - 1);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success) throw NumericalError("pca_project: eigendecomposition failed");

  const Eigen::VectorXd eig = solver.eigenvalues().reverse();
  const Eigen::MatrixXd vec = solver.eigenvectors().rowwise().reverse();
  const double top = std::max(eig(0), 0.0);
  const double total = std::max(cov.trace(), 0.0);
  std::size_t rank = 0;
  for (Eigen::Index i = 0; i < eig.size(); ++i)
    if (eig(i) > 1e-12 * std::max(top, 1e-300)) ++rank;
  if (components > rank) {
    throw ValidationError("pca_project: " + std::to_string(components) +
                          " components requested but covariance rank is " + std::to_string(rank));
  }

  PcaResult r;
  r.rows = rows;
  r.dim = dim;
  r.components = components;
  r.mean.assign(mean.data(), mean.data() + dim);
  Eigen::MatrixXd axes(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(components));
  for (std::size_t c = 0; c < components; ++c) {
    Eigen::VectorXd v = vec.col(static_cast<Eigen::Index>(c));
    Eigen::Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v(arg) < 0) v = -v;
    axes.col(static_cast<Eigen::Index>(c)) = v;
    r.explained_variance.push_back(std::max(eig(static_cast<Eigen::Index>(c)), 0.0));
    r.explained_ratio.push_back(total > 0 ? r.explained_variance.back() / total : 0.0);
  }
  r.axes.resize(components * dim);
  for (std::size_t c = 0; c < components; ++c)
    for (std::size_t d = 0; d < dim; ++d)
      r.axes[c * dim + d] = axes(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(c));
  const Mat proj = centered * axes;
  r.projections.assign(proj.data(), proj.data() + rows * components);
  return r;
}

}  // namespace deepselective::analysis
