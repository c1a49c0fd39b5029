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

// Evaluation metrics and interpretability statistics.

#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace deepselective::analysis {

struct Confusion {
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
};

struct MetricSet {
  double auroc = 0.0;
  double auprc = 0.0;
  double f1 = 0.0;
  double min_se_pplus = 0.0;
  double threshold = 0.5;
  Confusion confusion;  // at `threshold`
};

// Mann-Whitney form: P(score+ > score-) + P(tie)/2. Needs both classes.
double auroc(std::span<const double> labels, std::span<const double> scores);
// Average precision: mean over positives of the precision at that positive's
// score threshold (tied scores share one threshold). Needs a positive.
double auprc(std::span<const double> labels, std::span<const double> scores);
// max over thresholds t of min(sensitivity, precision) with "positive" meaning
// score >= t; thresholds are the observed scores plus +inf. Needs both classes.
double min_se_pplus(std::span<const double> labels, std::span<const double> scores);
// F1 at score >= threshold.
double f1_score(std::span<const double> labels, std::span<const double> scores, double threshold,
                Confusion* confusion = nullptr);

MetricSet evaluate(std::span<const double> labels, std::span<const double> scores,
                   double threshold = 0.5);
std::string metrics_json(const MetricSet& metrics, std::size_t samples);

inline constexpr std::size_t kDefaultBins = 16;

struct MiResult {
  double value = 0.0;  // nats
  bool degenerate = false;
};

// Plug-in estimate from an equal-width 2-D histogram over each column's range.
// A constant column gives 0 and sets `degenerate`.
MiResult mutual_information(std::span<const double> x, std::span<const double> y,
                            std::size_t bins = kDefaultBins);

struct MiMatrix {
  std::size_t rows = 0;  // input features
  std::size_t cols = 0;  // latent dimensions
  std::size_t bins = kDefaultBins;
  std::vector<double> values;  // row-major

  double at(std::size_t i, std::size_t j) const { return values[i * cols + j]; }
  double row_mean(std::size_t i) const;
};

// MI of every column of `inputs` [n x input_dim] with every column of
// `latents` [n x latent_dim].
MiMatrix mi_matrix(std::span<const double> inputs, std::size_t input_dim,
                   std::span<const double> latents, std::size_t latent_dim, std::size_t n,
                   std::size_t bins = kDefaultBins);

struct TTestResult {
  double t = 0.0;
  double df = 0.0;
  double p = 1.0;
  bool degenerate = false;
};

// Welch's unequal-variance two-sample t-test, two-sided. Each group needs >= 2
// values. Two zero-variance groups give p = 1 for equal means, p = 0 otherwise.
TTestResult welch_ttest(std::span<const double> a, std::span<const double> b);

struct FeatureSignificance {
  std::size_t index = 0;
  std::string name;
  bool selected = false;
  TTestResult test;
  bool below_001 = false;
  bool below_005 = false;
};

// Per-feature Welch test of the feature's values in the positive vs negative
// class over the listed rows (row-major [n x dim] features).
std::vector<FeatureSignificance> feature_significance(
    std::span<const double> features, std::size_t dim, std::span<const double> labels,
    std::span<const std::string> names, std::span<const std::size_t> support);

struct PcaResult {
  std::size_t rows = 0;
  std::size_t dim = 0;
  std::size_t components = 0;
  std::vector<double> mean;                  // [dim]
  std::vector<double> axes;                  // row-major [components x dim]
  std::vector<double> projections;           // row-major [rows x components]
  std::vector<double> explained_variance;    // eigenvalues
  std::vector<double> explained_ratio;       // eigenvalue / total variance
};

// Mean-centred projection onto the top eigenvectors of the sample covariance.
// Each axis is signed so its largest-magnitude loading is positive.
// Throws ValidationError if components exceed the covariance rank.
PcaResult pca_project(std::span<const double> matrix, std::size_t rows, std::size_t dim,
                      std::size_t components);

}  // namespace deepselective::analysis
