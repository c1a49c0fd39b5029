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

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace deepselective::data {

enum class Split : std::uint8_t { kTrain = 0, kValidation = 1, kTest = 2 };

const char* split_name(Split s);
Split parse_split(const std::string& name);

using Fractions = std::array<double, 3>;  // train, validation, test

struct Dataset {
  std::size_t num_samples = 0;
  std::size_t num_features = 0;
  std::vector<double> features;  // row-major [num_samples x num_features]
  std::vector<double> labels;    // 0/1
  std::vector<std::string> feature_names;
  std::vector<std::size_t> informative;  // synthetic ground truth, else empty
  std::vector<Split> splits;
  // Per-column affine map applied at ingestion: stored = (raw - offset) / scale.
  // Missingness-indicator columns carry offset 0, scale 1.
  std::vector<double> offset;
  std::vector<double> scale;

  std::span<const double> row(std::size_t i) const;
  std::vector<double> column(std::size_t j) const;
  std::vector<std::size_t> indices(Split s) const;
  std::size_t count(Split s) const;
  // Samples of `split` with label 1 / label 0.
  std::array<std::size_t, 2> class_counts(std::optional<Split> s = std::nullopt) const;
  // Row-major features of the listed samples.
  std::vector<double> gather_rows(std::span<const std::size_t> rows) const;
  std::vector<double> gather_labels(std::span<const std::size_t> rows) const;
  // Undo standardization of one stored value.
  double raw_value(std::size_t sample, std::size_t feature) const;

  void validate() const;
};

struct SyntheticSpec {
  std::size_t num_features = 64;
  std::size_t num_informative = 8;
  std::size_t num_samples = 4000;
  double noise = 0.1;          // label noise, as a fraction of the score's std-dev
  double correlation = 0.5;    // shared-factor correlation among nuisance features
  double missing_rate = 0.0;
  std::uint64_t seed = 7;
  // Overrides the nuisance stream only; labels and informative columns are unchanged.
  std::optional<std::uint64_t> nuisance_seed;
  Fractions fractions{0.8, 0.1, 0.1};

  void validate() const;
};

// Labels depend only on a nonlinear function of the informative features plus
// label noise; nuisance features are correlated Gaussians independent of
// everything else.
Dataset generate_synthetic(const SyntheticSpec& spec);

struct CsvOptions {
  std::string label_column = "label";
  Fractions fractions{1.0, 0.0, 0.0};
  std::uint64_t seed = 7;
};

// Header row required; empty cells are missing. Columns are standardized with
// train-split statistics, missing cells become 0, and each column that had any
// missing cell gets a companion indicator column "mask→<name>".
Dataset ingest_csv(const std::filesystem::path& path, const CsvOptions& options);
Dataset ingest_csv_text(const std::string& text, const CsvOptions& options);

struct TemporalRecord {
  std::string patient;
  double time = 0.0;
  std::vector<double> values;
  double label = 0.0;
};

struct WindowResult {
  Dataset dataset;
  std::size_t skipped = 0;
};

// The sample labelled by record t of a patient summarizes records
// [0, t - horizon] of that patient: last value, then mean, min, max per feature.
// Records must be time-sorted within each patient. Samples whose window would
// be empty are skipped and counted. No standardization is applied.
WindowResult window_temporal(std::span<const TemporalRecord> records,
                             std::span<const std::string> feature_names, std::size_t horizon = 1);

// Stratified, seeded split assignment. Throws ValidationError if a split with a
// nonzero fraction lacks either class, ParameterError for bad fractions.
void assign_splits(Dataset& dataset, const Fractions& fractions, std::uint64_t seed);

// Raw values (NaN = missing) -> split, standardize on train, impute, add indicators.
Dataset finalize(std::size_t num_samples, std::size_t num_features, std::vector<double> raw,
                 std::vector<double> labels, std::vector<std::string> names,
                 const Fractions& fractions, std::uint64_t seed);

// JSON manifest plus a little-endian float64 column store next to it
// (<stem>.bin): every feature column, then labels, then split ids.
void save_dataset(const Dataset& dataset, const std::filesystem::path& manifest);
Dataset load_dataset(const std::filesystem::path& manifest);

}  // namespace deepselective::data
