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

#include "deepselective/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

#include "deepselective/binary_io.hpp"
#include "deepselective/errors.hpp"
#include "deepselective/random.hpp"

namespace deepselective::data {

namespace {
constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();
const std::string kMaskPrefix = "mask→";
}  // namespace

const char* split_name(Split s) {
  switch (s) {
    case Split::kTrain: return "train";
    case Split::kValidation: return "validation";
    case Split::kTest: return "test";
  }
  return "?";
}

Split parse_split(const std::string& name) {
  if (name == "train") return Split::kTrain;
  if (name == "validation" || name == "val") return Split::kValidation;
  if (name == "test") return Split::kTest;
  throw ValidationError("unknown split '" + name + "' (expected train, validation, test)");
}

std::span<const double> Dataset::row(std::size_t i) const {
  return std::span<const double>(features).subspan(i * num_features, num_features);
}

std::vector<double> Dataset::column(std::size_t j) const {
  std::vector<double> c(num_samples);
  for (std::size_t i = 0; i < num_samples; ++i) c[i] = features[i * num_features + j];
  return c;
}

std::vector<std::size_t> Dataset::indices(Split s) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < num_samples; ++i)
    if (splits[i] == s) out.push_back(i);
  return out;
}

std::size_t Dataset::count(Split s) const {
  return static_cast<std::size_t>(std::count(splits.begin(), splits.end(), s));
}

std::array<std::size_t, 2> Dataset::class_counts(std::optional<Split> s) const {
  std::array<std::size_t, 2> c{0, 0};
  for (std::size_t i = 0; i < num_samples; ++i) {
    if (s && splits[i] != *s) continue;
    ++c[labels[i] != 0.0 ? 0 : 1];
  }
  return c;
}

std::vector<double> Dataset::gather_rows(std::span<const std::size_t> rows) const {
  std::vector<double> out;
  out.reserve(rows.size() * num_features);
  for (auto r : rows) {
    auto src = row(r);
    out.insert(out.end(), src.begin(), src.end());
  }
  return out;
}

std::vector<double> Dataset::gather_labels(std::span<const std::size_t> rows) const {
  std::vector<double> out;
  out.reserve(rows.size());
  for (auto r : rows) out.push_back(labels[r]);
  return out;
}

double Dataset::raw_value(std::size_t sample, std::size_t feature) const {
  return features[sample * num_features + feature] * scale[feature] + offset[feature];
}

void Dataset::validate() const {
  if (features.size() != num_samples * num_features || labels.size() != num_samples ||
      splits.size() != num_samples || feature_names.size() != num_features ||
      offset.size() != num_features || scale.size() != num_features) {
    throw DataError("dataset arrays are inconsistent with its dimensions");
  }
  for (double v : features)
    if (!std::isfinite(v)) throw DataError("dataset contains non-finite feature values");
  for (double y : labels)
    if (y != 0.0 && y != 1.0) throw DataError("labels must be 0 or 1");
  for (auto i : informative)
    if (i >= num_features) throw DataError("informative index out of range");
}

void SyntheticSpec::validate() const {
  if (num_features == 0) throw ValidationError("synthetic spec: need at least one feature");
  if (num_informative < 1 || num_informative > num_features) {
    throw ValidationError("synthetic spec: informative count k=" + std::to_string(num_informative) +
                          " must satisfy 1 <= k <= N=" + std::to_string(num_features));
  }
  if (num_samples < 2) throw ValidationError("synthetic spec: need at least two samples");
  auto rate = [](double r, const char* what) {
    if (!(r >= 0.0 && r <= 1.0)) {
      throw ValidationError(std::string("synthetic spec: ") + what + " must lie in [0, 1]");
    }
  };
  rate(noise, "noise");
  rate(correlation, "correlation");
  rate(missing_rate, "missing rate");
}

void assign_splits(Dataset& dataset, const Fractions& fractions, std::uint64_t seed) {
  double total = 0.0;
  for (double f : fractions) {
    if (!(f >= 0.0)) throw ParameterError("split fractions must be nonnegative");
    total += f;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw ParameterError("split fractions must sum to 1, got " + std::to_string(total));
  }
  dataset.splits.assign(dataset.num_samples, Split::kTrain);
  Rng rng(mix_seed(seed ^ 0x5d1u));
  for (double cls : {0.0, 1.0}) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < dataset.num_samples; ++i)
      if (dataset.labels[i] == cls) members.push_back(i);
    rng.shuffle(members);
    const double n = static_cast<double>(members.size());
    const auto b1 = static_cast<std::size_t>(std::llround(fractions[0] * n));
    const auto b2 = std::max(b1, static_cast<std::size_t>(std::llround((fractions[0] + fractions[1]) * n)));
    for (std::size_t r = 0; r < members.size(); ++r) {
      dataset.splits[members[r]] = r < b1 ? Split::kTrain
                                   : r < std::min(b2, members.size()) ? Split::kValidation
                                                                      : Split::kTest;
    }
  }
  for (std::size_t s = 0; s < 3; ++s) {
    if (fractions[s] == 0.0) continue;
    const auto counts = dataset.class_counts(static_cast<Split>(s));
    if (counts[0] == 0 || counts[1] == 0) {
      throw ClassBalanceError(std::string("split '") + split_name(static_cast<Split>(s)) +
                              "' would contain " + std::to_string(counts[0]) +
                              " positive and " + std::to_string(counts[1]) + " negative samples");
    }
  }
}

Dataset finalize(std::size_t num_samples, std::size_t num_features, std::vector<double> raw,
                 std::vector<double> labels, std::vector<std::string> names,
                 const Fractions& fractions, std::uint64_t seed) {
  Dataset ds;
  ds.num_samples = num_samples;
  ds.labels = std::move(labels);
  assign_splits(ds, fractions, seed);

  std::vector<double> offset(num_features, 0.0), scale(num_features, 1.0);
  std::vector<bool> has_missing(num_features, false);
  for (std::size_t j = 0; j < num_features; ++j) {
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < num_samples; ++i) {
      const double v = raw[i * num_features + j];
      if (std::isnan(v)) {
        has_missing[j] = true;
        continue;
      }
      if (ds.splits[i] != Split::kTrain) continue;
      sum += v;
      ++n;
    }
    if (n == 0) continue;
    const double mu = sum / static_cast<double>(n);
    double ss = 0.0;
    for (std::size_t i = 0; i < num_samples; ++i) {
      const double v = raw[i * num_features + j];
      if (ds.splits[i] == Split::kTrain && !std::isnan(v)) ss += (v - mu) * (v - mu);
    }
    const double sd = std::sqrt(ss / static_cast<double>(n));
    offset[j] = mu;
    scale[j] = sd > 0.0 ? sd : 1.0;
  }

  std::vector<std::size_t> indicator_of;
  for (std::size_t j = 0; j < num_features; ++j)
    if (has_missing[j]) indicator_of.push_back(j);

  const std::size_t width = num_features + indicator_of.size();
  ds.num_features = width;
  ds.features.assign(num_samples * width, 0.0);
  for (std::size_t i = 0; i < num_samples; ++i) {
    for (std::size_t j = 0; j < num_features; ++j) {
      const double v = raw[i * num_features + j];
      if (!std::isnan(v)) ds.features[i * width + j] = (v - offset[j]) / scale[j];
    }
    for (std::size_t m = 0; m < indicator_of.size(); ++m) {
      ds.features[i * width + num_features + m] =
          std::isnan(raw[i * num_features + indicator_of[m]]) ? 1.0 : 0.0;
    }
  }
  ds.feature_names = std::move(names);
  for (auto j : indicator_of) ds.feature_names.push_back(kMaskPrefix + ds.feature_names[j]);
  ds.offset = std::move(offset);
  ds.scale = std::move(scale);
  ds.offset.resize(width, 0.0);
  ds.scale.resize(width, 1.0);
  ds.validate();
  return ds;
}

Dataset generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  const std::size_t n = spec.num_samples, N = spec.num_features, k = spec.num_informative;

  Rng structure(mix_seed(spec.seed ^ 0x1001));
  std::vector<std::size_t> order(N);
  std::iota(order.begin(), order.end(), 0);
  structure.shuffle(order);
  std::vector<std::size_t> informative(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k));
  std::sort(informative.begin(), informative.end());
  std::vector<double> weight(k);
  for (auto& w : weight) w = (structure.uniform() < 0.5 ? -1.0 : 1.0) * (0.75 + 0.5 * structure.uniform());

  std::vector<bool> is_informative(N, false);
  for (auto j : informative) is_informative[j] = true;

  std::vector<double> raw(n * N);
  Rng signal(mix_seed(spec.seed ^ 0x2002));
  Rng nuisance(mix_seed(spec.nuisance_seed.value_or(spec.seed) ^ 0x3003));
  const double rho = spec.correlation;
  for (std::size_t i = 0; i < n; ++i) {
    for (auto j : informative) raw[i * N + j] = signal.normal();
    const double shared = nuisance.normal();
    for (std::size_t j = 0; j < N; ++j) {
      if (is_informative[j]) continue;
      raw[i * N + j] = std::sqrt(rho) * shared + std::sqrt(1.0 - rho) * nuisance.normal();
    }
  }

  // Additive saturating effects plus pairwise interactions.
  std::vector<double> score(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::size_t a = 0; a < k; ++a) s += weight[a] * std::tanh(1.5 * raw[i * N + informative[a]]);
    for (std::size_t a = 0; a + 1 < k; a += 2) {
      s += 0.25 * raw[i * N + informative[a]] * raw[i * N + informative[a + 1]];
    }
    score[i] = s;
  }
  const double mean = std::accumulate(score.begin(), score.end(), 0.0) / static_cast<double>(n);
  double var = 0.0;
  for (double s : score) var += (s - mean) * (s - mean);
  const double sd = std::sqrt(var / static_cast<double>(n));

  Rng label_noise(mix_seed(spec.seed ^ 0x4004));
  std::vector<double> labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double eps = label_noise.normal();
    labels[i] = score[i] + spec.noise * sd * eps > 0.0 ? 1.0 : 0.0;
  }

  if (spec.missing_rate > 0.0) {
    Rng missing(mix_seed(spec.seed ^ 0x5005));
    for (auto& v : raw)
      if (missing.uniform() < spec.missing_rate) v = kMissing;
  }

  std::vector<std::string> names(N);
  const int width = N > 100 ? 3 : 2;
  for (std::size_t j = 0; j < N; ++j) {
    std::string idx = std::to_string(j);
    names[j] = "f" + std::string(static_cast<std::size_t>(std::max(0, width - static_cast<int>(idx.size()))), '0') + idx;
  }

  auto ds = finalize(n, N, std::move(raw), std::move(labels), std::move(names), spec.fractions,
                     spec.seed);
  ds.informative = std::move(informative);
  return ds;
}

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_commas(const std::string& line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    cells.push_back(trim(std::string_view(line).substr(start, comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return cells;
}

bool parse_number(const std::string& cell, double& out) {
  const char* first = cell.data();
  const char* last = first + cell.size();
  if (first != last && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last && std::isfinite(out);
}

}  // namespace

Dataset ingest_csv_text(const std::string& text, const CsvOptions& options) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    if (!trim(line).empty()) {
      header = split_commas(line);
      break;
    }
  }
  if (header.empty()) throw DataError("CSV has no header row");
  if (!header.empty() && header[0].rfind("\xEF\xBB\xBF", 0) == 0) header[0].erase(0, 3);

  const auto label_it = std::find(header.begin(), header.end(), options.label_column);
  if (label_it == header.end()) {
    throw ValidationError("label column '" + options.label_column + "' not found in CSV header");
  }
  const auto label_col = static_cast<std::size_t>(label_it - header.begin());
  std::vector<std::string> names;
  for (std::size_t c = 0; c < header.size(); ++c)
    if (c != label_col) names.push_back(header[c]);
  const std::size_t N = names.size();
  if (N == 0) throw DataError("CSV has no feature columns");

  std::vector<double> raw, labels;
  std::vector<std::string> problems;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto cells = split_commas(line);
    if (cells.size() != header.size()) {
      problems.push_back("line " + std::to_string(line_no) + ": expected " +
                         std::to_string(header.size()) + " cells, found " +
                         std::to_string(cells.size()));
      continue;
    }
    std::vector<double> row;
    row.reserve(N);
    double label = 0.0;
    bool ok = true;
    for (std::size_t c = 0; c < cells.size(); ++c) {
      double v = kMissing;
      if (c == label_col) {
        if (!parse_number(cells[c], v) || (v != 0.0 && v != 1.0)) {
          problems.push_back("line " + std::to_string(line_no) + ": label '" + cells[c] +
                             "' is not 0 or 1");
          ok = false;
        }
        label = v;
        continue;
      }
      if (!cells[c].empty() && !parse_number(cells[c], v)) {
        problems.push_back("line " + std::to_string(line_no) + ", column '" + header[c] +
                           "': non-numeric value '" + cells[c] + "'");
        ok = false;
      }
      row.push_back(v);
    }
    if (!ok) continue;
    raw.insert(raw.end(), row.begin(), row.end());
    labels.push_back(label);
  }
  if (!problems.empty()) {
    std::string msg = "CSV rejected (" + std::to_string(problems.size()) + " problem rows):";
    for (const auto& p : problems) msg += "\n  " + p;
    throw DataError(msg);
  }
  if (labels.empty()) throw DataError("CSV has no data rows");
  const std::size_t rows = labels.size();
  return finalize(rows, N, std::move(raw), std::move(labels), std::move(names), options.fractions,
                  options.seed);
}

Dataset ingest_csv(const std::filesystem::path& path, const CsvOptions& options) {
  std::string text;
  try {
    text = io::read_text(path);
  } catch (const ArtifactError&) {
    throw DataError("cannot read CSV file " + path.string());
  }
  return ingest_csv_text(text, options);
}

WindowResult window_temporal(std::span<const TemporalRecord> records,
                             std::span<const std::string> feature_names, std::size_t horizon) {
  const std::size_t F = feature_names.size();
  if (F == 0) throw DataError("window_temporal: no features");
  std::vector<std::string> patients;
  std::map<std::string, std::vector<const TemporalRecord*>> by_patient;
  for (const auto& r : records) {
    if (r.values.size() != F) throw DataError("window_temporal: record width mismatch");
    auto& list = by_patient[r.patient];
    if (list.empty()) patients.push_back(r.patient);
    if (!list.empty() && r.time < list.back()->time) {
      throw DataError("window_temporal: records of patient '" + r.patient + "' are not time-sorted");
    }
    list.push_back(&r);
  }

  WindowResult result;
  auto& ds = result.dataset;
  ds.num_features = 4 * F;
  for (const char* stat : {"last", "mean", "min", "max"}) {
    for (const auto& name : feature_names) ds.feature_names.push_back(std::string(stat) + "→" + name);
  }
  for (const auto& patient : patients) {
    const auto& list = by_patient[patient];
    for (std::size_t t = 0; t < list.size(); ++t) {
      if (t < horizon) {
        ++result.skipped;
        continue;
      }
      const std::size_t end = t - horizon;  // inclusive
      std::vector<double> last(F), mean(F, 0.0), lo(F), hi(F);
      for (std::size_t f = 0; f < F; ++f) {
        lo[f] = hi[f] = list[0]->values[f];
        for (std::size_t s = 0; s <= end; ++s) {
          const double v = list[s]->values[f];
          mean[f] += v;
          lo[f] = std::min(lo[f], v);
          hi[f] = std::max(hi[f], v);
        }
        mean[f] /= static_cast<double>(end + 1);
        last[f] = list[end]->values[f];
      }
      for (const auto* block : {&last, &mean, &lo, &hi})
        ds.features.insert(ds.features.end(), block->begin(), block->end());
      ds.labels.push_back(list[t]->label);
      ++ds.num_samples;
    }
  }
  ds.splits.assign(ds.num_samples, Split::kTrain);
  ds.offset.assign(ds.num_features, 0.0);
  ds.scale.assign(ds.num_features, 1.0);
  ds.validate();
  return result;
}

void save_dataset(const Dataset& dataset, const std::filesystem::path& manifest) {
  dataset.validate();
  auto bin = manifest;
  bin.replace_extension(".bin");
  std::vector<unsigned char> bytes;
  bytes.reserve((dataset.num_features + 2) * dataset.num_samples * 8);
  for (std::size_t j = 0; j < dataset.num_features; ++j) io::append_f64_le(bytes, dataset.column(j));
  io::append_f64_le(bytes, dataset.labels);
  std::vector<double> split_ids(dataset.num_samples);
  for (std::size_t i = 0; i < dataset.num_samples; ++i) split_ids[i] = static_cast<double>(dataset.splits[i]);
  io::append_f64_le(bytes, split_ids);
  io::write_bytes(bin, bytes);

  nlohmann::json j;
  j["format"] = "deepselective-dataset";
  j["version"] = 1;
  j["num_samples"] = dataset.num_samples;
  j["num_features"] = dataset.num_features;
  j["feature_names"] = dataset.feature_names;
  j["informative"] = dataset.informative;
  j["offset"] = dataset.offset;
  j["scale"] = dataset.scale;
  j["columns_file"] = bin.filename().string();
  j["layout"] = "column-major float64 little-endian: features, labels, split ids (0 train, 1 validation, 2 test)";
  const auto pos = dataset.class_counts();
  j["class_counts"] = {{"positive", pos[0]}, {"negative", pos[1]}};
  j["split_counts"] = {{"train", dataset.count(Split::kTrain)},
                       {"validation", dataset.count(Split::kValidation)},
                       {"test", dataset.count(Split::kTest)}};
  io::write_text(manifest, j.dump(2) + "\n");
}

Dataset load_dataset(const std::filesystem::path& manifest) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(io::read_text(manifest));
  } catch (const nlohmann::json::exception& e) {
    throw DataError("malformed dataset manifest " + manifest.string() + ": " + e.what());
  } catch (const ArtifactError& e) {
    throw DataError(e.what());
  }
  if (j.value("format", "") != "deepselective-dataset") {
    throw DataError(manifest.string() + " is not a dataset manifest");
  }
  Dataset ds;
  try {
    ds.num_samples = j.at("num_samples").get<std::size_t>();
    ds.num_features = j.at("num_features").get<std::size_t>();
    ds.feature_names = j.at("feature_names").get<std::vector<std::string>>();
    ds.informative = j.at("informative").get<std::vector<std::size_t>>();
    ds.offset = j.at("offset").get<std::vector<double>>();
    ds.scale = j.at("scale").get<std::vector<double>>();
    const auto bin = manifest.parent_path() / j.at("columns_file").get<std::string>();
    const auto values = io::decode_f64_le(io::read_bytes(bin));
    const std::size_t n = ds.num_samples, F = ds.num_features;
    if (values.size() != (F + 2) * n) throw DataError("column store size does not match manifest");
    ds.features.resize(n * F);
    for (std::size_t c = 0; c < F; ++c)
      for (std::size_t i = 0; i < n; ++i) ds.features[i * F + c] = values[c * n + i];
    ds.labels.assign(values.begin() + static_cast<std::ptrdiff_t>(F * n),
                     values.begin() + static_cast<std::ptrdiff_t>((F + 1) * n));
    ds.splits.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double s = values[(F + 1) * n + i];
      if (s != 0.0 && s != 1.0 && s != 2.0) throw DataError("invalid split id in column store");
      ds.splits[i] = static_cast<Split>(static_cast<int>(s));
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError("malformed dataset manifest: " + std::string(e.what()));
  } catch (const ArtifactError& e) {
    throw DataError(e.what());
  }
  ds.validate();
  return ds;
}

}  // namespace deepselective::data
