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

#include "deepselective/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "deepselective/analysis.hpp"
#include "deepselective/binary_io.hpp"
#include "deepselective/checkpoint.hpp"
#include "deepselective/data.hpp"
#include "deepselective/dgfs.hpp"
#include "deepselective/errors.hpp"
#include "deepselective/model.hpp"

namespace deepselective::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kDatasetFile = "dataset.json";
constexpr const char* kCheckpointFile = "checkpoint.json";

struct Options {
  std::string data;
  std::string out;
  std::optional<std::uint64_t> seed;

  data::SyntheticSpec spec;
  std::vector<double> fractions;
  std::string label_column = "label";

  model::TrainConfig train;
  std::optional<std::size_t> layers;
  std::string align_mode = "complement";

  std::string checkpoint;
  std::string split = "test";
  double threshold = 0.5;
  std::size_t bins = analysis::kDefaultBins;
  double mi_threshold = 0.15;
};

std::string format_double(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

std::uint64_t resolve_seed(const std::optional<std::uint64_t>& flag, std::uint64_t fallback) {
  if (flag) return *flag;
  if (const char* env = std::getenv("DEEPSELECTIVE_SEED"); env && *env) {
    try {
      std::size_t used = 0;
      const auto v = std::stoull(env, &used);
      if (used == std::string(env).size()) return v;
    } catch (const std::exception&) {
    }
    throw ValidationError(std::string("DEEPSELECTIVE_SEED is not an unsigned integer: ") + env);
  }
  return fallback;
}

fs::path prepare_out_dir(const std::string& out) {
  if (out.empty()) throw ValidationError("--out is required");
  const fs::path dir(out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw ValidationError("cannot create output directory " + dir.string());
  }
  const auto probe = dir / ".write-probe";
  {
    std::ofstream os(probe);
    if (!os) throw ValidationError("output directory is not writable: " + dir.string());
  }
  fs::remove(probe, ec);
  return dir;
}

data::Fractions to_fractions(const std::vector<double>& v, const data::Fractions& fallback) {
  if (v.empty()) return fallback;
  if (v.size() != 3) throw ValidationError("--fractions needs three values: train,validation,test");
  return {v[0], v[1], v[2]};
}

data::Dataset load_data(const Options& o) {
  fs::path path(o.data);
  if (fs::is_directory(path)) path /= kDatasetFile;
  if (!fs::exists(path)) throw DataError("dataset not found: " + path.string());
  if (path.extension() == ".csv") {
    data::CsvOptions csv;
    csv.label_column = o.label_column;
    csv.fractions = to_fractions(o.fractions, csv.fractions);
    csv.seed = o.spec.seed;
    return data::ingest_csv(path, csv);
  }
  try {
    return data::load_dataset(path);
  } catch (const ArtifactError& e) {
    throw DataError(e.what());
  }
}

model::ModelParams load_model(const Options& o) {
  if (o.checkpoint.empty()) throw ArtifactError("--checkpoint is required");
  fs::path path(o.checkpoint);
  if (fs::is_directory(path)) path /= kCheckpointFile;
  return load_checkpoint(path);
}

std::vector<std::size_t> split_rows(const data::Dataset& ds, const std::string& split) {
  const auto s = data::parse_split(split);
  auto rows = ds.indices(s);
  if (rows.empty()) throw DataError("split '" + split + "' has no samples");
  return rows;
}

void check_features(const data::Dataset& ds, const model::ModelParams& params) {
  if (ds.num_features != params.config.num_features) {
    throw ArtifactError("checkpoint expects " + std::to_string(params.config.num_features) +
                        " features but the dataset has " + std::to_string(ds.num_features));
  }
}

void print_balance(std::ostream& out, const data::Dataset& ds) {
  const auto c = ds.class_counts();
  out << "N=" << ds.num_features << " k=" << ds.informative.size()
      << " samples=" << ds.num_samples << " positives=" << c[0] << " negatives=" << c[1]
      << " (train " << ds.count(data::Split::kTrain) << ", validation "
      << ds.count(data::Split::kValidation) << ", test " << ds.count(data::Split::kTest)
      << ")\n";
}

int cmd_generate(Options& o, std::ostream& out) {
  o.spec.seed = resolve_seed(o.seed, o.spec.seed);
  o.spec.fractions = to_fractions(o.fractions, o.spec.fractions);
  o.spec.validate();
  const auto dir = prepare_out_dir(o.out);
  const auto ds = data::generate_synthetic(o.spec);
  data::save_dataset(ds, dir / kDatasetFile);
  print_balance(out, ds);
  out << "wrote " << (dir / kDatasetFile).string() << "\n";
  return kExitOk;
}

int cmd_train(Options& o, bool synthetic_flags, std::ostream& out) {
  o.train.seed = resolve_seed(o.seed, o.train.seed);
  if (o.layers) o.train.arch.encoder_layers = o.train.arch.decoder_layers = *o.layers;
  if (o.align_mode == "complement") o.train.align_mode = rml::AlignMode::kComplement;
  else if (o.align_mode == "raw") o.train.align_mode = rml::AlignMode::kRawCosine;
  else throw ValidationError("--align-mode must be 'complement' or 'raw'");
  if (!o.data.empty() && synthetic_flags) {
    throw ValidationError("give either --data or synthetic dataset flags, not both");
  }
  o.train.arch.num_features = 1;  // replaced below; lets validation run before data loading
  o.train.validate();
  const auto dir = prepare_out_dir(o.out);

  data::Dataset ds;
  if (o.data.empty()) {
    o.spec.fractions = to_fractions(o.fractions, o.spec.fractions);
    o.spec.validate();
    ds = data::generate_synthetic(o.spec);
  } else {
    ds = load_data(o);
  }
  const auto counts = ds.class_counts(data::Split::kTrain);
  if (counts[0] == 0 || counts[1] == 0) {
    throw ClassBalanceError("training split has a single class (positives: " +
                            std::to_string(counts[0]) + ", negatives: " +
                            std::to_string(counts[1]) + ")");
  }
  print_balance(out, ds);
  if (o.data.empty() || fs::path(o.data).extension() == ".csv") {
    data::save_dataset(ds, dir / kDatasetFile);
  }
  o.train.arch.num_features = ds.num_features;

  const auto result = model::train(ds, o.train);
  for (const auto& e : result.report.epochs) {
    out << "epoch " << e.epoch << "/" << o.train.epochs << " loss=" << std::setprecision(6)
        << e.total << " bce=" << e.bce << " tau=" << e.tau << " |S|=" << e.support_size << "\n";
  }
  save_checkpoint(result.params, dir / kCheckpointFile);
  io::write_text(dir / "report.json", model::report_json(result.report));
  io::write_text(dir / "tau.csv", tau_trajectory_csv(result.params.pid));
  const auto selection = model::inference_selection(result.params);
  io::write_text(dir / "support.json",
                 dgfs::support_json(selection, result.params.feature_names));
  out << "selected " << selection.support.size() << " of " << ds.num_features
      << " features; wrote " << dir.string() << "\n";
  return kExitOk;
}

int cmd_eval(Options& o, std::ostream& out) {
  const auto params = load_model(o);
  const auto ds = load_data(o);
  check_features(ds, params);
  const auto rows = split_rows(ds, o.split);
  const auto scores = model::predict_rows(ds, rows, params);
  const auto labels = ds.gather_labels(rows);
  const auto metrics = analysis::evaluate(labels, scores, o.threshold);
  auto j = json::parse(analysis::metrics_json(metrics, rows.size()));
  j["split"] = o.split;
  const auto text = j.dump(2) + "\n";
  if (o.out.empty()) {
    out << text;
  } else {
    const auto dir = prepare_out_dir(o.out);
    io::write_text(dir / "metrics.json", text);
    out << "auroc=" << format_double(metrics.auroc) << " auprc=" << format_double(metrics.auprc)
        << " f1=" << format_double(metrics.f1)
        << " min_se_pplus=" << format_double(metrics.min_se_pplus) << "\n";
  }
  return kExitOk;
}

std::string mi_csv(const analysis::MiMatrix& m, std::span<const std::string> names,
                   const char* prefix) {
  std::ostringstream os;
  os << std::setprecision(17) << "feature";
  for (std::size_t j = 0; j < m.cols; ++j) os << "," << prefix << j;
  os << "\n";
  for (std::size_t i = 0; i < m.rows; ++i) {
    os << names[i];
    for (std::size_t j = 0; j < m.cols; ++j) os << "," << m.at(i, j);
    os << "\n";
  }
  return os.str();
}

struct Projection {
  analysis::PcaResult pca;
  std::size_t rank_limited = 0;  // components actually available
};

// Two components when the data has them, otherwise one with pc2 = 0.
Projection project_2d(std::span<const double> matrix, std::size_t rows, std::size_t dim) {
  for (std::size_t k = std::min<std::size_t>(2, dim); k >= 1; --k) {
    try {
      return {analysis::pca_project(matrix, rows, dim, k), k};
    } catch (const ValidationError&) {
    }
  }
  return {};
}

std::string pca_csv(const Projection& p, std::span<const std::size_t> rows,
                    std::span<const double> labels) {
  std::ostringstream os;
  os << std::setprecision(17) << "sample_id,pc1,pc2,label\n";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto k = p.rank_limited;
    const double pc1 = k >= 1 ? p.pca.projections[i * k] : 0.0;
    const double pc2 = k >= 2 ? p.pca.projections[i * k + 1] : 0.0;
    os << rows[i] << "," << pc1 << "," << pc2 << "," << labels[i] << "\n";
  }
  return os.str();
}

json pca_summary(const Projection& p, const std::string& file) {
  return {{"components", p.rank_limited},
          {"explained_variance", p.pca.explained_variance},
          {"explained_ratio", p.pca.explained_ratio},
          {"file", file}};
}

int cmd_analyze(Options& o, std::ostream& out) {
  if (o.bins < 1) throw ValidationError("--bins must be at least 1");
  const auto params = load_model(o);
  const auto ds = load_data(o);
  check_features(ds, params);
  const auto dir = prepare_out_dir(o.out);
  const auto rows = split_rows(ds, o.split);
  const std::size_t n = rows.size();
  const std::size_t dim = ds.num_features;
  const auto& names = ds.feature_names;

  const auto selection = model::inference_selection(params);
  const auto& lp = params.log_pi.values();
  const double top = *std::max_element(lp.begin(), lp.end());
  std::vector<double> importance(lp.size());
  double z = 0.0;
  for (std::size_t i = 0; i < lp.size(); ++i) z += importance[i] = std::exp(lp[i] - top);
  for (auto& v : importance) v /= z;

  const auto inputs = ds.gather_rows(rows);
  const auto labels = ds.gather_labels(rows);
  const auto reps = model::represent_rows(ds, rows, params);
  const auto mi_zr = analysis::mi_matrix(inputs, dim, reps.z_r, reps.dim, n, o.bins);
  const auto mi_zs = analysis::mi_matrix(inputs, dim, reps.z_s, reps.dim, n, o.bins);
  const auto tests =
      analysis::feature_significance(inputs, dim, labels, names, selection.support);

  io::write_text(dir / "mi_z_r.csv", mi_csv(mi_zr, names, "z_r"));
  io::write_text(dir / "mi_z_s.csv", mi_csv(mi_zs, names, "z_s"));

  std::ostringstream tcsv;
  tcsv << std::setprecision(17) << "feature,selected,importance,t,df,p,degenerate\n";
  json features = json::array();
  for (std::size_t i = 0; i < dim; ++i) {
    const auto& t = tests[i];
    double zr_max = 0.0;
    for (std::size_t j = 0; j < mi_zr.cols; ++j) zr_max = std::max(zr_max, mi_zr.at(i, j));
    features.push_back({{"index", i},
                        {"name", names[i]},
                        {"selected", t.selected},
                        {"importance", importance[i]},
                        {"mi_z_r_mean", mi_zr.row_mean(i)},
                        {"mi_z_r_max", zr_max},
                        {"mi_z_s_mean", mi_zs.row_mean(i)},
                        {"mi_highlight", zr_max > o.mi_threshold},
                        {"t", std::isfinite(t.test.t) ? json(t.test.t) : json(nullptr)},
                        {"df", t.test.df},
                        {"p", t.test.p},
                        {"degenerate", t.test.degenerate},
                        {"p_below_001", t.below_001},
                        {"p_below_005", t.below_005}});
    tcsv << names[i] << "," << (t.selected ? 1 : 0) << "," << importance[i] << "," << t.test.t
         << "," << t.test.df << "," << t.test.p << "," << (t.test.degenerate ? 1 : 0) << "\n";
  }
  io::write_text(dir / "ttest.csv", tcsv.str());

  const auto pca_raw = project_2d(inputs, n, dim);
  const auto pca_zr = project_2d(reps.z_r, n, reps.dim);
  const auto pca_zs = project_2d(reps.z_s, n, reps.dim);
  io::write_text(dir / "pca_raw.csv", pca_csv(pca_raw, rows, labels));
  io::write_text(dir / "pca_z_r.csv", pca_csv(pca_zr, rows, labels));
  io::write_text(dir / "pca_z_s.csv", pca_csv(pca_zs, rows, labels));

  json report = {{"format", "deepselective-analysis"},
                 {"split", o.split},
                 {"samples", n},
                 {"bins", o.bins},
                 {"mi_threshold", o.mi_threshold},
                 {"tau", params.tau()},
                 {"support", selection.support},
                 {"features", features},
                 {"pca",
                  {{"raw", pca_summary(pca_raw, "pca_raw.csv")},
                   {"z_r", pca_summary(pca_zr, "pca_z_r.csv")},
                   {"z_s", pca_summary(pca_zs, "pca_z_s.csv")}}},
                 {"files",
                  {{"mi_z_r", "mi_z_r.csv"}, {"mi_z_s", "mi_z_s.csv"}, {"ttest", "ttest.csv"}}}};
  if (!ds.informative.empty()) {
    std::vector<bool> informative(dim, false);
    for (auto i : ds.informative) informative[i] = true;
    double si = 0.0, sn = 0.0;
    std::size_t ni = 0, nn = 0;
    for (std::size_t i = 0; i < dim; ++i) {
      (informative[i] ? si : sn) += mi_zr.row_mean(i);
      ++(informative[i] ? ni : nn);
    }
    std::size_t recovered = 0;
    for (auto s : selection.support) recovered += informative[s] ? 1 : 0;
    report["ground_truth"] = {
        {"informative", ds.informative},
        {"recovered", recovered},
        {"mean_mi_z_r_informative", ni ? si / static_cast<double>(ni) : 0.0},
        {"mean_mi_z_r_nuisance", nn ? sn / static_cast<double>(nn) : 0.0}};
  }
  io::write_text(dir / "analysis.json", report.dump(2) + "\n");
  out << "analyzed " << n << " " << o.split << " samples; |S|=" << selection.support.size()
      << "; wrote " << dir.string() << "\n";
  return kExitOk;
}

void add_synthetic_flags(CLI::App* app, Options& o, std::vector<CLI::Option*>& flags,
                         const char* seed_flag) {
  flags.push_back(app->add_option("--features", o.spec.num_features, "Feature count N")
                      ->capture_default_str());
  flags.push_back(app->add_option("--informative", o.spec.num_informative,
                                  "Informative feature count k")
                      ->capture_default_str());
  flags.push_back(
      app->add_option("--samples", o.spec.num_samples, "Sample count")->capture_default_str());
  flags.push_back(
      app->add_option("--noise", o.spec.noise, "Label noise level")->capture_default_str());
  flags.push_back(app->add_option("--correlation", o.spec.correlation,
                                  "Correlation among nuisance features")
                      ->capture_default_str());
  flags.push_back(app->add_option("--missing-rate", o.spec.missing_rate,
                                  "Fraction of cells made missing")
                      ->capture_default_str());
  if (seed_flag) {
    flags.push_back(
        app->add_option(seed_flag, o.spec.seed, "Synthetic data seed")->capture_default_str());
  }
}

void add_train_flags(CLI::App* app, Options& o) {
  auto& t = o.train;
  app->add_option("--epochs", t.epochs)->capture_default_str();
  app->add_option("--batch-size", t.batch_size)->capture_default_str();
  app->add_option("--lr", t.adam.learning_rate, "Adam learning rate")->capture_default_str();
  app->add_option("--beta1", t.beta1, "Alignment loss weight")->capture_default_str();
  app->add_option("--beta2", t.beta2, "Reconstruction loss weight")->capture_default_str();
  app->add_option("--alpha", t.alpha, "Sparsity penalty weight")->capture_default_str();
  app->add_option("--tau0", t.pid.tau0, "Initial temperature")->capture_default_str();
  app->add_option("--kp", t.pid.kp)->capture_default_str();
  app->add_option("--ki", t.pid.ki)->capture_default_str();
  app->add_option("--kd", t.pid.kd)->capture_default_str();
  app->add_option("--tau-min", t.pid.tau_min)->capture_default_str();
  app->add_option("--tau-max", t.pid.tau_max)->capture_default_str();
  app->add_option("--latent-dim", t.arch.latent_dim)->capture_default_str();
  app->add_option("--heads", t.arch.heads)->capture_default_str();
  app->add_option("--layers", o.layers, "Encoder and decoder layer count");
  app->add_option("--encoder-layers", t.arch.encoder_layers)->capture_default_str();
  app->add_option("--decoder-layers", t.arch.decoder_layers)->capture_default_str();
  app->add_option("--ff-multiplier", t.arch.ff_multiplier)->capture_default_str();
  app->add_option("--head-hidden", t.arch.head_hidden)->capture_default_str();
  app->add_option("--align-mode", o.align_mode, "complement or raw")->capture_default_str();
  app->add_flag("--weighted-align-error", t.weighted_align_error,
                "Feed the weighted alignment loss to the temperature controller");
}

// Replaces "--config FILE" with the file's entries as "--key=value" arguments
// placed right after the subcommand, ahead of every explicit flag.
std::vector<std::string> expand_config(const std::vector<std::string>& args) {
  std::vector<std::string> rest;
  std::optional<std::string> file;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config") {
      if (i + 1 >= args.size()) throw ValidationError("--config needs a file name");
      file = args[++i];
    } else if (args[i].rfind("--config=", 0) == 0) {
      file = args[i].substr(9);
    } else {
      rest.push_back(args[i]);
    }
  }
  if (!file) return rest;
  std::vector<CLI::ConfigItem> items;
  try {
    items = CLI::ConfigINI().from_file(*file);
  } catch (const CLI::Error& e) {
    throw ValidationError("cannot read config file " + *file + ": " + e.what());
  }
  std::vector<std::string> entries;
  for (const auto& item : items) {
    if (!item.parents.empty()) {
      throw ValidationError("config file " + *file + " must be flat; found section '" +
                            item.parents.front() + "'");
    }
    std::string value;
    for (const auto& v : item.inputs) value += (value.empty() ? "" : ",") + v;
    entries.push_back("--" + item.name + "=" + value);
  }
  if (rest.empty()) return entries;
  rest.insert(rest.begin() + 1, entries.begin(), entries.end());
  return rest;
}

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"DeepSelective: feature selection and compression for tabular prediction"};
  app.name("deepselective");
  // A repeated option keeps its last value, so flags placed after config entries win.
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.require_subcommand(1);

  auto* generate = app.add_subcommand("generate", "Write a synthetic dataset");
  auto* train = app.add_subcommand("train", "Train a model and write a checkpoint");
  auto* eval = app.add_subcommand("eval", "Score a checkpoint on a dataset split");
  auto* analyze = app.add_subcommand("analyze", "Export interpretability reports");

  std::string config_help;
  for (auto* sub : {generate, train, eval, analyze}) {
    sub->add_option("--config", config_help, "Flat key = value file; flags take precedence");
    sub->add_option("--out", o.out, "Output directory");
  }
  for (auto* sub : {train, eval, analyze}) {
    sub->add_option("--data", o.data, "Dataset manifest, its directory, or a CSV file");
    sub->add_option("--label-column", o.label_column, "Label column for CSV input")
        ->capture_default_str();
  }
  std::vector<CLI::Option*> unused, train_synthetic;
  add_synthetic_flags(generate, o, unused, nullptr);
  generate->add_option("--seed", o.seed, "Data seed (falls back to DEEPSELECTIVE_SEED)");
  generate->add_option("--fractions", o.fractions, "train,validation,test")
      ->delimiter(',')
      ->expected(3);

  add_synthetic_flags(train, o, train_synthetic, "--data-seed");
  train->add_option("--seed", o.seed, "Training seed (falls back to DEEPSELECTIVE_SEED)");
  train->add_option("--fractions", o.fractions, "Split fractions for generated or CSV data")
      ->delimiter(',')
      ->expected(3);
  add_train_flags(train, o);

  for (auto* sub : {eval, analyze}) {
    sub->add_option("--checkpoint", o.checkpoint, "Checkpoint manifest or its directory");
    sub->add_option("--split", o.split, "train, validation or test")->capture_default_str();
    sub->add_option("--seed", o.seed, "Accepted for uniformity; inference is noise-free");
  }
  eval->add_option("--threshold", o.threshold, "Decision threshold for F1")
      ->capture_default_str();
  analyze->add_option("--bins", o.bins, "Histogram bins per axis")->capture_default_str();
  analyze->add_option("--mi-threshold", o.mi_threshold, "MI highlight threshold (nats)")
      ->capture_default_str();

  try {
    const auto expanded = expand_config(args);
    std::vector<std::string> reversed(expanded.rbegin(), expanded.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  if (generate->parsed()) return cmd_generate(o, out);
  if (train->parsed()) {
    const bool synthetic = std::any_of(train_synthetic.begin(), train_synthetic.end(),
                                       [](const CLI::Option* opt) { return opt->count() > 0; });
    return cmd_train(o, synthetic, out);
  }
  if (eval->parsed()) return cmd_eval(o, out);
  return cmd_analyze(o, out);
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  try {
    return dispatch(args, out, err);
  } catch (const ClassBalanceError& e) {
    err << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const UndefinedMetricError& e) {
    err << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const ArtifactError& e) {
    err << "artifact error: " << e.what() << "\n";
    return kExitArtifact;
  } catch (const ValidationError& e) {
    err << "invalid configuration: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ParameterError& e) {
    err << "invalid configuration: " << e.what() << "\n";
    return kExitUsage;
  } catch (const DimensionError& e) {
    err << "invalid configuration: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
}

}  // namespace deepselective::cli
