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

#include "deepselective/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <nlohmann/json.hpp>

#include "deepselective/errors.hpp"
#include "deepselective/ops.hpp"
#include "deepselective/random.hpp"

namespace deepselective::model {

ata::AtaConfig ModelConfig::ata() const {
  return {num_features, latent_dim, heads, encoder_layers, decoder_layers, ff_multiplier};
}

void ModelConfig::validate() const {
  ata().validate();
  if (head_hidden == 0) throw ParameterError("head hidden width must be >= 1");
}

void TrainConfig::validate() const {
  arch.validate();
  if (!(beta1 >= 0.0) || !(beta2 >= 0.0) || !(alpha >= 0.0)) {
    throw ParameterError("beta1, beta2 and alpha must be nonnegative");
  }
  if (epochs < 1) throw ParameterError("epochs must be >= 1");
  if (batch_size < 1) throw ParameterError("batch size must be >= 1");
  if (!(adam.learning_rate > 0.0)) throw ParameterError("learning rate must be positive");
  pid.validate();
}

ModelParams ModelParams::init(const ModelConfig& config, const PidConfig& pid, std::uint64_t seed) {
  config.validate();
  Initializer init(mix_seed(seed ^ 0x1417));
  ModelParams p;
  p.config = config;
  p.log_pi = Tensor::zeros({config.num_features}, true);
  p.ata = ata::AtaParams::init(config.ata(), init);
  p.rml = rml::RmlParams::init(config.num_features, config.latent_dim, init);
  p.head.hidden = Linear::init(init, 2 * config.latent_dim, config.head_hidden);
  p.head.out = Linear::init(init, config.head_hidden, 1);
  p.pid = PidState::initial(pid);
  for (std::size_t i = 0; i < config.num_features; ++i) {
    p.feature_names.push_back("feature_" + std::to_string(i));
  }
  return p;
}

ParamList ModelParams::parameters() const {
  ParamList out;
  out.push_back({"dgfs.log_pi", log_pi});
  ata.collect(out, "ata");
  rml.collect(out, "rml");
  head.hidden.collect(out, "head.hidden");
  head.out.collect(out, "head.out");
  return out;
}

ForwardResult forward(const Tensor& x, const ModelParams& params, double tau,
                      std::optional<std::uint64_t> noise_seed, dgfs::MaskForward mask_forward) {
  const std::size_t n = params.config.num_features;
  Tensor batch = x;
  if (x.rank() == 1) batch = ops::reshape(x, {1, x.numel()});
  if (batch.rank() != 2 || batch.dim(1) != n) {
    throw DimensionError("forward: input " + shape_string(x.shape()) + " does not have " +
                         std::to_string(n) + " features");
  }
  for (double v : batch.values()) {
    if (!std::isfinite(v)) throw NumericalError("forward: non-finite input");
  }
  ForwardResult r;
  r.selection = dgfs::compute_selection(params.log_pi, tau, noise_seed);
  r.x_masked = dgfs::straight_through_mask(batch, r.selection, mask_forward);
  r.z_r = ata::encode(r.x_masked, r.selection.support, params.ata);
  r.z_s = rml::project_zs(r.x_masked, params.rml.projection);
  r.r_final = rml::final_representation(rml::r_add(r.z_s, r.z_r, params.rml.gate),
                                        rml::r_sub(r.z_s, r.z_r, params.rml.complement));
  auto logit = params.head.out(ops::relu(params.head.hidden(r.r_final)));
  r.y_hat = ops::sigmoid(ops::reshape(logit, {batch.dim(0)}));
  r.x_hat = ata::decode(r.z_r, params.ata);
  return r;
}

LossBreakdown total_loss(std::span<const double> y, const Tensor& y_hat, const Tensor& z_r,
                         const Tensor& z_s, const Tensor& x, const Tensor& x_hat,
                         const dgfs::SelectionState& state, const LossWeights& weights) {
  for (double v : y) {
    if (v != 0.0 && v != 1.0) throw ValidationError("labels must be 0 or 1");
  }
  LossBreakdown out;
  auto bce = ops::binary_cross_entropy(y_hat, y);
  auto sparsity = dgfs::sparsity_penalty(state, weights.alpha);
  auto pred = bce + sparsity;
  auto align = rml::align_loss(z_r, z_s, weights.align_mode);
  auto recon = ata::reconstruction_loss(dgfs::apply_mask(x, state), dgfs::apply_mask(x_hat, state));
  out.total = pred + ops::scale(align.loss, weights.beta1) + ops::scale(recon, weights.beta2);
  out.bce = bce.item();
  out.sparsity = sparsity.item();
  out.pred = pred.item();
  out.align = align.loss.item();
  out.recon = recon.item();
  out.degenerate_align = align.degenerate;
  return out;
}

dgfs::SelectionState inference_selection(const ModelParams& params) {
  NoGradGuard guard;
  return dgfs::compute_selection(params.log_pi, params.tau(), std::nullopt);
}

TrainResult train(const data::Dataset& dataset, const TrainConfig& config) {
  config.validate();
  if (config.arch.num_features != dataset.num_features) {
    throw DimensionError("model expects " + std::to_string(config.arch.num_features) +
                         " features, dataset has " + std::to_string(dataset.num_features));
  }
  auto rows = dataset.indices(data::Split::kTrain);
  const auto counts = dataset.class_counts(data::Split::kTrain);
  if (counts[0] == 0 || counts[1] == 0) {
    throw ClassBalanceError("training split must contain both classes (positives: " +
                            std::to_string(counts[0]) + ", negatives: " +
                            std::to_string(counts[1]) + ")");
  }

  TrainResult result;
  auto& params = result.params;
  params = ModelParams::init(config.arch, config.pid, config.seed);
  params.feature_names = dataset.feature_names;
  auto list = params.parameters();
  Rng rng(mix_seed(config.seed ^ 0x7a11));
  const LossWeights weights{config.beta1, config.beta2, config.alpha, config.align_mode};
  const std::size_t n = dataset.num_features;

  auto& report = result.report;
  report.feature_names = dataset.feature_names;
  report.train_samples = rows.size();
  report.seed = config.seed;

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    rng.shuffle(rows);
    EpochRecord rec;
    rec.epoch = epoch;
    for (std::size_t start = 0; start < rows.size(); start += config.batch_size) {
      const std::size_t end = std::min(rows.size(), start + config.batch_size);
      std::span<const std::size_t> batch_rows(rows.data() + start, end - start);
      const double share = static_cast<double>(batch_rows.size()) / static_cast<double>(rows.size());
      auto x = Tensor::from({batch_rows.size(), n}, dataset.gather_rows(batch_rows));
      const auto y = dataset.gather_labels(batch_rows);

      auto fwd = forward(x, params, params.tau(), rng.next());
      auto loss = total_loss(y, fwd.y_hat, fwd.z_r, fwd.z_s, x, fwd.x_hat, fwd.selection, weights);
      if (!std::isfinite(loss.total.item())) {
        throw NumericalError("training diverged at epoch " + std::to_string(epoch));
      }
      zero_grads(list);
      loss.total.backward();
      adam_step(list, params.adam, config.adam);

      rec.pred_loss += share * loss.pred;
      rec.bce += share * loss.bce;
      rec.sparsity += share * loss.sparsity;
      rec.align_loss += share * loss.align;
      rec.recon_loss += share * loss.recon;
      rec.total += share * loss.total.item();
      report.degenerate_align += loss.degenerate_align;
    }
    const double align_term = config.weighted_align_error ? config.beta1 * rec.align_loss
                                                          : rec.align_loss;
    rec.error = error_signal(rec.pred_loss, align_term);
    params.pid = update_tau(std::move(params.pid), rec.error);
    rec.tau = params.tau();
    rec.support_size = inference_selection(params).support.size();
    report.epochs.push_back(rec);
  }
  zero_grads(list);
  report.pid = params.pid;
  const auto sel = inference_selection(params);
  report.support = sel.support;
  report.probabilities.assign(sel.p.values().begin(), sel.p.values().end());
  return result;
}

Prediction predict(const Tensor& x, const ModelParams& params) {
  NoGradGuard guard;
  auto fwd = forward(x.detach(), params, params.tau(), std::nullopt);
  return {std::vector<double>(fwd.y_hat.values().begin(), fwd.y_hat.values().end()),
          fwd.selection.support};
}

namespace {

template <typename Fn>
void for_each_batch(const data::Dataset& dataset, std::span<const std::size_t> rows,
                    std::size_t batch_size, Fn fn) {
  const std::size_t batches = (rows.size() + batch_size - 1) / batch_size;
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t b = 0; b < static_cast<std::ptrdiff_t>(batches); ++b) {
    NoGradGuard guard;
    const std::size_t start = static_cast<std::size_t>(b) * batch_size;
    const std::size_t end = std::min(rows.size(), start + batch_size);
    auto sub = rows.subspan(start, end - start);
    fn(start, Tensor::from({sub.size(), dataset.num_features}, dataset.gather_rows(sub)));
  }
}

}  // namespace

std::vector<double> predict_rows(const data::Dataset& dataset, std::span<const std::size_t> rows,
                                 const ModelParams& params, std::size_t batch_size) {
  if (dataset.num_features != params.config.num_features) {
    throw ArtifactError("checkpoint expects " + std::to_string(params.config.num_features) +
                        " features, dataset has " + std::to_string(dataset.num_features));
  }
  std::vector<double> out(rows.size());
  if (rows.empty()) return out;
  for_each_batch(dataset, rows, batch_size, [&](std::size_t start, const Tensor& x) {
    auto fwd = forward(x, params, params.tau(), std::nullopt);
    std::copy(fwd.y_hat.values().begin(), fwd.y_hat.values().end(), out.begin() + static_cast<std::ptrdiff_t>(start));
  });
  return out;
}

Representations represent_rows(const data::Dataset& dataset, std::span<const std::size_t> rows,
                               const ModelParams& params, std::size_t batch_size) {
  if (dataset.num_features != params.config.num_features) {
    throw ArtifactError("checkpoint expects " + std::to_string(params.config.num_features) +
                        " features, dataset has " + std::to_string(dataset.num_features));
  }
  Representations rep;
  rep.rows = rows.size();
  rep.dim = params.config.latent_dim;
  rep.z_r.resize(rep.rows * rep.dim);
  rep.z_s.resize(rep.rows * rep.dim);
  if (rows.empty()) return rep;
  for_each_batch(dataset, rows, batch_size, [&](std::size_t start, const Tensor& x) {
    auto fwd = forward(x, params, params.tau(), std::nullopt);
    const auto off = static_cast<std::ptrdiff_t>(start * rep.dim);
    std::copy(fwd.z_r.values().begin(), fwd.z_r.values().end(), rep.z_r.begin() + off);
    std::copy(fwd.z_s.values().begin(), fwd.z_s.values().end(), rep.z_s.begin() + off);
  });
  return rep;
}

std::string report_json(const TrainingReport& report) {
  nlohmann::json j;
  j["seed"] = report.seed;
  j["train_samples"] = report.train_samples;
  j["degenerate_align_rows"] = report.degenerate_align;
  auto& epochs = j["epochs"] = nlohmann::json::array();
  for (const auto& e : report.epochs) {
    epochs.push_back({{"epoch", e.epoch},
                      {"pred_loss", e.pred_loss},
                      {"bce", e.bce},
                      {"sparsity", e.sparsity},
                      {"align_loss", e.align_loss},
                      {"recon_loss", e.recon_loss},
                      {"total", e.total},
                      {"error", e.error},
                      {"tau", e.tau},
                      {"support_size", e.support_size}});
  }
  j["final"] = {{"tau", report.pid.tau},
                {"support", report.support},
                {"support_names", [&] {
                   std::vector<std::string> names;
                   for (auto i : report.support) names.push_back(report.feature_names.at(i));
                   return names;
                 }()},
                {"probabilities", report.probabilities}};
  return j.dump(2);
}

}  // namespace deepselective::model
