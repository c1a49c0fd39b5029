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

// End-to-end assembly: selection -> straight-through mask -> {ATA encoder,
// linear z_s projection} -> representation matching -> MLP head, with the ATA
// decoder reconstructing the masked input.

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "deepselective/ata.hpp"
#include "deepselective/data.hpp"
#include "deepselective/dgfs.hpp"
#include "deepselective/optimizer.hpp"
#include "deepselective/params.hpp"
#include "deepselective/rml.hpp"
#include "deepselective/sparsity_controller.hpp"

namespace deepselective::model {

struct ModelConfig {
  std::size_t num_features = 1;
  std::size_t latent_dim = 16;
  std::size_t heads = 4;
  std::size_t encoder_layers = 2;
  std::size_t decoder_layers = 2;
  std::size_t ff_multiplier = 4;
  std::size_t head_hidden = 32;

  ata::AtaConfig ata() const;
  void validate() const;
};

struct TrainConfig {
  ModelConfig arch;
  double beta1 = 0.1;   // alignment weight
  double beta2 = 0.1;   // reconstruction weight
  double alpha = 0.01;  // sparsity weight
  AdamConfig adam;
  std::size_t batch_size = 64;
  std::size_t epochs = 20;
  std::uint64_t seed = 42;
  PidConfig pid;
  rml::AlignMode align_mode = rml::AlignMode::kComplement;
  // Feed beta1 * L_align instead of the raw L_align into the PID error.
  bool weighted_align_error = false;

  void validate() const;
};

struct HeadParams {
  Linear hidden;
  Linear out;
};

struct ModelParams {
  ModelConfig config;
  std::vector<std::string> feature_names;
  Tensor log_pi;
  ata::AtaParams ata;
  rml::RmlParams rml;
  HeadParams head;
  PidState pid;
  AdamState adam;

  static ModelParams init(const ModelConfig& config, const PidConfig& pid, std::uint64_t seed);
  // Every trainable tensor exactly once, in a fixed order.
  ParamList parameters() const;
  double tau() const { return pid.tau; }
};

struct ForwardResult {
  Tensor y_hat;  // [batch] probabilities
  dgfs::SelectionState selection;
  Tensor x_masked;  // straight-through masked input fed to both branches
  Tensor z_s;
  Tensor z_r;
  Tensor r_final;
  Tensor x_hat;  // [batch, N] decoder output over every feature
};

// x: [batch, N] or [N]. No seed means zero Gumbel noise.
ForwardResult forward(const Tensor& x, const ModelParams& params, double tau,
                      std::optional<std::uint64_t> noise_seed,
                      dgfs::MaskForward mask_forward = dgfs::MaskForward::kHard);

struct LossWeights {
  double beta1 = 0.1;
  double beta2 = 0.1;
  double alpha = 0.01;
  rml::AlignMode align_mode = rml::AlignMode::kComplement;
};

struct LossBreakdown {
  Tensor total;
  double pred = 0.0;  // bce + sparsity
  double bce = 0.0;
  double sparsity = 0.0;
  double align = 0.0;
  double recon = 0.0;
  std::size_t degenerate_align = 0;
};

// L = [BCE(y, y_hat) + alpha * sparsity] + beta1 * L_align + beta2 * ‖x⊙m - x_hat⊙m‖_F
LossBreakdown total_loss(std::span<const double> y, const Tensor& y_hat, const Tensor& z_r,
                         const Tensor& z_s, const Tensor& x, const Tensor& x_hat,
                         const dgfs::SelectionState& state, const LossWeights& weights);

struct EpochRecord {
  std::size_t epoch = 0;
  double pred_loss = 0.0;
  double bce = 0.0;
  double sparsity = 0.0;
  double align_loss = 0.0;
  double recon_loss = 0.0;
  double total = 0.0;
  double error = 0.0;  // PID input
  double tau = 0.0;    // after the update
  std::size_t support_size = 0;
};

struct TrainingReport {
  std::vector<EpochRecord> epochs;
  PidState pid;
  std::vector<std::size_t> support;
  std::vector<double> probabilities;
  std::vector<std::string> feature_names;
  std::size_t train_samples = 0;
  std::size_t degenerate_align = 0;
  std::uint64_t seed = 0;
};

struct TrainResult {
  ModelParams params;
  TrainingReport report;
};

// Requires both classes in the training split (ValidationError otherwise).
TrainResult train(const data::Dataset& dataset, const TrainConfig& config);

struct Prediction {
  std::vector<double> probability;
  std::vector<std::size_t> support;
};

// Zero-noise inference at the trained temperature.
Prediction predict(const Tensor& x, const ModelParams& params);

// Probabilities for the listed dataset rows, batched.
std::vector<double> predict_rows(const data::Dataset& dataset, std::span<const std::size_t> rows,
                                 const ModelParams& params, std::size_t batch_size = 256);

struct Representations {
  std::size_t rows = 0;
  std::size_t dim = 0;
  std::vector<double> z_r;  // row-major [rows, dim]
  std::vector<double> z_s;
};

Representations represent_rows(const data::Dataset& dataset, std::span<const std::size_t> rows,
                               const ModelParams& params, std::size_t batch_size = 256);

// Inference-time selection (zero noise, trained tau).
dgfs::SelectionState inference_selection(const ModelParams& params);

std::string report_json(const TrainingReport& report);

}  // namespace deepselective::model
