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

#include "deepselective/checkpoint.hpp"

#include <nlohmann/json.hpp>

#include "deepselective/binary_io.hpp"
#include "deepselective/errors.hpp"

namespace deepselective {

namespace {

nlohmann::json pid_json(const PidState& s) {
  nlohmann::json history = nlohmann::json::array();
  for (const auto& r : s.history) history.push_back({r.step, r.error, r.tau_unclamped, r.tau});
  return {{"tau0", s.config.tau0},       {"kp", s.config.kp},
          {"ki", s.config.ki},           {"kd", s.config.kd},
          {"tau_min", s.config.tau_min}, {"tau_max", s.config.tau_max},
          {"tau", s.tau},                {"error_integral", s.error_integral},
          {"prev_error", s.prev_error},  {"history", history}};
}

PidState pid_from_json(const nlohmann::json& j) {
  PidState s;
  s.config = {j.at("tau0"), j.at("kp"), j.at("ki"), j.at("kd"), j.at("tau_min"), j.at("tau_max")};
  s.tau = j.at("tau");
  s.error_integral = j.at("error_integral");
  s.prev_error = j.at("prev_error");
  for (const auto& r : j.at("history")) {
    s.history.push_back({r.at(0).get<std::size_t>(), r.at(1).get<double>(), r.at(2).get<double>(),
                         r.at(3).get<double>()});
  }
  return s;
}

}  // namespace

void save_checkpoint(const model::ModelParams& params, const std::filesystem::path& manifest) {
  auto bin = manifest;
  bin.replace_extension(".bin");
  const auto list = params.parameters();
  const bool has_moments = params.adam.first.size() == list.size();

  std::vector<unsigned char> bytes;
  nlohmann::json entries = nlohmann::json::array();
  std::size_t offset = 0;
  for (const auto& p : list) {
    io::append_f64_le(bytes, p.tensor.values());
    entries.push_back({{"name", p.name}, {"shape", p.tensor.shape()}, {"offset", offset}});
    offset += p.tensor.numel();
  }
  if (has_moments) {
    for (const auto& m : params.adam.first) io::append_f64_le(bytes, m);
    for (const auto& v : params.adam.second) io::append_f64_le(bytes, v);
  }
  io::write_bytes(bin, bytes);

  const auto& c = params.config;
  nlohmann::json j;
  j["format"] = "deepselective-checkpoint";
  j["version"] = 1;
  j["config"] = {{"num_features", c.num_features}, {"latent_dim", c.latent_dim},
                 {"heads", c.heads},               {"encoder_layers", c.encoder_layers},
                 {"decoder_layers", c.decoder_layers}, {"ff_multiplier", c.ff_multiplier},
                 {"head_hidden", c.head_hidden}};
  j["feature_names"] = params.feature_names;
  j["pid"] = pid_json(params.pid);
  j["optimizer"] = {{"step", params.adam.step}, {"moments", has_moments}};
  j["parameters"] = entries;
  j["parameter_values"] = offset;
  j["payload_file"] = bin.filename().string();
  io::write_text(manifest, j.dump(2) + "\n");
}

model::ModelParams load_checkpoint(const std::filesystem::path& manifest) {
  if (!std::filesystem::exists(manifest)) {
    throw ArtifactError("checkpoint not found: " + manifest.string());
  }
  try {
    const auto j = nlohmann::json::parse(io::read_text(manifest));
    if (j.value("format", "") != "deepselective-checkpoint") {
      throw ArtifactError(manifest.string() + " is not a checkpoint manifest");
    }
    const auto& jc = j.at("config");
    model::ModelConfig c;
    c.num_features = jc.at("num_features");
    c.latent_dim = jc.at("latent_dim");
    c.heads = jc.at("heads");
    c.encoder_layers = jc.at("encoder_layers");
    c.decoder_layers = jc.at("decoder_layers");
    c.ff_multiplier = jc.at("ff_multiplier");
    c.head_hidden = jc.at("head_hidden");

    auto pid = pid_from_json(j.at("pid"));
    auto params = model::ModelParams::init(c, pid.config, 0);
    params.pid = std::move(pid);
    params.feature_names = j.at("feature_names").get<std::vector<std::string>>();

    const auto values =
        io::decode_f64_le(io::read_bytes(manifest.parent_path() / j.at("payload_file").get<std::string>()));
    auto list = params.parameters();
    const auto& entries = j.at("parameters");
    if (entries.size() != list.size()) throw ArtifactError("checkpoint parameter count mismatch");
    std::size_t total = 0;
    for (std::size_t k = 0; k < list.size(); ++k) {
      const auto& e = entries[k];
      auto& t = list[k].tensor;
      if (e.at("name").get<std::string>() != list[k].name ||
          e.at("shape").get<Shape>() != t.shape()) {
        throw ArtifactError("checkpoint entry " + e.at("name").get<std::string>() +
                            " does not match the model layout");
      }
      const std::size_t off = e.at("offset");
      if (off + t.numel() > values.size()) throw ArtifactError("checkpoint payload truncated");
      std::copy_n(values.begin() + static_cast<std::ptrdiff_t>(off), t.numel(), t.mutable_values().begin());
      total += t.numel();
    }
    params.adam.step = j.at("optimizer").at("step");
    const bool moments = j.at("optimizer").at("moments");
    const std::size_t expected = moments ? 3 * total : total;
    if (values.size() != expected) throw ArtifactError("checkpoint payload size mismatch");
    if (moments) {
      std::size_t pos = total;
      for (auto* bank : {&params.adam.first, &params.adam.second}) {
        for (const auto& p : list) {
          bank->emplace_back(values.begin() + static_cast<std::ptrdiff_t>(pos),
                             values.begin() + static_cast<std::ptrdiff_t>(pos + p.tensor.numel()));
          pos += p.tensor.numel();
        }
      }
    }
    return params;
  } catch (const nlohmann::json::exception& e) {
    throw ArtifactError("malformed checkpoint " + manifest.string() + ": " + e.what());
  } catch (const ParameterError& e) {
    throw ArtifactError("invalid checkpoint config: " + std::string(e.what()));
  }
}

}  // namespace deepselective
