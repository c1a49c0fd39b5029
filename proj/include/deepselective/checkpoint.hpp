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

// Checkpoint = JSON manifest (config, names, shapes, offsets, controller and
// optimizer scalars) + a little-endian float64 payload next to it (<stem>.bin).

#pragma once

#include <filesystem>

#include "deepselective/model.hpp"

namespace deepselective {

void save_checkpoint(const model::ModelParams& params, const std::filesystem::path& manifest);
// Throws ArtifactError when the manifest or payload is missing or inconsistent.
model::ModelParams load_checkpoint(const std::filesystem::path& manifest);

}  // namespace deepselective
