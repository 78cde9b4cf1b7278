// Copyright 2026 The soundloc Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include "soundloc/eval.hpp"
#include "soundloc/sim.hpp"

#include <json.hpp>

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace soundloc {

/// Invalid or malformed experiment configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Everything needed to reproduce simulate -> train -> evaluate -> sweep.
struct ExperimentConfig {
  SceneConfig scene = default_scene();
  EvalConfig eval;
  std::vector<Method> methods{{FeatureKind::snmf_wf, Localization::likelihood}};
  std::vector<double> snrs = default_snrs();
  int sweep_eval_windows = 0;  // 0 = all windows
  std::uint64_t seed = 1;
  int jobs = 0;  // 0 = hardware concurrency

  /// Search grid covering the scene's room.
  RoomGrid grid() const;
  /// eval settings with the grid, seed and job count applied.
  EvalConfig resolved_eval() const;
};

/// Parses and validates a configuration document. Missing keys take the defaults; unknown keys,
/// wrong types and out-of-range values throw ConfigError.
ExperimentConfig parse_config(const nlohmann::json& doc);
ExperimentConfig load_config(const std::filesystem::path& path);
nlohmann::json to_json(const ExperimentConfig& cfg);

}  // namespace soundloc
