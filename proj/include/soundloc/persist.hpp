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

// File formats: model and manifest JSON, report JSON/CSV, likelihood-map CSV plus sidecar.
// Field names are documented in docs/formats.md.

#include "soundloc/config.hpp"
#include "soundloc/eval.hpp"
#include "soundloc/gp.hpp"
#include "soundloc/localize.hpp"
#include "soundloc/nmf.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace soundloc {

/// Landmark dictionaries plus one spatial GP per landmark feature.
struct TrainedModel {
  NmfModel nmf;
  std::vector<GpModel> gps;
  FeatureKind feature = FeatureKind::snmf_wf;
  RoomGrid grid;
  double window_seconds = 1.0;  // features are computed per window of this length
};

nlohmann::json model_to_json(const TrainedModel& model);
/// Rebuilds the GP solver state from the stored parameters and training data.
TrainedModel model_from_json(const nlohmann::json& doc);
void save_model(const std::filesystem::path& path, const TrainedModel& model);
TrainedModel load_model(const std::filesystem::path& path);

nlohmann::json manifest_to_json(const DatasetManifest& manifest);
/// Relative wav paths are resolved against base_dir.
DatasetManifest manifest_from_json(const nlohmann::json& doc, const std::filesystem::path& base_dir = {});
void save_manifest(const std::filesystem::path& path, const DatasetManifest& manifest);
DatasetManifest load_manifest(const std::filesystem::path& path);

/// Renders the scene into dir: wav/ recordings, noise.wav and manifest.json (relative paths).
DatasetManifest write_dataset(const SceneConfig& scene, const std::filesystem::path& dir, int jobs = 1,
                              double noise_seconds = 30.0);

nlohmann::json report_to_json(const EvalReport& report);
void write_ecdf_csv(const std::filesystem::path& path, const EvalReport& report);

/// Header x,y,log_value; rows in y-major order.
void write_map_csv(const std::filesystem::path& path, const LikelihoodMap& map);
nlohmann::json map_sidecar(const LikelihoodMap& map);

/// Pretty JSON with sorted keys and a trailing newline.
void write_json(const std::filesystem::path& path, const nlohmann::json& doc);
nlohmann::json read_json(const std::filesystem::path& path);

}  // namespace soundloc
