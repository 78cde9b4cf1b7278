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

#include "soundloc/audio.hpp"
#include "soundloc/localize.hpp"

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

namespace soundloc {

struct Tone {
  double frequency = 1000.0;  // Hz
  double amplitude = 1.0;     // relative RMS weight
};

struct Band {
  double low = 1000.0;  // Hz
  double high = 2000.0;
  double amplitude = 1.0;  // relative RMS weight
};

/// Long-term spectrum of a stationary landmark: tones with random phase plus band-limited noise.
struct Signature {
  std::vector<Tone> tones;
  std::vector<Band> bands;

  bool empty() const { return tones.empty() && bands.empty(); }
};

/// One landmark type. Several positions model identical emitters (e.g. one fan model per corridor).
struct SourceSpec {
  std::string name;
  std::vector<Location> positions;
  Signature signature;
  double power = 1.0;  // RMS at 1 m, per emitter
};

struct SceneConfig {
  double width = 30.0;  // x extent, m
  double depth = 12.0;  // y extent, m
  std::vector<SourceSpec> sources;
  double grid_spacing = 2.0;
  double window_seconds = 1.0;
  int windows_per_point = 30;
  int sample_rate = 48000;
  double isolated_seconds = 10.0;
  double sensor_noise_rms = 1e-4;
  std::uint64_t seed = 1;

  void validate() const;
  bool contains(const Location& at) const;
};

/// Five landmarks in a 30 x 12 m room with 2 m sampling.
SceneConfig default_scene();

/// Grid nodes {0, s, 2s, ...} x {0, s, ...}, y-major order.
std::vector<Location> grid_locations(const SceneConfig& scene);

/// Free-field 1/d gain with a 0.5 m clamp.
inline double attenuation(double distance) { return 1.0 / std::max(distance, 0.5); }

/// Unit-RMS stationary signal with the signature's spectrum.
AudioClip synthesize_source(const Signature& signature, double duration, int sample_rate, std::uint64_t seed);

/// Pink (1/f) noise, unit RMS.
AudioClip pink_noise(double duration, int sample_rate, std::uint64_t seed);

/// Contribution of landmark k (0-based) at a microphone location.
AudioClip render_source(const SceneConfig& scene, int k, const Location& at, double duration, std::uint64_t seed);

/// Sum of all landmark contributions plus sensor noise.
AudioClip render_mixture(const SceneConfig& scene, const Location& at, double duration, std::uint64_t seed);

/// windows_per_point windows at grid node `node`, each with its own realization.
AudioClip render_node_recording(const SceneConfig& scene, std::size_t node);

/// Landmark k alone, 1 m from its first emitter.
AudioClip isolated_recording(const SceneConfig& scene, int k);

struct SyntheticDataset {
  std::vector<Location> locations;
  std::vector<AudioClip> recordings;  // one per location
  std::vector<AudioClip> isolated;    // one per landmark
};

SyntheticDataset build_dataset(const SceneConfig& scene, int jobs = 1);

}  // namespace soundloc
