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

#include <Eigen/Core>

#include <filesystem>
#include <stdexcept>
#include <string>

namespace soundloc {

/// Mono audio buffer. Samples are dimensionless amplitudes.
struct AudioClip {
  Eigen::VectorXd samples;
  int sample_rate = 48000;

  Eigen::Index size() const { return samples.size(); }
  double duration() const { return static_cast<double>(samples.size()) / sample_rate; }

  /// Throws std::invalid_argument on a non-positive rate or non-finite samples.
  void validate() const;
};

/// Root-mean-square amplitude; zero for an empty clip.
double rms(const AudioClip& clip);

/// Reads a mono PCM WAV (16/24/32-bit integer or 32-bit float).
AudioClip read_wav(const std::filesystem::path& path);

/// Writes a mono 32-bit float WAV. Output bytes depend only on the samples and rate.
void write_wav(const std::filesystem::path& path, const AudioClip& clip);

}  // namespace soundloc
