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

#include <Eigen/Core>

#include <string>
#include <string_view>
#include <vector>

namespace soundloc {

/// One-sided complex STFT, F = frame_size / 2 + 1 rows by T frames.
struct Spectrogram {
  Eigen::MatrixXcd values;
  int frame_size = 2048;
  int hop = 1024;
  int sample_rate = 48000;

  Eigen::Index bins() const { return values.rows(); }
  Eigen::Index frames() const { return values.cols(); }
  /// |X|^2, elementwise.
  Eigen::MatrixXd power() const { return values.cwiseAbs2(); }
};

enum class FeatureKind { snmf_wf, snmf_act, mfcc };

std::string_view to_string(FeatureKind kind);
FeatureKind parse_feature_kind(std::string_view name);

struct FeatureVector {
  Eigen::VectorXd values;
  FeatureKind kind = FeatureKind::snmf_wf;
};

struct StftParams {
  int frame_size = 2048;
  int hop = 1024;
};

/// Periodic Hann window of length n.
Eigen::VectorXd hann_window(int n);

/// Hann-windowed one-sided STFT with T = floor((len - frame_size) / hop) + 1 frames.
Spectrogram stft(const AudioClip& clip, int frame_size = 2048, int hop = 1024);
inline Spectrogram stft(const AudioClip& clip, const StftParams& p) {
  return stft(clip, p.frame_size, p.hop);
}

/// Non-overlapping consecutive windows; a trailing remainder shorter than one window is dropped.
std::vector<AudioClip> window_clip(const AudioClip& clip, double window_seconds);

struct MelConfig {
  int n_filters = 40;
  double f_min = 0.0;
  double f_max = -1.0;  // <= 0 means Nyquist
  double log_floor = 1e-12;
};

/// Triangular filterbank on the HTK mel scale, n_filters x F.
Eigen::MatrixXd mel_filterbank(int n_bins, int sample_rate, const MelConfig& cfg = {});

/// Orthonormal DCT-II matrix with n_out rows over n_in inputs.
Eigen::MatrixXd dct_matrix(int n_out, int n_in);

/// Per-frame MFCCs (orthonormal DCT-II of floored log mel energies), averaged over frames.
FeatureVector mfcc(const Spectrogram& spec, int n_coeffs = 20, const MelConfig& cfg = {});

/// signal + g * noise[0 .. len), with g chosen so that 20 log10(rms(signal) / rms(g * noise)) = snr_db.
AudioClip mix_at_snr(const AudioClip& signal, const AudioClip& noise, double snr_db);

}  // namespace soundloc
