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

#include "soundloc/dsp.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <vector>

namespace soundloc {

struct NmfConfig {
  int basis_per_source = 5;  // L_k
  int noise_bases = 4;       // L_0
  int iterations = 100;
  double floor = 1e-12;
  int noise_warmup = 0;  // leading iterations with the noise bases held fixed
};

/// Nonnegative spectral templates (F x L) of one source; source_id 0 is the noise.
struct BasisMatrix {
  Eigen::MatrixXd w;
  int source_id = 0;

  Eigen::Index bins() const { return w.rows(); }
  Eigen::Index size() const { return w.cols(); }
};

/// Frozen landmark dictionaries plus the settings used to build and apply them.
struct NmfModel {
  std::vector<BasisMatrix> landmarks;  // source ids 1..K
  NmfConfig config;
  StftParams stft;
  int sample_rate = 48000;

  int sources() const { return static_cast<int>(landmarks.size()); }
  Eigen::Index bins() const { return landmarks.empty() ? 0 : landmarks.front().bins(); }
  void validate() const;
};

/// Supervised factorization of one mixture. Index 0 of bases/activations is the noise.
struct Decomposition {
  std::vector<BasisMatrix> bases;
  std::vector<Eigen::MatrixXd> activations;
  Spectrogram mixture;
  std::vector<double> objective;  // D_IS after init and after every sweep, when traced

  int sources() const { return static_cast<int>(bases.size()) - 1; }
  /// W_k H_k
  Eigen::MatrixXd source_variance(int k) const;
  /// sum over k = 0..K of W_k H_k
  Eigen::MatrixXd model_variance() const;
};

struct NmfFit {
  Eigen::MatrixXd w;
  Eigen::MatrixXd h;
  std::vector<double> objective;
};

/// Unsupervised IS-NMF of a power matrix with uniform (0, 1] initialization.
NmfFit fit_is_nmf(const Eigen::MatrixXd& power, int rank, int iterations, std::uint64_t seed,
                  double floor = 1e-12, bool trace = false);

/// Landmark templates from an isolated recording; columns normalized to unit l1.
BasisMatrix train_basis(const Spectrogram& isolated, int rank, int iterations, std::uint64_t seed,
                        double floor = 1e-12);

/// Trains one BasisMatrix per isolated spectrogram (source ids 1..K).
NmfModel train_model(const std::vector<Spectrogram>& isolated, const NmfConfig& config,
                     std::uint64_t seed);

/// Landmark bases fixed; noise bases and all activations estimated on V = |Y|^2.
Decomposition decompose(const Spectrogram& mixture, const NmfModel& model, std::uint64_t seed,
                        bool trace = false);

/// Wiener estimate of source k (0 = noise) from the mixture.
Spectrogram wiener_extract(const Decomposition& dec, int k);

/// psi_k = 0.5 ln(sum |s_k|^2) for k = 1..K.
FeatureVector wiener_features(const Decomposition& dec);

/// ln(mean over t of sum_l h_{k,lt}) for k = 1..K.
FeatureVector activation_features(const Decomposition& dec);

FeatureVector extract_features(const Spectrogram& mixture, const NmfModel& model, std::uint64_t seed);
FeatureVector extract_activation_features(const Spectrogram& mixture, const NmfModel& model,
                                          std::uint64_t seed);

}  // namespace soundloc
