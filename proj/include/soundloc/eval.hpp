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
#include "soundloc/gp.hpp"
#include "soundloc/localize.hpp"
#include "soundloc/nmf.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace soundloc {

double circular_error(const Location& estimate, const Location& truth);

struct Summary {
  double cep = 0.0;   // 50th percentile
  double mean = 0.0;
  double ce95 = 0.0;  // 95th percentile
};

struct EvalReport {
  std::string method;
  std::vector<double> ces;
  Summary summary;
  std::vector<std::pair<double, double>> ecdf;  // (ce, fraction of CEs <= ce), sorted
};

/// p-th percentile (p in [0, 1]) of sorted data, linear interpolation between closest ranks.
double percentile(const std::vector<double>& sorted, double p);

/// CEP / mean / CE95 and the eCDF of a list of circular errors. Throws on an empty list.
EvalReport summarize(const std::vector<double>& ces);

/// Fraction of errors <= x under the report's eCDF step function.
double ecdf_at(const EvalReport& report, double x);

enum class Localization { regression, likelihood, likelihood_prior };

struct Method {
  FeatureKind feature = FeatureKind::snmf_wf;
  Localization localization = Localization::likelihood;

  std::string name() const;
  /// "<feature>:<regression|likelihood|likelihood+prior>"
  static Method parse(std::string_view text);
  friend bool operator==(const Method&, const Method&) = default;
};

/// The 3 x 3 feature-by-localization grid.
std::vector<Method> all_methods();

struct PriorSpec {
  Location drift{5.0, 5.0};
  double std_dev = 5.0;
};

struct EvalConfig {
  StftParams stft;
  NmfConfig nmf;
  GpOptions gp;
  RoomGrid grid;
  PriorSpec prior;
  double window_seconds = 1.0;
  int mfcc_coeffs = 20;
  int eval_windows = 0;  // windows per location evaluated; 0 = all
  std::uint64_t seed = 0;
  int jobs = 1;
};

/// Per-window features at every location: windows[kind][location] is (windows x dim).
struct FeatureBank {
  std::vector<Location> locations;
  std::map<FeatureKind, std::vector<Eigen::MatrixXd>> windows;

  const Eigen::MatrixXd& at(FeatureKind kind, std::size_t location) const;
  /// Mean feature of each location, (locations x dim).
  Eigen::MatrixXd location_means(FeatureKind kind) const;
  std::size_t window_count() const;
};

/// Supplies the analysis windows recorded at a location.
using WindowSource = std::function<std::vector<AudioClip>(std::size_t location)>;

/// Computes the requested feature kinds for every window; one NMF decomposition serves both NMF kinds.
FeatureBank extract_bank(const std::vector<Location>& locations, const WindowSource& windows,
                         const NmfModel& model, const std::vector<FeatureKind>& kinds, const EvalConfig& cfg);

/// Features of a single clip.
FeatureVector extract(const AudioClip& clip, const NmfModel& model, FeatureKind kind, const EvalConfig& cfg,
                      std::uint64_t seed);

std::vector<FeatureKind> required_kinds(const std::vector<Method>& methods);

/// Locations used for training when `held_out` is evaluated.
std::vector<std::size_t> fold_training_indices(std::size_t n, std::size_t held_out);

/// Per-fold hook for auditing training sets: (held_out, training indices).
using FoldObserver = std::function<void(std::size_t, const std::vector<std::size_t>&)>;

/// Leave-one-location-out evaluation on precomputed features. GPs are trained on the location means of
/// `train` without the held-out location; each held-out window of every bank in `evals` is localized.
/// Returns reports[eval bank][method].
std::vector<std::vector<EvalReport>> loocv_features(const FeatureBank& train,
                                                    const std::vector<const FeatureBank*>& evals,
                                                    const std::vector<Method>& methods, const EvalConfig& cfg,
                                                    const FoldObserver& observer = {});

struct ManifestEntry {
  std::string wav_path;
  Location location = Location::Zero();
  std::string role = "train";  // train | isolated
  std::optional<int> source_id;
};

struct DatasetManifest {
  std::vector<ManifestEntry> entries;
  int sample_rate = 48000;

  std::vector<const ManifestEntry*> training() const;
  /// Isolated entries ordered by source id.
  std::vector<const ManifestEntry*> isolated() const;
};

/// Trains landmark bases from isolated recordings ordered by source id.
NmfModel train_nmf(const std::vector<AudioClip>& isolated, const EvalConfig& cfg);
NmfModel train_nmf(const DatasetManifest& manifest, const EvalConfig& cfg);

/// Full recording made at a location.
using RecordingSource = std::function<AudioClip(std::size_t location)>;

/// Cuts each recording into windows (at most max_windows when positive), optionally mixes every window
/// with noise at snr_db, and extracts features.
FeatureBank recording_bank(const std::vector<Location>& locations, const RecordingSource& recording,
                           const NmfModel& model, const std::vector<FeatureKind>& kinds, const EvalConfig& cfg,
                           const AudioClip* noise = nullptr, std::optional<double> snr_db = std::nullopt,
                           int max_windows = 0);

/// recording_bank over the manifest's training recordings.
FeatureBank manifest_bank(const DatasetManifest& manifest, const NmfModel& model,
                          const std::vector<FeatureKind>& kinds, const EvalConfig& cfg,
                          const AudioClip* noise = nullptr, std::optional<double> snr_db = std::nullopt,
                          int max_windows = 0);

/// Mixes a window with a seed-selected segment of the noise clip at the given SNR.
AudioClip noisy_window(const AudioClip& window, const AudioClip& noise, double snr_db, std::uint64_t seed);

std::vector<EvalReport> loocv(const DatasetManifest& manifest, const std::vector<Method>& methods,
                              const EvalConfig& cfg);

struct SweepPoint {
  double snr_db = 0.0;
  std::vector<EvalReport> reports;  // one per method
};

/// -60 .. +18 dB in 3 dB steps.
std::vector<double> default_snrs();

std::vector<SweepPoint> snr_sweep(const DatasetManifest& manifest, const AudioClip& noise,
                                  const std::vector<Method>& methods, const std::vector<double>& snrs,
                                  const EvalConfig& cfg);

/// First SNR, scanning from the highest down, whose CEP reaches `fraction` of the worst CEP on the curve.
double saturation_snr(const std::vector<std::pair<double, double>>& snr_cep, double fraction = 0.9);

}  // namespace soundloc
