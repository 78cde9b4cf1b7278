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

#include "soundloc/eval.hpp"

#include "soundloc/parallel.hpp"
#include "soundloc/random.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <stdexcept>

namespace soundloc {

double circular_error(const Location& estimate, const Location& truth) { return (estimate - truth).norm(); }

double percentile(const std::vector<double>& sorted, double p) {
  if (sorted.empty()) throw std::invalid_argument("percentile: empty data");
  const double pos = std::clamp(p, 0.0, 1.0) * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

EvalReport summarize(const std::vector<double>& ces) {
  if (ces.empty()) throw std::invalid_argument("summarize: no circular errors");
  EvalReport r;
  r.ces = ces;
  std::vector<double> sorted = ces;
  std::sort(sorted.begin(), sorted.end());
  r.summary.cep = percentile(sorted, 0.5);
  r.summary.ce95 = percentile(sorted, 0.95);
  r.summary.mean = std::accumulate(sorted.begin(), sorted.end(), 0.0) / static_cast<double>(sorted.size());
  const double n = static_cast<double>(sorted.size());
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    // Collapse ties so each abscissa appears once with its right-continuous value.
    if (i + 1 < sorted.size() && sorted[i + 1] == sorted[i]) continue;
    r.ecdf.emplace_back(sorted[i], static_cast<double>(i + 1) / n);
  }
  return r;
}

double ecdf_at(const EvalReport& report, double x) {
  double f = 0.0;
  for (const auto& [ce, frac] : report.ecdf) {
    if (ce > x) break;
    f = frac;
  }
  return f;
}

std::string Method::name() const {
  std::string loc;
  switch (localization) {
    case Localization::regression: loc = "regression"; break;
    case Localization::likelihood: loc = "likelihood"; break;
    case Localization::likelihood_prior: loc = "likelihood+prior"; break;
  }
  return std::string(to_string(feature)) + ":" + loc;
}

Method Method::parse(std::string_view text) {
  const auto colon = text.find(':');
  if (colon == std::string_view::npos) throw std::invalid_argument("method must look like feature:localization");
  Method m;
  m.feature = parse_feature_kind(text.substr(0, colon));
  const auto loc = text.substr(colon + 1);
  if (loc == "regression") m.localization = Localization::regression;
  else if (loc == "likelihood") m.localization = Localization::likelihood;
  else if (loc == "likelihood+prior") m.localization = Localization::likelihood_prior;
  else throw std::invalid_argument("unknown localization: " + std::string(loc));
  return m;
}

std::vector<Method> all_methods() {
  std::vector<Method> out;
  for (auto loc : {Localization::regression, Localization::likelihood, Localization::likelihood_prior})
    for (auto kind : {FeatureKind::mfcc, FeatureKind::snmf_act, FeatureKind::snmf_wf}) out.push_back({kind, loc});
  return out;
}

const Eigen::MatrixXd& FeatureBank::at(FeatureKind kind, std::size_t location) const {
  const auto it = windows.find(kind);
  if (it == windows.end()) throw std::invalid_argument("FeatureBank: kind not extracted: " + std::string(to_string(kind)));
  return it->second.at(location);
}

Eigen::MatrixXd FeatureBank::location_means(FeatureKind kind) const {
  const auto it = windows.find(kind);
  if (it == windows.end() || it->second.empty()) throw std::invalid_argument("FeatureBank: kind not extracted");
  Eigen::MatrixXd out(static_cast<Eigen::Index>(it->second.size()), it->second.front().cols());
  for (std::size_t i = 0; i < it->second.size(); ++i)
    out.row(static_cast<Eigen::Index>(i)) = it->second[i].colwise().mean();
  return out;
}

std::size_t FeatureBank::window_count() const {
  if (windows.empty()) return 0;
  std::size_t n = 0;
  for (const auto& m : windows.begin()->second) n += static_cast<std::size_t>(m.rows());
  return n;
}

std::vector<FeatureKind> required_kinds(const std::vector<Method>& methods) {
  std::set<FeatureKind> kinds;
  for (const auto& m : methods) kinds.insert(m.feature);
  return {kinds.begin(), kinds.end()};
}

namespace {

bool needs_nmf(const std::vector<FeatureKind>& kinds) {
  return std::any_of(kinds.begin(), kinds.end(), [](FeatureKind k) { return k != FeatureKind::mfcc; });
}

std::map<FeatureKind, Eigen::VectorXd> window_features(const AudioClip& clip, const NmfModel& model,
                                                       const std::vector<FeatureKind>& kinds,
                                                       const EvalConfig& cfg, std::uint64_t seed) {
  const Spectrogram spec = stft(clip, cfg.stft);
  std::map<FeatureKind, Eigen::VectorXd> out;
  if (needs_nmf(kinds)) {
    const Decomposition dec = decompose(spec, model, seed);
    for (FeatureKind k : kinds) {
      if (k == FeatureKind::snmf_wf) out[k] = wiener_features(dec).values;
      if (k == FeatureKind::snmf_act) out[k] = activation_features(dec).values;
    }
  }
  for (FeatureKind k : kinds)
    if (k == FeatureKind::mfcc) out[k] = mfcc(spec, cfg.mfcc_coeffs).values;
  return out;
}

}  // namespace

FeatureVector extract(const AudioClip& clip, const NmfModel& model, FeatureKind kind, const EvalConfig& cfg,
                      std::uint64_t seed) {
  return {window_features(clip, model, {kind}, cfg, seed).at(kind), kind};
}

FeatureBank extract_bank(const std::vector<Location>& locations, const WindowSource& windows,
                         const NmfModel& model, const std::vector<FeatureKind>& kinds, const EvalConfig& cfg) {
  FeatureBank bank;
  bank.locations = locations;
  for (FeatureKind k : kinds) bank.windows[k].resize(locations.size());
  parallel_for(locations.size(), cfg.jobs, [&](std::size_t i) {
    const std::vector<AudioClip> clips = windows(i);
    if (clips.empty()) throw std::invalid_argument("extract_bank: location " + std::to_string(i) + " has no windows");
    for (std::size_t w = 0; w < clips.size(); ++w) {
      auto feats = window_features(clips[w], model, kinds, cfg, derive_seed(cfg.seed, {0xFEA7, i, w}));
      for (auto& [kind, values] : feats) {
        auto& mat = bank.windows.at(kind)[i];
        if (w == 0) mat.resize(static_cast<Eigen::Index>(clips.size()), values.size());
        mat.row(static_cast<Eigen::Index>(w)) = values.transpose();
      }
    }
  });
  return bank;
}

std::vector<std::size_t> fold_training_indices(std::size_t n, std::size_t held_out) {
  std::vector<std::size_t> idx;
  idx.reserve(n ? n - 1 : 0);
  for (std::size_t i = 0; i < n; ++i)
    if (i != held_out) idx.push_back(i);
  return idx;
}

namespace {

struct FoldModels {
  std::optional<PredictiveField> field;
  std::optional<DirectRegression> regression;
};

Eigen::MatrixXd select_rows(const Eigen::MatrixXd& m, const std::vector<std::size_t>& rows) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), m.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) out.row(static_cast<Eigen::Index>(r)) = m.row(static_cast<Eigen::Index>(rows[r]));
  return out;
}

}  // namespace

std::vector<std::vector<EvalReport>> loocv_features(const FeatureBank& train,
                                                    const std::vector<const FeatureBank*>& evals,
                                                    const std::vector<Method>& methods, const EvalConfig& cfg,
                                                    const FoldObserver& observer) {
  const std::size_t n = train.locations.size();
  if (n < 2) throw std::invalid_argument("loocv: at least two locations are required");
  if (methods.empty()) throw std::invalid_argument("loocv: no methods selected");
  for (const FeatureBank* e : evals)
    if (e->locations.size() != n) throw std::invalid_argument("loocv: evaluation bank has a different location set");

  const std::vector<FeatureKind> kinds = required_kinds(methods);
  Eigen::MatrixXd all_locations(static_cast<Eigen::Index>(n), 2);
  for (std::size_t i = 0; i < n; ++i) all_locations.row(static_cast<Eigen::Index>(i)) = train.locations[i].transpose();
  std::map<FeatureKind, Eigen::MatrixXd> means;
  for (FeatureKind k : kinds) means[k] = train.location_means(k);

  // ces[fold][eval][method]
  std::vector<std::vector<std::vector<std::vector<double>>>> per_fold(n);
  parallel_for(n, cfg.jobs, [&](std::size_t fold) {
    const Location truth = train.locations[fold];
    try {
      const std::vector<std::size_t> idx = fold_training_indices(n, fold);
      if (observer) observer(fold, idx);
      const Eigen::MatrixXd locs = select_rows(all_locations, idx);

      std::map<FeatureKind, FoldModels> models;
      for (FeatureKind k : kinds) {
        const Eigen::MatrixXd x = select_rows(means.at(k), idx);
        auto uses = [&](auto pred) { return std::any_of(methods.begin(), methods.end(), pred); };
        if (uses([&](const Method& m) { return m.feature == k && m.localization != Localization::regression; })) {
          std::vector<GpModel> gps;
          for (Eigen::Index d = 0; d < x.cols(); ++d) gps.push_back(fit(locs, x.col(d), cfg.gp));
          models[k].field = predict_field(gps, cfg.grid);
        }
        if (uses([&](const Method& m) { return m.feature == k && m.localization == Localization::regression; })) {
          models[k].regression = fit_direct_regression(x, locs, cfg.gp);
        }
      }

      const GaussianPrior prior = imu_like_prior(truth, cfg.prior.drift, cfg.prior.std_dev);
      auto& out = per_fold[fold];
      out.assign(evals.size(), std::vector<std::vector<double>>(methods.size()));
      for (std::size_t e = 0; e < evals.size(); ++e) {
        for (std::size_t mi = 0; mi < methods.size(); ++mi) {
          const Method& m = methods[mi];
          const Eigen::MatrixXd& feats = evals[e]->at(m.feature, fold);
          Eigen::Index rows = feats.rows();
          if (cfg.eval_windows > 0) rows = std::min<Eigen::Index>(rows, cfg.eval_windows);
          for (Eigen::Index w = 0; w < rows; ++w) {
            const FeatureVector f{feats.row(w).transpose(), m.feature};
            Location estimate;
            if (m.localization == Localization::regression) {
              estimate = predict_location(*models[m.feature].regression, f.values);
            } else {
              const LikelihoodMap lik = likelihood_map(f, *models[m.feature].field);
              estimate = m.localization == Localization::likelihood ? argmax_ml(lik)
                                                                    : argmax(posterior_map(lik, prior));
            }
            out[e][mi].push_back(circular_error(estimate, truth));
          }
        }
      }
    } catch (const std::exception& ex) {
      throw std::runtime_error("loocv fold " + std::to_string(fold) + " at (" + std::to_string(truth.x()) + ", " +
                               std::to_string(truth.y()) + "): " + ex.what());
    }
  });

  std::vector<std::vector<EvalReport>> reports(evals.size());
  for (std::size_t e = 0; e < evals.size(); ++e) {
    for (std::size_t mi = 0; mi < methods.size(); ++mi) {
      std::vector<double> pooled;
      for (std::size_t fold = 0; fold < n; ++fold) {
        const auto& c = per_fold[fold][e][mi];
        pooled.insert(pooled.end(), c.begin(), c.end());
      }
      EvalReport r = summarize(pooled);
      r.method = methods[mi].name();
      reports[e].push_back(std::move(r));
    }
  }
  return reports;
}

std::vector<const ManifestEntry*> DatasetManifest::training() const {
  std::vector<const ManifestEntry*> out;
  for (const auto& e : entries)
    if (e.role == "train") out.push_back(&e);
  return out;
}

std::vector<const ManifestEntry*> DatasetManifest::isolated() const {
  std::vector<const ManifestEntry*> out;
  for (const auto& e : entries)
    if (e.role == "isolated") out.push_back(&e);
  std::stable_sort(out.begin(), out.end(),
                   [](const ManifestEntry* a, const ManifestEntry* b) { return a->source_id.value_or(0) < b->source_id.value_or(0); });
  return out;
}

NmfModel train_nmf(const std::vector<AudioClip>& isolated, const EvalConfig& cfg) {
  if (isolated.empty()) throw std::invalid_argument("train: no isolated recordings");
  std::vector<Spectrogram> specs;
  for (const AudioClip& clip : isolated) specs.push_back(stft(clip, cfg.stft));
  return train_model(specs, cfg.nmf, derive_seed(cfg.seed, {0xB45E}));
}

NmfModel train_nmf(const DatasetManifest& manifest, const EvalConfig& cfg) {
  std::vector<AudioClip> clips;
  for (const ManifestEntry* e : manifest.isolated()) {
    clips.push_back(read_wav(e->wav_path));
    if (clips.back().sample_rate != manifest.sample_rate) {
      throw std::invalid_argument("sample rate mismatch in " + e->wav_path + " (resampling is not supported)");
    }
  }
  return train_nmf(clips, cfg);
}

AudioClip noisy_window(const AudioClip& window, const AudioClip& noise, double snr_db, std::uint64_t seed) {
  if (noise.size() < window.size()) throw std::invalid_argument("noise clip is shorter than an analysis window");
  const auto span = static_cast<std::uint64_t>(noise.size() - window.size() + 1);
  const auto offset = static_cast<Eigen::Index>(mix64(seed) % span);
  return mix_at_snr(window, AudioClip{noise.samples.segment(offset, window.size()), noise.sample_rate}, snr_db);
}

FeatureBank recording_bank(const std::vector<Location>& locations, const RecordingSource& recording,
                           const NmfModel& model, const std::vector<FeatureKind>& kinds, const EvalConfig& cfg,
                           const AudioClip* noise, std::optional<double> snr_db, int max_windows) {
  WindowSource source = [&](std::size_t i) {
    std::vector<AudioClip> windows = window_clip(recording(i), cfg.window_seconds);
    if (max_windows > 0 && windows.size() > static_cast<std::size_t>(max_windows)) windows.resize(max_windows);
    if (noise != nullptr && snr_db) {
      for (std::size_t w = 0; w < windows.size(); ++w)
        windows[w] = noisy_window(windows[w], *noise, *snr_db, derive_seed(cfg.seed, {0x0153, i, w}));
    }
    return windows;
  };
  return extract_bank(locations, source, model, kinds, cfg);
}

FeatureBank manifest_bank(const DatasetManifest& manifest, const NmfModel& model,
                          const std::vector<FeatureKind>& kinds, const EvalConfig& cfg, const AudioClip* noise,
                          std::optional<double> snr_db, int max_windows) {
  const auto train = manifest.training();
  if (train.size() < 2) throw std::invalid_argument("dataset needs at least two training locations");
  std::vector<Location> locations;
  for (const ManifestEntry* e : train) locations.push_back(e->location);
  const RecordingSource recording = [&](std::size_t i) {
    AudioClip clip = read_wav(train[i]->wav_path);
    if (clip.sample_rate != manifest.sample_rate) {
      throw std::invalid_argument("sample rate mismatch in " + train[i]->wav_path);
    }
    return clip;
  };
  return recording_bank(locations, recording, model, kinds, cfg, noise, snr_db, max_windows);
}

std::vector<EvalReport> loocv(const DatasetManifest& manifest, const std::vector<Method>& methods,
                              const EvalConfig& cfg) {
  const NmfModel model = train_nmf(manifest, cfg);
  const FeatureBank bank = manifest_bank(manifest, model, required_kinds(methods), cfg);
  return loocv_features(bank, {&bank}, methods, cfg).front();
}

std::vector<double> default_snrs() {
  std::vector<double> out;
  for (int s = -60; s <= 18; s += 3) out.push_back(s);
  return out;
}

std::vector<SweepPoint> snr_sweep(const DatasetManifest& manifest, const AudioClip& noise,
                                  const std::vector<Method>& methods, const std::vector<double>& snrs,
                                  const EvalConfig& cfg) {
  if (noise.sample_rate != manifest.sample_rate) throw std::invalid_argument("noise sample rate differs from dataset");
  if (!(rms(noise) > 0)) throw std::invalid_argument("noise clip is silent");
  const NmfModel model = train_nmf(manifest, cfg);
  const auto kinds = required_kinds(methods);
  const FeatureBank clean = manifest_bank(manifest, model, kinds, cfg);
  std::vector<FeatureBank> noisy;
  noisy.reserve(snrs.size());
  for (double snr : snrs) noisy.push_back(manifest_bank(manifest, model, kinds, cfg, &noise, snr, cfg.eval_windows));
  std::vector<const FeatureBank*> evals;
  for (const auto& b : noisy) evals.push_back(&b);
  auto reports = loocv_features(clean, evals, methods, cfg);
  std::vector<SweepPoint> out;
  for (std::size_t i = 0; i < snrs.size(); ++i) out.push_back({snrs[i], std::move(reports[i])});
  return out;
}

double saturation_snr(const std::vector<std::pair<double, double>>& snr_cep, double fraction) {
  if (snr_cep.empty()) throw std::invalid_argument("saturation_snr: empty curve");
  auto curve = snr_cep;
  std::sort(curve.begin(), curve.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  // Chance level is the worst CEP on the curve. That is the lowest-SNR value when the curve is
  // monotone; under leave-one-out the far low end can improve again, because out-of-range
  // features are drawn to the variance peak the held-out location leaves in the GP.
  double chance = 0.0;
  for (const auto& p : curve) chance = std::max(chance, p.second);
  for (const auto& [snr, cep] : curve)
    if (cep >= fraction * chance) return snr;
  return curve.back().first;
}

}  // namespace soundloc
