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

#include "soundloc/nmf.hpp"

#include "soundloc/is_nmf.hpp"
#include "soundloc/random.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace soundloc {

namespace {

Eigen::MatrixXd random_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = uniform_open_closed(rng);
  return m;
}

Eigen::MatrixXd power_of(const Spectrogram& spec, double floor) {
  return spec.power().cwiseMax(floor);
}

void require_energy(const Spectrogram& spec, double floor, const char* who) {
  if (spec.values.size() == 0 || !(spec.power().maxCoeff() > floor)) {
    throw std::invalid_argument(std::string(who) + ": spectrogram has no energy");
  }
}

// Scale random activations so the initial model matches the mean power of V.
// Keeps the updates exactly equivariant under V -> cV.
void match_scale(const Eigen::MatrixXd& v, const Eigen::MatrixXd& w, Eigen::MatrixXd& h) {
  h *= v.mean() / (w * h).mean();
}

}  // namespace

void NmfModel::validate() const {
  if (landmarks.empty()) throw std::invalid_argument("NmfModel: at least one landmark is required");
  for (const auto& b : landmarks) {
    if (b.bins() != bins()) throw std::invalid_argument("NmfModel: inconsistent bin counts");
    if (b.size() < 1) throw std::invalid_argument("NmfModel: empty basis");
  }
}

Eigen::MatrixXd Decomposition::source_variance(int k) const {
  return bases.at(static_cast<std::size_t>(k)).w * activations.at(static_cast<std::size_t>(k));
}

Eigen::MatrixXd Decomposition::model_variance() const {
  Eigen::MatrixXd total = source_variance(0);
  for (int k = 1; k <= sources(); ++k) total += source_variance(k);
  return total;
}

NmfFit fit_is_nmf(const Eigen::MatrixXd& power, int rank, int iterations, std::uint64_t seed,
                  double floor, bool trace) {
  if (rank < 1) throw std::invalid_argument("fit_is_nmf: rank must be >= 1");
  Rng rng(seed);
  Eigen::MatrixXd w = random_matrix(power.rows(), rank, rng);
  Eigen::MatrixXd h = random_matrix(rank, power.cols(), rng);
  match_scale(power, w, h);

  IsNmfSolver<double> solver(power, std::move(w), std::move(h), 0, rank, floor);
  NmfFit fit;
  if (trace) fit.objective.push_back(solver.objective());
  for (int it = 0; it < iterations; ++it) {
    solver.step();
    if (trace) fit.objective.push_back(solver.objective());
  }
  fit.w = solver.w();
  fit.h = solver.h();
  return fit;
}

BasisMatrix train_basis(const Spectrogram& isolated, int rank, int iterations, std::uint64_t seed,
                        double floor) {
  require_energy(isolated, floor, "train_basis");
  NmfFit fit = fit_is_nmf(power_of(isolated, floor), rank, iterations, seed, floor);
  const Eigen::RowVectorXd norms = fit.w.colwise().sum();
  BasisMatrix basis;
  basis.w = (fit.w.array().rowwise() / norms.array()).matrix().cwiseMax(floor);
  return basis;
}

NmfModel train_model(const std::vector<Spectrogram>& isolated, const NmfConfig& config,
                     std::uint64_t seed) {
  if (isolated.empty()) throw std::invalid_argument("train_model: no isolated recordings");
  NmfModel model;
  model.config = config;
  model.stft = {isolated.front().frame_size, isolated.front().hop};
  model.sample_rate = isolated.front().sample_rate;
  for (std::size_t k = 0; k < isolated.size(); ++k) {
    const auto& spec = isolated[k];
    if (spec.frame_size != model.stft.frame_size || spec.hop != model.stft.hop ||
        spec.sample_rate != model.sample_rate) {
      throw std::invalid_argument("train_model: isolated recordings use different STFT settings");
    }
    BasisMatrix b = train_basis(spec, config.basis_per_source, config.iterations,
                                derive_seed(seed, {k + 1}), config.floor);
    b.source_id = static_cast<int>(k + 1);
    model.landmarks.push_back(std::move(b));
  }
  model.validate();
  return model;
}

Decomposition decompose(const Spectrogram& mixture, const NmfModel& model, std::uint64_t seed,
                        bool trace) {
  model.validate();
  if (mixture.bins() != model.bins()) {
    throw std::invalid_argument("decompose: mixture has " + std::to_string(mixture.bins()) +
                                " bins, model expects " + std::to_string(model.bins()));
  }
  const double floor = model.config.floor;
  require_energy(mixture, floor, "decompose");
  const Eigen::MatrixXd v = power_of(mixture, floor);
  const Eigen::Index n_bins = v.rows();
  const Eigen::Index n_frames = v.cols();
  const int n_noise = model.config.noise_bases;

  // Column layout: landmark 1..K first (fixed), noise bases last (free).
  Eigen::Index n_fixed = 0;
  for (const auto& b : model.landmarks) n_fixed += b.size();
  const Eigen::Index n_cols = n_fixed + n_noise;

  Rng rng(seed);
  Eigen::MatrixXd w(n_bins, n_cols);
  Eigen::Index col = 0;
  for (const auto& b : model.landmarks) {
    w.middleCols(col, b.size()) = b.w;
    col += b.size();
  }
  if (n_noise > 0) {
    Eigen::MatrixXd w0 = random_matrix(n_bins, n_noise, rng);
    w0.array().rowwise() /= w0.colwise().sum().array();
    w.rightCols(n_noise) = w0;
  }
  Eigen::MatrixXd h = random_matrix(n_cols, n_frames, rng);
  match_scale(v, w, h);

  const int warmup = std::clamp(model.config.noise_warmup, 0, model.config.iterations);
  IsNmfSolver<double> solver(v, std::move(w), std::move(h), n_fixed, n_noise, floor);
  Decomposition dec;
  if (trace) dec.objective.push_back(solver.objective());
  for (int it = 0; it < model.config.iterations; ++it) {
    solver.step(it >= warmup);
    if (trace) dec.objective.push_back(solver.objective());
  }

  dec.mixture = mixture;
  dec.bases.reserve(model.landmarks.size() + 1);
  dec.activations.reserve(model.landmarks.size() + 1);
  dec.bases.push_back(BasisMatrix{solver.w().rightCols(n_noise), 0});
  dec.activations.push_back(solver.h().bottomRows(n_noise));
  col = 0;
  for (const auto& b : model.landmarks) {
    dec.bases.push_back(b);
    dec.activations.push_back(solver.h().middleRows(col, b.size()));
    col += b.size();
  }
  return dec;
}

Spectrogram wiener_extract(const Decomposition& dec, int k) {
  if (k < 0 || k > dec.sources()) throw std::out_of_range("wiener_extract: source index out of range");
  const Eigen::ArrayXXd gain = dec.source_variance(k).array() / dec.model_variance().array();
  Spectrogram out = dec.mixture;
  out.values.array() *= gain.cast<std::complex<double>>();
  return out;
}

FeatureVector wiener_features(const Decomposition& dec) {
  const Eigen::ArrayXXd total = dec.model_variance().array();
  const Eigen::ArrayXXd power = dec.mixture.power().array();
  FeatureVector f{Eigen::VectorXd(dec.sources()), FeatureKind::snmf_wf};
  for (int k = 1; k <= dec.sources(); ++k) {
    const Eigen::ArrayXXd gain = dec.source_variance(k).array() / total;
    f.values[k - 1] = 0.5 * std::log((gain.square() * power).sum());
  }
  return f;
}

FeatureVector activation_features(const Decomposition& dec) {
  FeatureVector f{Eigen::VectorXd(dec.sources()), FeatureKind::snmf_act};
  for (int k = 1; k <= dec.sources(); ++k) {
    const auto& h = dec.activations[static_cast<std::size_t>(k)];
    f.values[k - 1] = std::log(h.colwise().sum().mean());
  }
  return f;
}

FeatureVector extract_features(const Spectrogram& mixture, const NmfModel& model, std::uint64_t seed) {
  return wiener_features(decompose(mixture, model, seed));
}

FeatureVector extract_activation_features(const Spectrogram& mixture, const NmfModel& model,
                                          std::uint64_t seed) {
  return activation_features(decompose(mixture, model, seed));
}

}  // namespace soundloc
