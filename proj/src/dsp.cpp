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

#include "soundloc/dsp.hpp"

#include <unsupported/Eigen/FFT>

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace soundloc {

std::string_view to_string(FeatureKind kind) {
  switch (kind) {
    case FeatureKind::snmf_wf: return "snmf_wf";
    case FeatureKind::snmf_act: return "snmf_act";
    case FeatureKind::mfcc: return "mfcc";
  }
  return "unknown";
}

FeatureKind parse_feature_kind(std::string_view name) {
  if (name == "snmf_wf") return FeatureKind::snmf_wf;
  if (name == "snmf_act") return FeatureKind::snmf_act;
  if (name == "mfcc") return FeatureKind::mfcc;
  throw std::invalid_argument("unknown feature kind: " + std::string(name));
}

Eigen::VectorXd hann_window(int n) {
  Eigen::VectorXd w(n);
  for (int i = 0; i < n; ++i) w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / n);
  return w;
}

Spectrogram stft(const AudioClip& clip, int frame_size, int hop) {
  if (frame_size < 2 || (frame_size & (frame_size - 1)) != 0) {
    throw std::invalid_argument("stft: frame_size must be a power of two");
  }
  if (hop <= 0 || hop > frame_size) throw std::invalid_argument("stft: hop must be in (0, frame_size]");
  if (clip.size() < frame_size) {
    throw std::invalid_argument("stft: insufficient samples (" + std::to_string(clip.size()) +
                                " < frame_size " + std::to_string(frame_size) + ")");
  }
  const Eigen::Index n_frames = (clip.size() - frame_size) / hop + 1;
  const Eigen::Index n_bins = frame_size / 2 + 1;
  const Eigen::VectorXd window = hann_window(frame_size);

  Spectrogram spec;
  spec.frame_size = frame_size;
  spec.hop = hop;
  spec.sample_rate = clip.sample_rate;
  spec.values.resize(n_bins, n_frames);

  Eigen::FFT<double> fft;
  fft.SetFlag(Eigen::FFT<double>::HalfSpectrum);
  Eigen::VectorXd frame(frame_size);
  Eigen::VectorXcd bins(n_bins);
  for (Eigen::Index t = 0; t < n_frames; ++t) {
    frame = clip.samples.segment(t * hop, frame_size).cwiseProduct(window);
    fft.fwd(bins, frame);
    spec.values.col(t) = bins;
  }
  return spec;
}

std::vector<AudioClip> window_clip(const AudioClip& clip, double window_seconds) {
  if (!(window_seconds > 0.0)) throw std::invalid_argument("window_clip: window_seconds must be positive");
  const auto len = static_cast<Eigen::Index>(std::llround(window_seconds * clip.sample_rate));
  std::vector<AudioClip> out;
  if (len <= 0) return out;
  for (Eigen::Index start = 0; start + len <= clip.size(); start += len) {
    out.push_back(AudioClip{clip.samples.segment(start, len), clip.sample_rate});
  }
  return out;
}

namespace {
double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }
}  // namespace

Eigen::MatrixXd mel_filterbank(int n_bins, int sample_rate, const MelConfig& cfg) {
  const double nyquist = sample_rate / 2.0;
  const double f_max = cfg.f_max > 0.0 ? cfg.f_max : nyquist;
  const int n_fft = 2 * (n_bins - 1);
  const double mel_lo = hz_to_mel(cfg.f_min);
  const double mel_hi = hz_to_mel(f_max);

  Eigen::VectorXd edges(cfg.n_filters + 2);
  for (int i = 0; i < cfg.n_filters + 2; ++i) {
    edges[i] = mel_to_hz(mel_lo + (mel_hi - mel_lo) * i / (cfg.n_filters + 1));
  }
  Eigen::MatrixXd bank = Eigen::MatrixXd::Zero(cfg.n_filters, n_bins);
  for (int m = 0; m < cfg.n_filters; ++m) {
    const double lo = edges[m], mid = edges[m + 1], hi = edges[m + 2];
    for (int f = 0; f < n_bins; ++f) {
      const double hz = static_cast<double>(f) * sample_rate / n_fft;
      if (hz > lo && hz < hi) {
        bank(m, f) = hz <= mid ? (hz - lo) / (mid - lo) : (hi - hz) / (hi - mid);
      }
    }
  }
  return bank;
}

Eigen::MatrixXd dct_matrix(int n_out, int n_in) {
  Eigen::MatrixXd d(n_out, n_in);
  for (int k = 0; k < n_out; ++k) {
    const double scale = k == 0 ? std::sqrt(1.0 / n_in) : std::sqrt(2.0 / n_in);
    for (int n = 0; n < n_in; ++n) {
      d(k, n) = scale * std::cos(std::numbers::pi * k * (2.0 * n + 1.0) / (2.0 * n_in));
    }
  }
  return d;
}

FeatureVector mfcc(const Spectrogram& spec, int n_coeffs, const MelConfig& cfg) {
  if (n_coeffs < 1 || n_coeffs > cfg.n_filters) {
    throw std::invalid_argument("mfcc: n_coeffs must be in [1, number of mel filters]");
  }
  const Eigen::MatrixXd bank = mel_filterbank(static_cast<int>(spec.bins()), spec.sample_rate, cfg);
  const Eigen::MatrixXd energies = bank * spec.power();
  const Eigen::MatrixXd log_e = energies.array().max(cfg.log_floor).log().matrix();
  const Eigen::MatrixXd coeffs = dct_matrix(n_coeffs, cfg.n_filters) * log_e;
  return FeatureVector{coeffs.rowwise().mean(), FeatureKind::mfcc};
}

AudioClip mix_at_snr(const AudioClip& signal, const AudioClip& noise, double snr_db) {
  if (signal.sample_rate != noise.sample_rate) {
    throw std::invalid_argument("mix_at_snr: sample rates differ");
  }
  if (noise.size() < signal.size()) {
    throw std::invalid_argument("mix_at_snr: noise shorter than signal");
  }
  const Eigen::VectorXd cropped = noise.samples.head(signal.size());
  const double signal_rms = rms(signal);
  const double noise_rms = std::sqrt(cropped.squaredNorm() / std::max<Eigen::Index>(1, cropped.size()));
  if (!(signal_rms > 0.0)) throw std::invalid_argument("mix_at_snr: signal has zero RMS");
  if (!(noise_rms > 0.0)) throw std::invalid_argument("mix_at_snr: noise has zero RMS");
  const double gain = signal_rms / (noise_rms * std::pow(10.0, snr_db / 20.0));
  return AudioClip{signal.samples + gain * cropped, signal.sample_rate};
}

}  // namespace soundloc
