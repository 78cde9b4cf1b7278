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
#include "support.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <numbers>

namespace soundloc {
namespace {

using test::gaussian_clip;

// Direct O(N^2) DFT of one windowed frame, bins 0..N/2.
Eigen::VectorXcd naive_dft(const Eigen::VectorXd& x) {
  const Eigen::Index n = x.size();
  Eigen::VectorXcd out(n / 2 + 1);
  for (Eigen::Index f = 0; f <= n / 2; ++f) {
    std::complex<double> acc = 0.0;
    for (Eigen::Index t = 0; t < n; ++t) {
      acc += x[t] * std::polar(1.0, -2.0 * std::numbers::pi * static_cast<double>(f * t) / static_cast<double>(n));
    }
    out[f] = acc;
  }
  return out;
}

TEST(Stft, ShapeFollowsFrameAndHop) {
  const AudioClip clip = gaussian_clip(48000, 1);
  const Spectrogram s = stft(clip);
  EXPECT_EQ(s.bins(), 1025);
  EXPECT_EQ(s.frames(), (48000 - 2048) / 1024 + 1);
  EXPECT_EQ(s.sample_rate, 48000);
}

TEST(Stft, MatchesDirectDft) {
  const AudioClip clip = gaussian_clip(256 + 3 * 64, 2);
  const Spectrogram s = stft(clip, 256, 64);
  const Eigen::VectorXd w = hann_window(256);
  for (Eigen::Index t = 0; t < s.frames(); ++t) {
    const Eigen::VectorXcd ref = naive_dft(clip.samples.segment(t * 64, 256).cwiseProduct(w));
    EXPECT_LT((s.values.col(t) - ref).norm(), 1e-9 * ref.norm());
  }
}

TEST(Stft, HannIsPeriodic) {
  const Eigen::VectorXd w = hann_window(8);
  EXPECT_DOUBLE_EQ(w[0], 0.0);
  EXPECT_NEAR(w[4], 1.0, 1e-15);
  EXPECT_NEAR(w[1], w[7], 1e-15);
}

TEST(Stft, ZeroClipGivesZeroSpectrogram) {
  const Spectrogram s = stft(AudioClip{Eigen::VectorXd::Zero(8192), 48000});
  EXPECT_EQ(s.values.cwiseAbs().maxCoeff(), 0.0);
}

TEST(Stft, BinCenteredToneDominates) {
  const int n = 2048, bin = 100;
  AudioClip clip{Eigen::VectorXd(4 * n), 48000};
  for (Eigen::Index i = 0; i < clip.size(); ++i) {
    clip.samples[i] = std::sin(2.0 * std::numbers::pi * bin * static_cast<double>(i) / n);
  }
  const Eigen::MatrixXd p = stft(clip).power();
  for (Eigen::Index t = 0; t < p.cols(); ++t) {
    Eigen::Index peak;
    p.col(t).maxCoeff(&peak);
    EXPECT_EQ(peak, bin);
    for (Eigen::Index f = 0; f < p.rows(); ++f) {
      if (std::abs(f - bin) > 1) {
        EXPECT_GT(10.0 * std::log10(p(bin, t) / p(f, t)), 20.0);
      }
    }
  }
}

TEST(Stft, ParsevalPerFrame) {
  for (std::uint64_t seed = 10; seed < 15; ++seed) {
    const AudioClip clip = gaussian_clip(2048 + 5 * 1024, seed, 0.3);
    const Spectrogram s = stft(clip);
    const Eigen::VectorXd w = hann_window(2048);
    Eigen::VectorXd weight = Eigen::VectorXd::Constant(s.bins(), 2.0);
    weight[0] = weight[s.bins() - 1] = 1.0;
    for (Eigen::Index t = 0; t < s.frames(); ++t) {
      const double time_energy = clip.samples.segment(t * 1024, 2048).cwiseProduct(w).squaredNorm();
      const double freq_energy = weight.dot(s.values.col(t).cwiseAbs2()) / 2048.0;
      EXPECT_LT(test::rel_err(time_energy, freq_energy), 1e-6);
    }
  }
}

TEST(Stft, RejectsBadParameters) {
  const AudioClip clip = gaussian_clip(4096, 3);
  EXPECT_THROW(stft(clip, 1000, 500), std::invalid_argument);
  EXPECT_THROW(stft(clip, 2048, 0), std::invalid_argument);
  EXPECT_THROW(stft(clip, 2048, 4096), std::invalid_argument);
  EXPECT_THROW(stft(gaussian_clip(1000, 3)), std::invalid_argument);
}

TEST(WindowClip, DropsRemainder) {
  EXPECT_EQ(window_clip(gaussian_clip(48000 * 30 + 24000, 4), 1.0).size(), 30u);
  EXPECT_TRUE(window_clip(gaussian_clip(24000, 4), 1.0).empty());
}

TEST(WindowClip, PartitionReproducesPrefix) {
  const AudioClip clip = gaussian_clip(96000, 5);
  const auto windows = window_clip(clip, 1.0);
  ASSERT_EQ(windows.size(), 2u);
  EXPECT_EQ(windows[0].samples, clip.samples.head(48000));
  EXPECT_EQ(windows[1].samples, clip.samples.tail(48000));
}

TEST(Mfcc, RepeatedFrameEqualsSingleFrame) {
  const Spectrogram one = stft(gaussian_clip(2048, 6));
  Spectrogram many = one;
  many.values = one.values.replicate(1, 7);
  const FeatureVector a = mfcc(one), b = mfcc(many);
  EXPECT_LT((a.values - b.values).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_EQ(a.values.size(), 20);
  EXPECT_EQ(a.kind, FeatureKind::mfcc);
}

TEST(Mfcc, AmplitudeScalingOnlyMovesCoefficientZero) {
  AudioClip clip = gaussian_clip(48000, 7);
  const FeatureVector base = mfcc(stft(clip));
  const double c = 3.7;
  clip.samples *= c;
  const FeatureVector scaled = mfcc(stft(clip));
  // Orthonormal DCT-II of a constant offset 2 ln c over 40 filters: 2 ln c * sqrt(40).
  EXPECT_NEAR(scaled.values[0] - base.values[0], 2.0 * std::log(c) * std::sqrt(40.0), 1e-9);
  for (int i = 1; i < 20; ++i) EXPECT_LT(test::rel_err(scaled.values[i], base.values[i]), 1e-6) << i;
}

TEST(Mfcc, ZeroSpectrogramIsFloorValued) {
  const FeatureVector f = mfcc(stft(AudioClip{Eigen::VectorXd::Zero(4096), 48000}));
  EXPECT_NEAR(f.values[0], std::sqrt(40.0) * std::log(1e-12), 1e-9);
  EXPECT_LT(f.values.tail(19).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(Mfcc, DctIsOrthonormal) {
  const Eigen::MatrixXd d = dct_matrix(40, 40);
  EXPECT_LT((d * d.transpose() - Eigen::MatrixXd::Identity(40, 40)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Mfcc, FilterbankCoversSpectrum) {
  const Eigen::MatrixXd bank = mel_filterbank(1025, 48000);
  EXPECT_EQ(bank.rows(), 40);
  EXPECT_GE(bank.minCoeff(), 0.0);
  EXPECT_LE(bank.maxCoeff(), 1.0);
  for (Eigen::Index m = 0; m < bank.rows(); ++m) EXPECT_GT(bank.row(m).sum(), 0.0) << "empty filter " << m;
}

TEST(MixAtSnr, ZeroDbEqualizesRms) {
  const AudioClip s = gaussian_clip(48000, 8, 0.2), n = gaussian_clip(60000, 9, 3.0);
  const AudioClip mix = mix_at_snr(s, n, 0.0);
  const Eigen::VectorXd added = mix.samples - s.samples;
  EXPECT_LT(test::rel_err(rms(s), std::sqrt(added.squaredNorm() / added.size())), 1e-9);
}

TEST(MixAtSnr, TwentyDbOnUnitSignal) {
  AudioClip s = gaussian_clip(48000, 10);
  s.samples /= rms(s);
  const AudioClip mix = mix_at_snr(s, gaussian_clip(48000, 11, 5.0), 20.0);
  const Eigen::VectorXd added = mix.samples - s.samples;
  EXPECT_NEAR(std::sqrt(added.squaredNorm() / added.size()), 0.1, 1e-12);
}

TEST(MixAtSnr, SweepHitsTargets) {
  const AudioClip s = gaussian_clip(48000, 12, 0.5), n = gaussian_clip(48000, 13, 1.0);
  int count = 0;
  for (double snr = -60.0; snr <= 18.0 + 1e-9; snr += 3.0, ++count) {
    const AudioClip mix = mix_at_snr(s, n, snr);
    const Eigen::VectorXd added = mix.samples - s.samples;
    const double measured = 20.0 * std::log10(rms(s) / std::sqrt(added.squaredNorm() / added.size()));
    EXPECT_NEAR(measured, snr, 1e-6);
  }
  EXPECT_EQ(count, 27);
}

TEST(MixAtSnr, Errors) {
  const AudioClip s = gaussian_clip(1000, 14);
  EXPECT_THROW(mix_at_snr(s, gaussian_clip(999, 15), 0.0), std::invalid_argument);
  EXPECT_THROW(mix_at_snr(s, gaussian_clip(1000, 15, 1.0, 16000), 0.0), std::invalid_argument);
  EXPECT_THROW(mix_at_snr(AudioClip{Eigen::VectorXd::Zero(1000), 48000}, gaussian_clip(1000, 15), 0.0),
               std::invalid_argument);
  EXPECT_THROW(mix_at_snr(s, AudioClip{Eigen::VectorXd::Zero(1000), 48000}, 0.0), std::invalid_argument);
}

TEST(FeatureKindNames, RoundTrip) {
  for (FeatureKind k : {FeatureKind::snmf_wf, FeatureKind::snmf_act, FeatureKind::mfcc}) {
    EXPECT_EQ(parse_feature_kind(to_string(k)), k);
  }
  EXPECT_THROW(parse_feature_kind("mel"), std::invalid_argument);
}

}  // namespace
}  // namespace soundloc
