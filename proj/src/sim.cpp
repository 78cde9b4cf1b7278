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

#include "soundloc/sim.hpp"

#include "soundloc/parallel.hpp"
#include "soundloc/random.hpp"

#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>

namespace soundloc {

namespace {

Eigen::VectorXd gaussian_noise(Eigen::Index n, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd x(n);
  for (Eigen::Index i = 0; i < n; ++i) x[i] = normal(rng);
  return x;
}

// Plans are cached per length inside the object, so reuse one per thread.
Eigen::FFT<double>& thread_fft() {
  thread_local Eigen::FFT<double> fft = [] {
    Eigen::FFT<double> f;
    f.SetFlag(Eigen::FFT<double>::HalfSpectrum);
    return f;
  }();
  return fft;
}

// Shapes white noise by a real amplitude response over the one-sided spectrum.
template <typename Response>
Eigen::VectorXd shaped_noise(Eigen::Index n, int sample_rate, Rng& rng, Response&& response) {
  Eigen::VectorXd white = gaussian_noise(n, rng);
  Eigen::FFT<double>& fft = thread_fft();
  Eigen::VectorXcd spec;
  fft.fwd(spec, white);
  for (Eigen::Index f = 0; f < spec.size(); ++f) {
    spec[f] *= response(static_cast<double>(f) * sample_rate / static_cast<double>(n));
  }
  Eigen::VectorXd out;
  fft.inv(out, spec, n);
  return out;
}

double rms_of(const Eigen::VectorXd& x) {
  return x.size() ? std::sqrt(x.squaredNorm() / static_cast<double>(x.size())) : 0.0;
}

Eigen::Index sample_count(double duration, int sample_rate) {
  if (!(duration >= 0.0)) throw std::invalid_argument("duration must be non-negative");
  return static_cast<Eigen::Index>(std::llround(duration * sample_rate));
}

constexpr std::uint64_t kSensorStream = 0x5E45011;

}  // namespace

void SceneConfig::validate() const {
  if (!(width > 0) || !(depth > 0)) throw std::invalid_argument("scene: room extents must be positive");
  if (!(grid_spacing > 0)) throw std::invalid_argument("scene: grid_spacing must be positive");
  if (!(window_seconds > 0)) throw std::invalid_argument("scene: window_seconds must be positive");
  if (windows_per_point < 1) throw std::invalid_argument("scene: windows_per_point must be >= 1");
  if (sample_rate <= 0) throw std::invalid_argument("scene: sample_rate must be positive");
  if (!(isolated_seconds > 0)) throw std::invalid_argument("scene: isolated_seconds must be positive");
  if (!(sensor_noise_rms >= 0)) throw std::invalid_argument("scene: sensor_noise_rms must be >= 0");
  for (const auto& s : sources) {
    if (s.positions.empty()) throw std::invalid_argument("scene: source '" + s.name + "' has no position");
    if (s.signature.empty()) throw std::invalid_argument("scene: source '" + s.name + "' has an empty signature");
    if (!(s.power > 0)) throw std::invalid_argument("scene: source '" + s.name + "' needs positive power");
    for (const auto& p : s.positions)
      if (!contains(p)) throw std::invalid_argument("scene: source '" + s.name + "' lies outside the room");
  }
}

bool SceneConfig::contains(const Location& at) const {
  constexpr double tol = 1e-9;
  return at.allFinite() && at.x() >= -tol && at.x() <= width + tol && at.y() >= -tol && at.y() <= depth + tol;
}

SceneConfig default_scene() {
  SceneConfig scene;
  scene.sources = {
      {"projector", {{3.3, 8.7}}, {{{1250, 1.0}, {2500, 0.6}, {3750, 0.4}}, {{6000, 8000, 0.5}}}, 1.0},
      {"pcs", {{11.2, 2.4}}, {{{1850, 1.0}, {3700, 0.7}}, {{10000, 12000, 0.5}}}, 0.8},
      {"air_conditioner", {{17.6, 10.3}}, {{{4400, 0.8}}, {{700, 1100, 1.0}}}, 1.2},
      {"server_room", {{24.4, 3.1}}, {{{2950, 1.0}, {5900, 0.8}, {8850, 0.5}}, {{13000, 15000, 0.6}}}, 1.0},
      {"ventilation_fan", {{28.1, 9.4}}, {{{5200, 0.8}, {7300, 0.6}}, {{1400, 1700, 1.0}}}, 0.9},
  };
  return scene;
}

std::vector<Location> grid_locations(const SceneConfig& scene) {
  const auto nx = static_cast<int>(std::floor(scene.width / scene.grid_spacing + 1e-9)) + 1;
  const auto ny = static_cast<int>(std::floor(scene.depth / scene.grid_spacing + 1e-9)) + 1;
  std::vector<Location> out;
  out.reserve(static_cast<std::size_t>(nx * ny));
  for (int iy = 0; iy < ny; ++iy)
    for (int ix = 0; ix < nx; ++ix) out.emplace_back(ix * scene.grid_spacing, iy * scene.grid_spacing);
  return out;
}

AudioClip synthesize_source(const Signature& signature, double duration, int sample_rate, std::uint64_t seed) {
  if (signature.empty()) throw std::invalid_argument("synthesize_source: empty signature");
  if (sample_rate <= 0) throw std::invalid_argument("synthesize_source: sample_rate must be positive");
  const Eigen::Index n = sample_count(duration, sample_rate);
  Rng rng(seed);
  Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
  for (const Tone& tone : signature.tones) {
    const double phase = 2.0 * std::numbers::pi * uniform_open_closed(rng);
    const double w = 2.0 * std::numbers::pi * tone.frequency / sample_rate;
    const double a = tone.amplitude * std::numbers::sqrt2;
    // Phasor recurrence, re-anchored every block to keep rounding drift negligible.
    constexpr Eigen::Index block = 512;
    const double c = std::cos(w), s = std::sin(w);
    for (Eigen::Index start = 0; start < n; start += block) {
      const double theta = w * static_cast<double>(start) + phase;
      double re = a * std::cos(theta), im = a * std::sin(theta);
      const Eigen::Index stop = std::min(n, start + block);
      for (Eigen::Index i = start; i < stop; ++i) {
        x[i] += im;
        const double next = re * c - im * s;
        im = re * s + im * c;
        re = next;
      }
    }
  }
  if (!signature.bands.empty() && n > 1) {
    // Band-limited Gaussian noise drawn directly in the one-sided spectrum. Each band is
    // scaled to its target RMS through Parseval before a single inverse transform.
    std::normal_distribution<double> normal(0.0, 1.0);
    const Eigen::Index bins = n / 2 + 1;
    Eigen::VectorXcd spec = Eigen::VectorXcd::Zero(bins);
    for (const Band& band : signature.bands) {
      const auto lo = std::max<Eigen::Index>(1, static_cast<Eigen::Index>(std::ceil(band.low * n / sample_rate)));
      const auto hi = std::min<Eigen::Index>(bins - 1, static_cast<Eigen::Index>(std::floor(band.high * n / sample_rate)));
      if (hi < lo) continue;
      double energy = 0.0;
      const Eigen::Index len = hi - lo + 1;
      Eigen::VectorXcd part(len);
      for (Eigen::Index f = 0; f < len; ++f) {
        const double re = normal(rng);
        const double im = normal(rng);
        part[f] = {re, im};
        const bool edge = (lo + f == n / 2 && n % 2 == 0);
        energy += (edge ? 1.0 : 2.0) * std::norm(part[f]);
      }
      // Time-domain mean square of the inverse transform is energy / n^2.
      const double band_rms = std::sqrt(energy) / static_cast<double>(n);
      spec.segment(lo, len) += (band.amplitude / band_rms) * part;
    }
    Eigen::FFT<double>& fft = thread_fft();
    Eigen::VectorXd noise;
    fft.inv(noise, spec, n);
    x += noise;
  }
  const double r = rms_of(x);
  if (r > 0) x /= r;
  return AudioClip{std::move(x), sample_rate};
}

AudioClip pink_noise(double duration, int sample_rate, std::uint64_t seed) {
  const Eigen::Index n = sample_count(duration, sample_rate);
  Rng rng(seed);
  Eigen::VectorXd x = n ? shaped_noise(n, sample_rate, rng, [](double hz) {
    return hz < 20.0 ? 0.0 : 1.0 / std::sqrt(hz);
  })
                        : Eigen::VectorXd();
  const double r = rms_of(x);
  if (r > 0) x /= r;
  return AudioClip{std::move(x), sample_rate};
}

AudioClip render_source(const SceneConfig& scene, int k, const Location& at, double duration, std::uint64_t seed) {
  if (!scene.contains(at)) throw std::invalid_argument("render: microphone location outside the room");
  const auto& src = scene.sources.at(static_cast<std::size_t>(k));
  AudioClip out{Eigen::VectorXd::Zero(sample_count(duration, scene.sample_rate)), scene.sample_rate};
  for (std::size_t e = 0; e < src.positions.size(); ++e) {
    const double gain = src.power * attenuation((at - src.positions[e]).norm());
    const AudioClip emitted = synthesize_source(
        src.signature, duration, scene.sample_rate,
        derive_seed(seed, {static_cast<std::uint64_t>(k), static_cast<std::uint64_t>(e)}));
    out.samples += gain * emitted.samples;
  }
  return out;
}

AudioClip render_mixture(const SceneConfig& scene, const Location& at, double duration, std::uint64_t seed) {
  if (!scene.contains(at)) throw std::invalid_argument("render: microphone location outside the room");
  AudioClip out{Eigen::VectorXd::Zero(sample_count(duration, scene.sample_rate)), scene.sample_rate};
  for (int k = 0; k < static_cast<int>(scene.sources.size()); ++k) {
    out.samples += render_source(scene, k, at, duration, seed).samples;
  }
  if (scene.sensor_noise_rms > 0 && out.size() > 0) {
    Rng rng(derive_seed(seed, {kSensorStream}));
    out.samples += scene.sensor_noise_rms * gaussian_noise(out.size(), rng);
  }
  return out;
}

AudioClip render_node_recording(const SceneConfig& scene, std::size_t node) {
  const auto nodes = grid_locations(scene);
  const Location at = nodes.at(node);
  const Eigen::Index per_window = sample_count(scene.window_seconds, scene.sample_rate);
  AudioClip out{Eigen::VectorXd(per_window * scene.windows_per_point), scene.sample_rate};
  for (int w = 0; w < scene.windows_per_point; ++w) {
    const std::uint64_t seed = derive_seed(scene.seed, {node, static_cast<std::uint64_t>(w)});
    out.samples.segment(w * per_window, per_window) =
        render_mixture(scene, at, scene.window_seconds, seed).samples;
  }
  return out;
}

AudioClip isolated_recording(const SceneConfig& scene, int k) {
  const auto& src = scene.sources.at(static_cast<std::size_t>(k));
  const std::uint64_t seed = derive_seed(scene.seed, {0x150, static_cast<std::uint64_t>(k)});
  AudioClip out = synthesize_source(src.signature, scene.isolated_seconds, scene.sample_rate, seed);
  out.samples *= src.power * attenuation(1.0);
  if (scene.sensor_noise_rms > 0 && out.size() > 0) {
    Rng rng(derive_seed(seed, {kSensorStream}));
    out.samples += scene.sensor_noise_rms * gaussian_noise(out.size(), rng);
  }
  return out;
}

SyntheticDataset build_dataset(const SceneConfig& scene, int jobs) {
  scene.validate();
  SyntheticDataset ds;
  ds.locations = grid_locations(scene);
  ds.recordings.resize(ds.locations.size());
  parallel_for(ds.locations.size(), jobs, [&](std::size_t i) { ds.recordings[i] = render_node_recording(scene, i); });
  ds.isolated.resize(scene.sources.size());
  parallel_for(scene.sources.size(), jobs,
               [&](std::size_t k) { ds.isolated[k] = isolated_recording(scene, static_cast<int>(k)); });
  return ds;
}

}  // namespace soundloc
