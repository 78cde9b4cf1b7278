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
#include "soundloc/random.hpp"

#include <Eigen/Core>

#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <random>
#include <string>

namespace soundloc::test {

inline Eigen::MatrixXd random_positive(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed,
                                       double lo = 0.05, double hi = 2.0) {
  Rng rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = u(rng);
  return m;
}

inline AudioClip gaussian_clip(Eigen::Index n, std::uint64_t seed, double scale = 1.0, int rate = 48000) {
  Rng rng(seed);
  std::normal_distribution<double> g(0.0, scale);
  AudioClip c{Eigen::VectorXd(n), rate};
  for (Eigen::Index i = 0; i < n; ++i) c.samples[i] = g(rng);
  return c;
}

class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    path_ = std::filesystem::temp_directory_path() /
            ("soundloc_" + tag + "_" + std::to_string(mix64(reinterpret_cast<std::uintptr_t>(this)) % 1000000007));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream is(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

inline double rel_err(double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300}); }

// Six-node room with two landmarks; runs the whole CLI pipeline in seconds.
inline const char* tiny_config_json() {
  return R"({
  "seed": 5,
  "jobs": 1,
  "scene": {
    "width": 4, "depth": 2, "grid_spacing": 2, "window_seconds": 0.5, "windows_per_point": 2,
    "isolated_seconds": 2,
    "sources": [
      {"name": "hum", "positions": [[0.5, 1.5]], "tones": [[1000, 1.0], [3000, 0.5]], "bands": [[6000, 7000, 0.4]]},
      {"name": "hiss", "positions": [[3.5, 0.5]], "tones": [[1800, 1.0]], "bands": [[11000, 12500, 0.6]]}
    ]
  },
  "nmf": {"iterations": 30},
  "gp": {"iterations": 30},
  "methods": ["snmf_wf:likelihood"],
  "sweep": {"snrs": [0, 18], "eval_windows": 1}
}
)";
}

inline int exit_code(int status) {
#ifdef WEXITSTATUS
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
#else
  return status;
#endif
}

/// Runs a shell command; returns its exit code and captures stdout.
inline int run(const std::string& command, std::string* out = nullptr) {
  FILE* pipe = popen((command + " 2>/dev/null").c_str(), "r");
  if (!pipe) return -1;
  char buf[4096];
  std::string text;
  while (std::size_t n = std::fread(buf, 1, sizeof buf, pipe)) text.append(buf, n);
  const int status = pclose(pipe);
  if (out) *out = text;
  return exit_code(status);
}

}  // namespace soundloc::test
