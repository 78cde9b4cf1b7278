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

#include "soundloc/config.hpp"

#include <fstream>
#include <set>
#include <thread>

namespace soundloc {

namespace {

using nlohmann::json;

void expect_object(const json& j, const std::string& where, const std::set<std::string>& allowed) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& [key, _] : j.items())
    if (!allowed.count(key)) throw ConfigError(where + ": unknown key '" + key + "'");
}

double get_number(const json& j, const char* key, double fallback, const std::string& where) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_number()) throw ConfigError(where + "." + key + ": expected a number");
  return j[key].get<double>();
}

long long get_int(const json& j, const char* key, long long fallback, const std::string& where) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_number_integer()) throw ConfigError(where + "." + key + ": expected an integer");
  return j[key].get<long long>();
}

void require(bool ok, const std::string& message) {
  if (!ok) throw ConfigError(message);
}

Location parse_point(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
    throw ConfigError(where + ": expected [x, y]");
  return {j[0].get<double>(), j[1].get<double>()};
}

SourceSpec parse_source(const json& j, const std::string& where) {
  expect_object(j, where, {"name", "positions", "power", "tones", "bands"});
  SourceSpec s;
  if (j.contains("name")) {
    require(j["name"].is_string(), where + ".name: expected a string");
    s.name = j["name"].get<std::string>();
  }
  require(j.contains("positions") && j["positions"].is_array() && !j["positions"].empty(),
          where + ".positions: expected a non-empty list of [x, y]");
  for (const auto& p : j["positions"]) s.positions.push_back(parse_point(p, where + ".positions"));
  s.power = get_number(j, "power", 1.0, where);
  if (j.contains("tones")) {
    require(j["tones"].is_array(), where + ".tones: expected a list");
    for (const auto& t : j["tones"]) {
      require(t.is_array() && t.size() == 2 && t[0].is_number() && t[1].is_number(),
              where + ".tones: expected [frequency, amplitude]");
      s.signature.tones.push_back({t[0].get<double>(), t[1].get<double>()});
    }
  }
  if (j.contains("bands")) {
    require(j["bands"].is_array(), where + ".bands: expected a list");
    for (const auto& b : j["bands"]) {
      require(b.is_array() && b.size() == 3 && b[0].is_number() && b[1].is_number() && b[2].is_number(),
              where + ".bands: expected [low, high, amplitude]");
      s.signature.bands.push_back({b[0].get<double>(), b[1].get<double>(), b[2].get<double>()});
      require(b[0].get<double>() < b[1].get<double>(), where + ".bands: low must be below high");
    }
  }
  return s;
}

json source_to_json(const SourceSpec& s) {
  json positions = json::array();
  for (const auto& p : s.positions) positions.push_back({p.x(), p.y()});
  json tones = json::array();
  for (const auto& t : s.signature.tones) tones.push_back({t.frequency, t.amplitude});
  json bands = json::array();
  for (const auto& b : s.signature.bands) bands.push_back({b.low, b.high, b.amplitude});
  return {{"name", s.name}, {"positions", positions}, {"power", s.power}, {"tones", tones}, {"bands", bands}};
}

}  // namespace

RoomGrid ExperimentConfig::grid() const {
  RoomGrid g = eval.grid;
  g.x_min = 0.0;
  g.x_max = scene.width;
  g.y_min = 0.0;
  g.y_max = scene.depth;
  return g;
}

EvalConfig ExperimentConfig::resolved_eval() const {
  EvalConfig e = eval;
  e.grid = grid();
  e.seed = seed;
  e.window_seconds = scene.window_seconds;
  e.jobs = jobs > 0 ? jobs : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  return e;
}

ExperimentConfig parse_config(const json& doc) {
  expect_object(doc, "config",
                {"seed", "jobs", "scene", "stft", "nmf", "gp", "grid", "prior", "mfcc_coeffs", "methods",
                 "eval_windows", "sweep"});
  ExperimentConfig cfg;
  const long long seed = get_int(doc, "seed", 1, "config");
  require(seed >= 0, "config.seed: must be non-negative");
  cfg.seed = static_cast<std::uint64_t>(seed);
  cfg.jobs = static_cast<int>(get_int(doc, "jobs", 0, "config"));
  require(cfg.jobs >= 0, "config.jobs: must be >= 0");

  if (doc.contains("scene")) {
    const json& s = doc["scene"];
    expect_object(s, "scene",
                  {"width", "depth", "grid_spacing", "window_seconds", "windows_per_point", "sample_rate",
                   "isolated_seconds", "sensor_noise_rms", "sources"});
    SceneConfig& sc = cfg.scene;
    sc.width = get_number(s, "width", sc.width, "scene");
    sc.depth = get_number(s, "depth", sc.depth, "scene");
    sc.grid_spacing = get_number(s, "grid_spacing", sc.grid_spacing, "scene");
    sc.window_seconds = get_number(s, "window_seconds", sc.window_seconds, "scene");
    sc.windows_per_point = static_cast<int>(get_int(s, "windows_per_point", sc.windows_per_point, "scene"));
    sc.sample_rate = static_cast<int>(get_int(s, "sample_rate", sc.sample_rate, "scene"));
    sc.isolated_seconds = get_number(s, "isolated_seconds", sc.isolated_seconds, "scene");
    sc.sensor_noise_rms = get_number(s, "sensor_noise_rms", sc.sensor_noise_rms, "scene");
    if (s.contains("sources")) {
      require(s["sources"].is_array() && !s["sources"].empty(), "scene.sources: expected a non-empty list");
      sc.sources.clear();
      for (std::size_t i = 0; i < s["sources"].size(); ++i)
        sc.sources.push_back(parse_source(s["sources"][i], "scene.sources[" + std::to_string(i) + "]"));
    }
  }
  cfg.scene.seed = cfg.seed;
  try {
    cfg.scene.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }

  if (doc.contains("stft")) {
    const json& s = doc["stft"];
    expect_object(s, "stft", {"frame_size", "hop"});
    cfg.eval.stft.frame_size = static_cast<int>(get_int(s, "frame_size", cfg.eval.stft.frame_size, "stft"));
    cfg.eval.stft.hop = static_cast<int>(get_int(s, "hop", cfg.eval.stft.hop, "stft"));
  }
  const int fs = cfg.eval.stft.frame_size;
  require(fs >= 2 && (fs & (fs - 1)) == 0, "stft.frame_size: must be a power of two");
  require(cfg.eval.stft.hop > 0 && cfg.eval.stft.hop <= fs, "stft.hop: must be in (0, frame_size]");

  if (doc.contains("nmf")) {
    const json& s = doc["nmf"];
    expect_object(s, "nmf", {"basis_per_source", "noise_bases", "iterations", "floor", "noise_warmup"});
    auto& n = cfg.eval.nmf;
    n.basis_per_source = static_cast<int>(get_int(s, "basis_per_source", n.basis_per_source, "nmf"));
    n.noise_bases = static_cast<int>(get_int(s, "noise_bases", n.noise_bases, "nmf"));
    n.iterations = static_cast<int>(get_int(s, "iterations", n.iterations, "nmf"));
    n.floor = get_number(s, "floor", n.floor, "nmf");
    n.noise_warmup = static_cast<int>(get_int(s, "noise_warmup", n.noise_warmup, "nmf"));
  }
  require(cfg.eval.nmf.basis_per_source >= 1, "nmf.basis_per_source: must be >= 1");
  require(cfg.eval.nmf.noise_bases >= 0, "nmf.noise_bases: must be >= 0");
  require(cfg.eval.nmf.iterations >= 0, "nmf.iterations: must be >= 0");
  require(cfg.eval.nmf.floor > 0, "nmf.floor: must be positive");
  require(cfg.eval.nmf.noise_warmup >= 0, "nmf.noise_warmup: must be >= 0");

  if (doc.contains("gp")) {
    const json& s = doc["gp"];
    expect_object(s, "gp", {"learning_rate", "iterations", "gamma_min"});
    auto& g = cfg.eval.gp;
    g.learning_rate = get_number(s, "learning_rate", g.learning_rate, "gp");
    g.iterations = static_cast<int>(get_int(s, "iterations", g.iterations, "gp"));
    g.gamma_min = get_number(s, "gamma_min", g.gamma_min, "gp");
  }
  require(cfg.eval.gp.learning_rate > 0, "gp.learning_rate: must be positive");
  require(cfg.eval.gp.iterations >= 0, "gp.iterations: must be >= 0");
  require(cfg.eval.gp.gamma_min >= 0, "gp.gamma_min: must be >= 0");

  if (doc.contains("grid")) {
    const json& s = doc["grid"];
    expect_object(s, "grid", {"resolution", "z"});
    cfg.eval.grid.resolution = get_number(s, "resolution", cfg.eval.grid.resolution, "grid");
    cfg.eval.grid.z = get_number(s, "z", cfg.eval.grid.z, "grid");
  }
  require(cfg.eval.grid.resolution > 0, "grid.resolution: must be positive");

  if (doc.contains("prior")) {
    const json& s = doc["prior"];
    expect_object(s, "prior", {"drift", "std"});
    if (s.contains("drift")) cfg.eval.prior.drift = parse_point(s["drift"], "prior.drift");
    cfg.eval.prior.std_dev = get_number(s, "std", cfg.eval.prior.std_dev, "prior");
  }
  require(cfg.eval.prior.std_dev > 0, "prior.std: must be positive");

  cfg.eval.mfcc_coeffs = static_cast<int>(get_int(doc, "mfcc_coeffs", cfg.eval.mfcc_coeffs, "config"));
  require(cfg.eval.mfcc_coeffs >= 1 && cfg.eval.mfcc_coeffs <= 40, "mfcc_coeffs: must be in [1, 40]");
  cfg.eval.eval_windows = static_cast<int>(get_int(doc, "eval_windows", 0, "config"));
  require(cfg.eval.eval_windows >= 0, "eval_windows: must be >= 0");

  if (doc.contains("methods")) {
    require(doc["methods"].is_array() && !doc["methods"].empty(), "methods: expected a non-empty list");
    cfg.methods.clear();
    for (const auto& m : doc["methods"]) {
      require(m.is_string(), "methods: entries must be strings");
      try {
        cfg.methods.push_back(Method::parse(m.get<std::string>()));
      } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("methods: ") + e.what());
      }
    }
  }

  if (doc.contains("sweep")) {
    const json& s = doc["sweep"];
    expect_object(s, "sweep", {"snrs", "eval_windows"});
    if (s.contains("snrs")) {
      require(s["snrs"].is_array() && !s["snrs"].empty(), "sweep.snrs: expected a non-empty list");
      cfg.snrs.clear();
      for (const auto& v : s["snrs"]) {
        require(v.is_number(), "sweep.snrs: entries must be numbers");
        cfg.snrs.push_back(v.get<double>());
      }
    }
    cfg.sweep_eval_windows = static_cast<int>(get_int(s, "eval_windows", 0, "sweep"));
    require(cfg.sweep_eval_windows >= 0, "sweep.eval_windows: must be >= 0");
  }
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file: " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config is not valid JSON: " + std::string(e.what()));
  }
  return parse_config(doc);
}

json to_json(const ExperimentConfig& cfg) {
  json sources = json::array();
  for (const auto& s : cfg.scene.sources) sources.push_back(source_to_json(s));
  json methods = json::array();
  for (const auto& m : cfg.methods) methods.push_back(m.name());
  const auto& e = cfg.eval;
  return {
      {"seed", cfg.seed},
      {"jobs", cfg.jobs},
      {"scene",
       {{"width", cfg.scene.width},
        {"depth", cfg.scene.depth},
        {"grid_spacing", cfg.scene.grid_spacing},
        {"window_seconds", cfg.scene.window_seconds},
        {"windows_per_point", cfg.scene.windows_per_point},
        {"sample_rate", cfg.scene.sample_rate},
        {"isolated_seconds", cfg.scene.isolated_seconds},
        {"sensor_noise_rms", cfg.scene.sensor_noise_rms},
        {"sources", sources}}},
      {"stft", {{"frame_size", e.stft.frame_size}, {"hop", e.stft.hop}}},
      {"nmf",
       {{"basis_per_source", e.nmf.basis_per_source},
        {"noise_bases", e.nmf.noise_bases},
        {"iterations", e.nmf.iterations},
        {"floor", e.nmf.floor},
        {"noise_warmup", e.nmf.noise_warmup}}},
      {"gp", {{"learning_rate", e.gp.learning_rate}, {"iterations", e.gp.iterations}, {"gamma_min", e.gp.gamma_min}}},
      {"grid", {{"resolution", e.grid.resolution}, {"z", e.grid.z}}},
      {"prior", {{"drift", {e.prior.drift.x(), e.prior.drift.y()}}, {"std", e.prior.std_dev}}},
      {"mfcc_coeffs", e.mfcc_coeffs},
      {"methods", methods},
      {"eval_windows", e.eval_windows},
      {"sweep", {{"snrs", cfg.snrs}, {"eval_windows", cfg.sweep_eval_windows}}},
  };
}

}  // namespace soundloc
