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

#include "soundloc/persist.hpp"

#include "soundloc/parallel.hpp"
#include "soundloc/random.hpp"

#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace soundloc {

using nlohmann::json;

namespace {

constexpr const char* kModelFormat = "soundloc-model";
constexpr int kModelVersion = 1;

json matrix_rows(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd rows_matrix(const json& rows, Eigen::Index cols) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), cols);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != static_cast<std::size_t>(cols)) throw std::runtime_error("model: ragged matrix");
    for (Eigen::Index j = 0; j < cols; ++j) m(static_cast<Eigen::Index>(i), j) = rows[i][static_cast<std::size_t>(j)].get<double>();
  }
  return m;
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

json model_to_json(const TrainedModel& model) {
  if (model.gps.size() != model.nmf.landmarks.size()) {
    throw std::invalid_argument("model: one GP per landmark is required");
  }
  json sources = json::array();
  for (std::size_t k = 0; k < model.nmf.landmarks.size(); ++k) {
    const BasisMatrix& b = model.nmf.landmarks[k];
    const GpModel& gp = model.gps[k];
    std::vector<double> w(static_cast<std::size_t>(b.w.size()));
    for (Eigen::Index f = 0; f < b.w.rows(); ++f)
      for (Eigen::Index l = 0; l < b.w.cols(); ++l) w[static_cast<std::size_t>(f * b.w.cols() + l)] = b.w(f, l);
    std::vector<double> targets(gp.train_targets.data(), gp.train_targets.data() + gp.train_targets.size());
    sources.push_back({
        {"source_id", b.source_id},
        {"L", b.w.cols()},
        {"W", w},
        {"gp",
         {{"theta", gp.params.theta},
          {"gamma", gp.params.gamma},
          {"noise_var", gp.params.noise_var},
          {"gamma_min", gp.gamma_min},
          {"target_mean", gp.target_mean},
          {"train_locations", matrix_rows(gp.train_locations)},
          {"train_targets", targets}}},
    });
  }
  const auto& c = model.nmf.config;
  const auto& g = model.grid;
  return {
      {"format", kModelFormat},
      {"version", kModelVersion},
      {"sample_rate", model.nmf.sample_rate},
      {"frame_size", model.nmf.stft.frame_size},
      {"hop", model.nmf.stft.hop},
      {"F", model.nmf.bins()},
      {"K", model.nmf.sources()},
      {"feature", std::string(to_string(model.feature))},
      {"nmf", {{"noise_bases", c.noise_bases}, {"iterations", c.iterations}, {"floor", c.floor},
               {"basis_per_source", c.basis_per_source}, {"noise_warmup", c.noise_warmup}}},
      {"grid", {{"x_min", g.x_min}, {"x_max", g.x_max}, {"y_min", g.y_min}, {"y_max", g.y_max},
                {"resolution", g.resolution}, {"z", g.z}}},
      {"sources", sources},
      {"window_seconds", model.window_seconds},
  };
}

TrainedModel model_from_json(const json& doc) {
  try {
    if (doc.value("format", "") != kModelFormat) throw std::runtime_error("not a soundloc model document");
    TrainedModel m;
    m.nmf.sample_rate = doc.at("sample_rate").get<int>();
    m.nmf.stft = {doc.at("frame_size").get<int>(), doc.at("hop").get<int>()};
    const auto& n = doc.at("nmf");
    m.nmf.config.noise_bases = n.at("noise_bases").get<int>();
    m.nmf.config.iterations = n.at("iterations").get<int>();
    m.nmf.config.floor = n.at("floor").get<double>();
    m.nmf.config.basis_per_source = n.at("basis_per_source").get<int>();
    m.nmf.config.noise_warmup = n.value("noise_warmup", 0);
    m.feature = parse_feature_kind(doc.at("feature").get<std::string>());
    const auto& g = doc.at("grid");
    m.grid = {g.at("x_min").get<double>(), g.at("x_max").get<double>(), g.at("y_min").get<double>(),
              g.at("y_max").get<double>(), g.at("resolution").get<double>(), g.at("z").get<double>()};
    m.window_seconds = doc.at("window_seconds").get<double>();
    if (!(m.window_seconds > 0)) throw std::runtime_error("window_seconds must be positive");
    const auto bins = doc.at("F").get<Eigen::Index>();
    const int k_count = doc.at("K").get<int>();
    const auto& sources = doc.at("sources");
    if (static_cast<int>(sources.size()) != k_count) throw std::runtime_error("K does not match the source list");
    for (const auto& s : sources) {
      BasisMatrix b;
      b.source_id = s.at("source_id").get<int>();
      const auto cols = s.at("L").get<Eigen::Index>();
      const auto w = s.at("W").get<std::vector<double>>();
      if (static_cast<Eigen::Index>(w.size()) != bins * cols) throw std::runtime_error("W has the wrong size");
      b.w.resize(bins, cols);
      for (Eigen::Index f = 0; f < bins; ++f)
        for (Eigen::Index l = 0; l < cols; ++l) b.w(f, l) = w[static_cast<std::size_t>(f * cols + l)];
      m.nmf.landmarks.push_back(std::move(b));

      const auto& gp = s.at("gp");
      const KernelParams p{gp.at("theta").get<double>(), gp.at("gamma").get<double>(), gp.at("noise_var").get<double>()};
      const auto targets = gp.at("train_targets").get<std::vector<double>>();
      const Eigen::MatrixXd locations = rows_matrix(gp.at("train_locations"), 2);
      const Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(targets.data(), static_cast<Eigen::Index>(targets.size()));
      m.gps.push_back(condition(locations, y, p, gp.at("gamma_min").get<double>()));
    }
    m.nmf.validate();
    return m;
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("malformed model document: ") + e.what());
  }
}

void write_json(const std::filesystem::path& path, const json& doc) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << doc.dump(2) << '\n';
}

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
}

void save_model(const std::filesystem::path& path, const TrainedModel& model) { write_json(path, model_to_json(model)); }

TrainedModel load_model(const std::filesystem::path& path) { return model_from_json(read_json(path)); }

json manifest_to_json(const DatasetManifest& manifest) {
  json entries = json::array();
  for (const auto& e : manifest.entries) {
    json j = {{"wav_path", e.wav_path}, {"x", e.location.x()}, {"y", e.location.y()}, {"role", e.role}};
    if (e.source_id) j["source_id"] = *e.source_id;
    entries.push_back(std::move(j));
  }
  return {{"sample_rate", manifest.sample_rate}, {"entries", entries}};
}

DatasetManifest manifest_from_json(const json& doc, const std::filesystem::path& base_dir) {
  try {
    DatasetManifest m;
    m.sample_rate = doc.at("sample_rate").get<int>();
    for (const auto& j : doc.at("entries")) {
      ManifestEntry e;
      std::filesystem::path p = j.at("wav_path").get<std::string>();
      e.wav_path = (p.is_relative() && !base_dir.empty() ? base_dir / p : p).string();
      e.location = {j.at("x").get<double>(), j.at("y").get<double>()};
      e.role = j.at("role").get<std::string>();
      if (e.role != "train" && e.role != "isolated") throw std::runtime_error("unknown role '" + e.role + "'");
      if (j.contains("source_id")) e.source_id = j["source_id"].get<int>();
      m.entries.push_back(std::move(e));
    }
    return m;
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("malformed manifest: ") + e.what());
  }
}

void save_manifest(const std::filesystem::path& path, const DatasetManifest& manifest) {
  write_json(path, manifest_to_json(manifest));
}

DatasetManifest load_manifest(const std::filesystem::path& path) {
  return manifest_from_json(read_json(path), path.parent_path());
}

DatasetManifest write_dataset(const SceneConfig& scene, const std::filesystem::path& dir, int jobs,
                              double noise_seconds) {
  scene.validate();
  std::filesystem::create_directories(dir / "wav");
  const auto locations = grid_locations(scene);
  DatasetManifest manifest;
  manifest.sample_rate = scene.sample_rate;

  char name[64];
  for (std::size_t i = 0; i < locations.size(); ++i) {
    std::snprintf(name, sizeof name, "wav/node_%03zu.wav", i);
    manifest.entries.push_back({name, locations[i], "train", std::nullopt});
  }
  for (std::size_t k = 0; k < scene.sources.size(); ++k) {
    std::snprintf(name, sizeof name, "wav/isolated_%02zu.wav", k + 1);
    const Location at = scene.sources[k].positions.front() + Location(1.0, 0.0);
    manifest.entries.push_back({name, at, "isolated", static_cast<int>(k + 1)});
  }

  parallel_for(locations.size(), jobs, [&](std::size_t i) {
    write_wav(dir / manifest.entries[i].wav_path, render_node_recording(scene, i));
  });
  for (std::size_t k = 0; k < scene.sources.size(); ++k) {
    write_wav(dir / manifest.entries[locations.size() + k].wav_path, isolated_recording(scene, static_cast<int>(k)));
  }
  write_wav(dir / "noise.wav", pink_noise(noise_seconds, scene.sample_rate, derive_seed(scene.seed, {0x7015E})));
  save_manifest(dir / "manifest.json", manifest);
  return manifest_from_json(manifest_to_json(manifest), dir);
}

json report_to_json(const EvalReport& report) {
  json ecdf = json::array();
  for (const auto& [ce, frac] : report.ecdf) ecdf.push_back({ce, frac});
  return {
      {"method", report.method},
      {"count", report.ces.size()},
      {"summary", {{"cep", report.summary.cep}, {"mean", report.summary.mean}, {"ce95", report.summary.ce95}}},
      {"ces", report.ces},
      {"ecdf", ecdf},
  };
}

void write_ecdf_csv(const std::filesystem::path& path, const EvalReport& report) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << "ce,fraction\n";
  for (const auto& [ce, frac] : report.ecdf) os << format_double(ce) << ',' << format_double(frac) << '\n';
}

void write_map_csv(const std::filesystem::path& path, const LikelihoodMap& map) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << "x,y,log_value\n";
  for (Eigen::Index iy = 0; iy < map.log_values.rows(); ++iy)
    for (Eigen::Index ix = 0; ix < map.log_values.cols(); ++ix) {
      const Location p = map.grid.node(ix, iy);
      os << format_double(p.x()) << ',' << format_double(p.y()) << ',' << format_double(map.log_values(iy, ix)) << '\n';
    }
}

json map_sidecar(const LikelihoodMap& map) {
  const Location best = argmax(map);
  const auto& g = map.grid;
  return {
      {"kind", std::string(to_string(map.kind))},
      {"resolution", g.resolution},
      {"ranges", {{"x", {g.x_min, g.x_max}}, {"y", {g.y_min, g.y_max}}}},
      {"shape", {{"nx", g.nx()}, {"ny", g.ny()}}},
      {"z", g.z},
      {"argmax", {best.x(), best.y()}},
  };
}

}  // namespace soundloc
