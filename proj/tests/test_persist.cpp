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
#include "soundloc/persist.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <cstring>
#include <fstream>
#include <sstream>

namespace soundloc {
namespace {

using nlohmann::json;

TrainedModel small_model() {
  TrainedModel m;
  m.nmf.landmarks = {{test::random_positive(1025, 5, 1), 1}, {test::random_positive(1025, 5, 2), 2}};
  m.nmf.config.noise_warmup = 7;
  Eigen::MatrixXd x(6, 2);
  x << 0, 0, 2, 0, 4, 0, 0, 2, 2, 2, 4, 2;
  m.gps = {fit(x, test::random_positive(6, 1, 3).col(0)), fit(x, test::random_positive(6, 1, 4).col(0))};
  m.feature = FeatureKind::snmf_act;
  m.grid = {0.0, 4.0, 0.0, 2.0, 0.5, 1.2};
  m.window_seconds = 0.5;
  return m;
}

TEST(ModelFile, RoundTripPreservesPredictions) {
  const test::TempDir dir("model");
  const TrainedModel m = small_model();
  save_model(dir / "model.json", m);
  const TrainedModel back = load_model(dir / "model.json");
  ASSERT_EQ(back.nmf.sources(), 2);
  for (int k = 0; k < 2; ++k) EXPECT_EQ(back.nmf.landmarks[k].w, m.nmf.landmarks[k].w);
  EXPECT_EQ(back.nmf.config.noise_warmup, 7);
  EXPECT_EQ(back.feature, FeatureKind::snmf_act);
  EXPECT_EQ(back.window_seconds, 0.5);
  EXPECT_EQ(back.grid.z, 1.2);
  ASSERT_EQ(back.gps.size(), 2u);
  for (std::size_t k = 0; k < 2; ++k) {
    const Prediction a = predict(m.gps[k], Eigen::Vector2d(1.3, 0.7));
    const Prediction b = predict(back.gps[k], Eigen::Vector2d(1.3, 0.7));
    EXPECT_NEAR(a.mean, b.mean, 1e-12);
    EXPECT_NEAR(a.var, b.var, 1e-12);
  }
  // Saving the reloaded model reproduces the file byte for byte.
  save_model(dir / "again.json", back);
  EXPECT_EQ(test::slurp(dir / "model.json"), test::slurp(dir / "again.json"));
}

TEST(ModelFile, RejectsForeignOrBrokenDocuments) {
  EXPECT_ANY_THROW(model_from_json(json{{"format", "other"}}));
  json doc = model_to_json(small_model());
  doc.erase("window_seconds");
  EXPECT_ANY_THROW(model_from_json(doc));
  doc = model_to_json(small_model());
  doc["K"] = 3;
  EXPECT_ANY_THROW(model_from_json(doc));
  EXPECT_ANY_THROW(load_model("/nonexistent/model.json"));
}

TEST(Manifest, RoundTripResolvesRelativePaths) {
  const test::TempDir dir("manifest");
  DatasetManifest m;
  m.sample_rate = 44100;
  m.entries = {{"wav/a.wav", {2.0, 4.0}, "train", std::nullopt}, {"iso/b.wav", {1.0, 1.0}, "isolated", 1}};
  save_manifest(dir / "manifest.json", m);
  const DatasetManifest back = load_manifest(dir / "manifest.json");
  ASSERT_EQ(back.entries.size(), 2u);
  EXPECT_EQ(back.sample_rate, 44100);
  EXPECT_EQ(back.entries[0].location, Location(2.0, 4.0));
  EXPECT_EQ(std::filesystem::path(back.entries[0].wav_path), dir / "wav/a.wav");
  EXPECT_EQ(back.entries[1].source_id, 1);
  EXPECT_EQ(back.training().size(), 1u);
  EXPECT_EQ(back.isolated().size(), 1u);
  EXPECT_ANY_THROW(manifest_from_json(json{{"sample_rate", 48000}, {"entries", json::array({{{"wav_path", "x.wav"}, {"x", 0}, {"y", 0}, {"role", "nope"}}})}}));
}

TEST(Config, DefaultsRoundTrip) {
  const ExperimentConfig cfg = parse_config(json::object());
  EXPECT_EQ(cfg.scene.sources.size(), 5u);
  EXPECT_EQ(cfg.eval.nmf.basis_per_source, 5);
  EXPECT_EQ(cfg.eval.nmf.noise_bases, 4);
  EXPECT_EQ(cfg.eval.nmf.iterations, 100);
  EXPECT_EQ(cfg.eval.stft.frame_size, 2048);
  EXPECT_EQ(cfg.eval.stft.hop, 1024);
  EXPECT_EQ(cfg.eval.gp.gamma_min, 3.0);
  EXPECT_EQ(cfg.snrs.size(), 27u);
  const ExperimentConfig again = parse_config(to_json(cfg));
  EXPECT_EQ(to_json(again), to_json(cfg));
  const RoomGrid g = cfg.resolved_eval().grid;
  EXPECT_EQ(g.nx(), 301);
  EXPECT_EQ(g.ny(), 121);
}

TEST(Config, ShippedDefaultFileMatchesBuiltIn) {
  json doc = to_json(load_config(std::filesystem::path(SOUNDLOC_CONFIG_DIR) / "default.json"));
  json builtin = to_json(parse_config(json::object()));
  doc.erase("jobs");
  builtin.erase("jobs");
  EXPECT_EQ(doc, builtin);
}

TEST(Config, OverridesApply) {
  const ExperimentConfig cfg = parse_config(json::parse(R"({
    "seed": 9, "nmf": {"iterations": 20, "noise_warmup": 5},
    "methods": ["mfcc:regression", "snmf_wf:likelihood+prior"],
    "scene": {"width": 8, "depth": 4, "sources": [{"name": "x", "positions": [[1, 1]], "tones": [[1000, 1]]}]},
    "sweep": {"snrs": [0, 6], "eval_windows": 2}})"));
  EXPECT_EQ(cfg.seed, 9u);
  EXPECT_EQ(cfg.scene.seed, 9u);
  EXPECT_EQ(cfg.eval.nmf.iterations, 20);
  EXPECT_EQ(cfg.eval.nmf.noise_warmup, 5);
  EXPECT_EQ(cfg.methods.size(), 2u);
  EXPECT_EQ(cfg.scene.sources.size(), 1u);
  EXPECT_EQ(cfg.snrs, (std::vector<double>{0, 6}));
  EXPECT_EQ(cfg.sweep_eval_windows, 2);
  EXPECT_EQ(cfg.resolved_eval().grid.x_max, 8.0);
}

TEST(Config, StrictValidation) {
  const char* bad[] = {
      R"({"bogus": 1})",
      R"({"nmf": {"iterations": "many"}})",
      R"({"nmf": {"iterations": -1}})",
      R"({"nmf": {"floor": 0}})",
      R"({"stft": {"frame_size": 1000}})",
      R"({"stft": {"hop": 4096}})",
      R"({"gp": {"learning_rate": 0}})",
      R"({"prior": {"std": -1}})",
      R"({"methods": ["snmf_wf:guess"]})",
      R"({"methods": []})",
      R"({"scene": {"width": 5, "sources": [{"positions": [[9, 1]], "tones": [[100, 1]]}]}})",
      R"({"scene": {"sources": [{"positions": [[1, 1]]}]}})",
      R"({"scene": {"sources": [{"positions": [[1, 1]], "bands": [[200, 100, 1]]}]}})",
      R"({"seed": -3})",
      R"({"mfcc_coeffs": 41})",
  };
  for (const char* text : bad) EXPECT_THROW(parse_config(json::parse(text)), ConfigError) << text;
  const test::TempDir dir("config");
  std::ofstream(dir / "broken.json") << "{ not json";
  EXPECT_THROW(load_config(dir / "broken.json"), ConfigError);
  EXPECT_THROW(load_config(dir / "missing.json"), ConfigError);
}

void put_u16(std::string& s, std::uint16_t v) { s.append(reinterpret_cast<const char*>(&v), 2); }
void put_u32(std::string& s, std::uint32_t v) { s.append(reinterpret_cast<const char*>(&v), 4); }

TEST(Wav, FloatRoundTripAndPcm16) {
  const test::TempDir dir("wav");
  AudioClip c = test::gaussian_clip(1000, 9, 0.25, 16000);
  c.samples = c.samples.cast<float>().cast<double>();  // representable exactly in the file
  write_wav(dir / "a.wav", c);
  const AudioClip back = read_wav(dir / "a.wav");
  EXPECT_EQ(back.sample_rate, 16000);
  EXPECT_EQ(back.samples, c.samples);

  // Hand-built 16-bit PCM file.
  const std::int16_t pcm[] = {0, 16384, -32768, 32767};
  std::string body;
  body += "WAVEfmt ";
  put_u32(body, 16);
  put_u16(body, 1);
  put_u16(body, 1);
  put_u32(body, 8000);
  put_u32(body, 16000);
  put_u16(body, 2);
  put_u16(body, 16);
  body += "data";
  put_u32(body, sizeof pcm);
  body.append(reinterpret_cast<const char*>(pcm), sizeof pcm);
  std::string file = "RIFF";
  put_u32(file, static_cast<std::uint32_t>(body.size()));
  file += body;
  std::ofstream(dir / "p.wav", std::ios::binary) << file;
  const AudioClip p = read_wav(dir / "p.wav");
  ASSERT_EQ(p.size(), 4);
  EXPECT_EQ(p.sample_rate, 8000);
  EXPECT_DOUBLE_EQ(p.samples[1], 0.5);
  EXPECT_DOUBLE_EQ(p.samples[2], -1.0);

  std::ofstream(dir / "junk.wav", std::ios::binary) << "RIFFxxxxWAVE";
  EXPECT_ANY_THROW(read_wav(dir / "junk.wav"));
}

TEST(MapFiles, CsvRowsAndSidecar) {
  const test::TempDir dir("map");
  const RoomGrid g{0.0, 1.0, 0.0, 0.5, 0.5};
  LikelihoodMap m{g, Eigen::MatrixXd(2, 3), MapKind::posterior};
  m.log_values << -1, -2, -3, -4, 0.5, -6;
  write_map_csv(dir / "m.csv", m);
  std::istringstream in(test::slurp(dir / "m.csv"));
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "x,y,log_value");
  int rows = 0;
  double x = 0, y = 0, v = 0;
  char comma;
  while (std::getline(in, line)) {
    std::istringstream(line) >> x >> comma >> y >> comma >> v;
    EXPECT_EQ(v, m.log_values(rows / 3, rows % 3));
    ++rows;
  }
  EXPECT_EQ(rows, 6);
  const json side = map_sidecar(m);
  EXPECT_EQ(side["kind"], "posterior");
  EXPECT_EQ(side["shape"]["nx"], 3);
  EXPECT_EQ(side["argmax"][0].get<double>(), 0.5);
  EXPECT_EQ(side["argmax"][1].get<double>(), 0.5);
}

TEST(Report, JsonAndEcdfCsv) {
  const test::TempDir dir("report");
  EvalReport r = summarize({1.0, 2.0, 2.0, 4.0});
  r.method = "snmf_wf:likelihood";
  const json j = report_to_json(r);
  EXPECT_EQ(j["method"], "snmf_wf:likelihood");
  EXPECT_DOUBLE_EQ(j["summary"]["cep"].get<double>(), 2.0);
  write_ecdf_csv(dir / "e.csv", r);
  EXPECT_EQ(test::slurp(dir / "e.csv"), "ce,fraction\n1,0.25\n2,0.75\n4,1\n");
}

}  // namespace
}  // namespace soundloc
