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

// soundloc: simulate, train, localize, evaluate and sweep from the command line.
// Exit codes: 0 success, 1 runtime or data error, 2 configuration or usage error.

#include "soundloc/config.hpp"
#include "soundloc/eval.hpp"
#include "soundloc/persist.hpp"
#include "soundloc/random.hpp"
#include "soundloc/sim.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

namespace fs = std::filesystem;
using namespace soundloc;

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitConfig = 2;

ExperimentConfig config_from(const std::string& path) {
  return path.empty() ? parse_config(nlohmann::json::object()) : load_config(path);
}

std::string file_stem(const Method& m) {
  std::string s = m.name();
  for (char& c : s)
    if (c == ':' || c == '+') c = '_';
  return s;
}

std::vector<Method> select_methods(const std::string& spec, const ExperimentConfig& cfg) {
  if (spec.empty()) return cfg.methods;
  if (spec == "all") return all_methods();
  std::vector<Method> out;
  std::size_t start = 0;
  while (start <= spec.size()) {
    const std::size_t comma = spec.find(',', start);
    const std::string item = spec.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
    try {
      out.push_back(Method::parse(item));
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("--methods: ") + e.what());
    }
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

void check_sources(const DatasetManifest& manifest, const ExperimentConfig& cfg, bool config_given) {
  const std::size_t k = manifest.isolated().size();
  if (config_given && k != cfg.scene.sources.size()) {
    throw ConfigError("dataset has " + std::to_string(k) + " landmark recordings but the config declares " +
                      std::to_string(cfg.scene.sources.size()) + " sources");
  }
}

int cmd_simulate(const std::string& config_path, const std::string& out_dir, int jobs) {
  ExperimentConfig cfg = config_from(config_path);
  if (jobs > 0) cfg.jobs = jobs;
  const DatasetManifest m = write_dataset(cfg.scene, out_dir, cfg.resolved_eval().jobs);
  write_json(fs::path(out_dir) / "config.json", to_json(cfg));
  std::cout << "wrote " << m.training().size() << " locations and " << m.isolated().size()
            << " isolated recordings to " << out_dir << '\n';
  return 0;
}

int cmd_train(const std::string& dataset, const std::string& config_path, const std::string& out, int jobs) {
  ExperimentConfig cfg = config_from(config_path);
  if (jobs > 0) cfg.jobs = jobs;
  const DatasetManifest manifest = load_manifest(dataset);
  check_sources(manifest, cfg, !config_path.empty());
  const EvalConfig ecfg = cfg.resolved_eval();

  TrainedModel model;
  model.nmf = train_nmf(manifest, ecfg);
  model.feature = FeatureKind::snmf_wf;
  model.grid = ecfg.grid;
  model.window_seconds = ecfg.window_seconds;
  const FeatureBank bank = manifest_bank(manifest, model.nmf, {model.feature}, ecfg);
  const Eigen::MatrixXd means = bank.location_means(model.feature);
  Eigen::MatrixXd locations(static_cast<Eigen::Index>(bank.locations.size()), 2);
  for (std::size_t i = 0; i < bank.locations.size(); ++i)
    locations.row(static_cast<Eigen::Index>(i)) = bank.locations[i].transpose();
  for (Eigen::Index k = 0; k < means.cols(); ++k) model.gps.push_back(fit(locations, means.col(k), ecfg.gp));
  save_model(out, model);
  std::cout << "trained " << model.nmf.sources() << " landmark models on " << bank.locations.size()
            << " locations -> " << out << '\n';
  return 0;
}

int cmd_localize(const std::string& model_path, const std::string& wav, std::optional<double> prior_x,
                 std::optional<double> prior_y, double prior_std, const std::string& map_csv,
                 const std::string& map_json, std::uint64_t seed) {
  if (prior_x.has_value() != prior_y.has_value()) throw ConfigError("--prior-x and --prior-y go together");
  if (!(prior_std > 0)) throw ConfigError("--prior-std must be positive");
  if (!fs::exists(model_path)) throw std::runtime_error("model file not found: " + model_path);
  const TrainedModel model = load_model(model_path);
  const AudioClip clip = read_wav(wav);
  if (clip.sample_rate != model.nmf.sample_rate) {
    throw std::runtime_error("WAV sample rate " + std::to_string(clip.sample_rate) + " differs from the model's " +
                             std::to_string(model.nmf.sample_rate) + " (resampling is not supported)");
  }
  EvalConfig cfg;
  cfg.stft = model.nmf.stft;
  // Features are averaged over whole windows, as in training; a clip shorter than one
  // window is used as is.
  std::vector<AudioClip> windows = window_clip(clip, model.window_seconds);
  if (windows.empty()) windows.push_back(clip);
  FeatureVector f{Eigen::VectorXd::Zero(model.nmf.sources()), model.feature};
  for (std::size_t w = 0; w < windows.size(); ++w)
    f.values += extract(windows[w], model.nmf, model.feature, cfg, derive_seed(seed, {w})).values;
  f.values /= static_cast<double>(windows.size());
  LikelihoodMap map = likelihood_map(f, model.gps, model.grid);
  if (prior_x) {
    const GaussianPrior prior{{*prior_x, *prior_y}, prior_std * prior_std * Eigen::Matrix2d::Identity()};
    map = posterior_map(map, prior);
  }
  const Location best = argmax(map);
  if (!map_csv.empty()) write_map_csv(map_csv, map);
  if (!map_json.empty()) write_json(map_json, map_sidecar(map));
  std::vector<double> feats(f.values.data(), f.values.data() + f.values.size());
  nlohmann::json out = {{"x", best.x()}, {"y", best.y()}, {"kind", std::string(to_string(map.kind))},
                        {"features", feats}, {"windows", windows.size()}};
  std::cout << out.dump() << '\n';
  return 0;
}

void write_summary_csv(const fs::path& path, const std::vector<Method>& methods, const std::vector<EvalReport>& reports) {
  std::ofstream os(path);
  os << "feature,localization,cep,mean,ce95,count\n";
  for (std::size_t i = 0; i < methods.size(); ++i) {
    const std::string name = methods[i].name();
    const auto colon = name.find(':');
    char line[256];
    std::snprintf(line, sizeof line, "%s,%s,%.6f,%.6f,%.6f,%zu", name.substr(0, colon).c_str(),
                  name.substr(colon + 1).c_str(), reports[i].summary.cep, reports[i].summary.mean,
                  reports[i].summary.ce95, reports[i].ces.size());
    os << line << '\n';
  }
}

int cmd_evaluate(const std::string& dataset, const std::string& config_path, const std::string& out_dir,
                 const std::string& methods_spec, int jobs) {
  ExperimentConfig cfg = config_from(config_path);
  if (jobs > 0) cfg.jobs = jobs;
  const std::vector<Method> methods = select_methods(methods_spec, cfg);
  const DatasetManifest manifest = load_manifest(dataset);
  if (manifest.training().empty()) throw std::runtime_error("dataset has no training recordings");
  check_sources(manifest, cfg, !config_path.empty());
  const auto reports = loocv(manifest, methods, cfg.resolved_eval());

  fs::create_directories(out_dir);
  write_json(fs::path(out_dir) / "config.json", to_json(cfg));
  std::printf("%-20s %-18s %8s %8s %8s\n", "feature", "localization", "CEP", "mean", "CE95");
  for (std::size_t i = 0; i < methods.size(); ++i) {
    write_json(fs::path(out_dir) / ("report_" + file_stem(methods[i]) + ".json"), report_to_json(reports[i]));
    write_ecdf_csv(fs::path(out_dir) / ("ecdf_" + file_stem(methods[i]) + ".csv"), reports[i]);
    const std::string name = methods[i].name();
    const auto colon = name.find(':');
    std::printf("%-20s %-18s %8.2f %8.2f %8.2f\n", name.substr(0, colon).c_str(), name.substr(colon + 1).c_str(),
                reports[i].summary.cep, reports[i].summary.mean, reports[i].summary.ce95);
  }
  write_summary_csv(fs::path(out_dir) / "summary.csv", methods, reports);
  return 0;
}

int cmd_sweep(const std::string& dataset, const std::string& noise_path, const std::string& config_path,
              const std::string& out_dir, const std::string& methods_spec, int jobs) {
  ExperimentConfig cfg = config_from(config_path);
  if (jobs > 0) cfg.jobs = jobs;
  const std::vector<Method> methods = select_methods(methods_spec, cfg);
  const DatasetManifest manifest = load_manifest(dataset);
  if (manifest.training().empty()) throw std::runtime_error("dataset has no training recordings");
  check_sources(manifest, cfg, !config_path.empty());
  const AudioClip noise = read_wav(noise_path);
  EvalConfig ecfg = cfg.resolved_eval();
  ecfg.eval_windows = cfg.sweep_eval_windows;
  const auto points = snr_sweep(manifest, noise, methods, cfg.snrs, ecfg);

  fs::create_directories(out_dir);
  write_json(fs::path(out_dir) / "config.json", to_json(cfg));
  nlohmann::json curves = nlohmann::json::object();
  for (std::size_t mi = 0; mi < methods.size(); ++mi) {
    std::ofstream os(fs::path(out_dir) / ("sweep_" + file_stem(methods[mi]) + ".csv"));
    os << "snr_db,cep,mean,ce95,count\n";
    nlohmann::json rows = nlohmann::json::array();
    std::vector<std::pair<double, double>> curve;
    for (const auto& p : points) {
      const EvalReport& r = p.reports[mi];
      char line[160];
      std::snprintf(line, sizeof line, "%g,%.6f,%.6f,%.6f,%zu", p.snr_db, r.summary.cep, r.summary.mean,
                    r.summary.ce95, r.ces.size());
      os << line << '\n';
      rows.push_back({{"snr_db", p.snr_db}, {"cep", r.summary.cep}, {"mean", r.summary.mean}, {"ce95", r.summary.ce95}});
      curve.emplace_back(p.snr_db, r.summary.cep);
    }
    curves[methods[mi].name()] = {{"points", rows}, {"saturation_snr_db", saturation_snr(curve)}};
    std::printf("%-28s saturation SNR %g dB\n", methods[mi].name().c_str(), saturation_snr(curve));
  }
  for (const auto& p : points) {
    char dir[64];
    std::snprintf(dir, sizeof dir, "snr_%+04d", static_cast<int>(std::lround(p.snr_db)));
    fs::create_directories(fs::path(out_dir) / dir);
    for (std::size_t mi = 0; mi < methods.size(); ++mi)
      write_json(fs::path(out_dir) / dir / ("report_" + file_stem(methods[mi]) + ".json"), report_to_json(p.reports[mi]));
  }
  write_json(fs::path(out_dir) / "sweep.json", curves);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Indoor microphone localization from environmental sound"};
  app.require_subcommand(1);
  std::string config, out, dataset, model, wav, noise, methods, map_csv, map_json;
  int jobs = 0;
  std::optional<double> prior_x, prior_y;
  double prior_std = 5.0;
  std::uint64_t seed = 0;

  auto* sim = app.add_subcommand("simulate", "Render the synthetic room into WAV files and a manifest");
  sim->add_option("--config", config, "Experiment config (JSON)")->check(CLI::ExistingFile);
  sim->add_option("--out", out, "Output directory")->required();
  sim->add_option("--jobs", jobs, "Worker threads (0 = config/hardware)");

  auto* train = app.add_subcommand("train", "Train landmark bases and spatial GPs");
  train->add_option("--dataset", dataset, "manifest.json")->required()->check(CLI::ExistingFile);
  train->add_option("--config", config, "Experiment config (JSON)")->check(CLI::ExistingFile);
  train->add_option("--out", out, "Model output (JSON)")->required();
  train->add_option("--jobs", jobs, "Worker threads");

  auto* loc = app.add_subcommand("localize", "Localize a recording; prints the estimate as JSON");
  loc->add_option("--model", model, "Trained model (JSON)")->required();
  loc->add_option("--wav", wav, "Mono WAV recording")->required();
  loc->add_option("--prior-x", prior_x, "Gaussian prior mean x (m)");
  loc->add_option("--prior-y", prior_y, "Gaussian prior mean y (m)");
  loc->add_option("--prior-std", prior_std, "Gaussian prior standard deviation (m)");
  loc->add_option("--map-csv", map_csv, "Write the log map as x,y,log_value CSV");
  loc->add_option("--map-json", map_json, "Write the map sidecar JSON");
  loc->add_option("--seed", seed, "NMF initialization seed");

  auto* eval = app.add_subcommand("evaluate", "Leave-one-location-out evaluation");
  eval->add_option("--dataset", dataset, "manifest.json")->required()->check(CLI::ExistingFile);
  eval->add_option("--config", config, "Experiment config (JSON)")->check(CLI::ExistingFile);
  eval->add_option("--out", out, "Report directory")->required();
  eval->add_option("--methods", methods, "'all' or comma-separated feature:localization list");
  eval->add_option("--jobs", jobs, "Worker threads");

  auto* sweep = app.add_subcommand("sweep", "Evaluate across SNRs with added out-of-domain noise");
  sweep->add_option("--dataset", dataset, "manifest.json")->required()->check(CLI::ExistingFile);
  sweep->add_option("--noise", noise, "Noise WAV")->required()->check(CLI::ExistingFile);
  sweep->add_option("--config", config, "Experiment config (JSON)")->check(CLI::ExistingFile);
  sweep->add_option("--out", out, "Report directory")->required();
  sweep->add_option("--methods", methods, "'all' or comma-separated feature:localization list");
  sweep->add_option("--jobs", jobs, "Worker threads");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*sim) return cmd_simulate(config, out, jobs);
    if (*train) return cmd_train(dataset, config, out, jobs);
    if (*loc) return cmd_localize(model, wav, prior_x, prior_y, prior_std, map_csv, map_json, seed);
    if (*eval) return cmd_evaluate(dataset, config, out, methods, jobs);
    if (*sweep) return cmd_sweep(dataset, noise, config, out, methods, jobs);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return 0;
}
