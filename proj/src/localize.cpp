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

#include "soundloc/localize.hpp"

#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace soundloc {

void RoomGrid::validate() const {
  if (!(resolution > 0.0)) throw std::invalid_argument("RoomGrid: resolution must be positive");
  if (!(x_max >= x_min) || !(y_max >= y_min)) throw std::invalid_argument("RoomGrid: empty range");
}

Eigen::Index RoomGrid::nx() const {
  return static_cast<Eigen::Index>(std::floor((x_max - x_min) / resolution + 1e-9)) + 1;
}

Eigen::Index RoomGrid::ny() const {
  return static_cast<Eigen::Index>(std::floor((y_max - y_min) / resolution + 1e-9)) + 1;
}

Eigen::MatrixXd RoomGrid::nodes() const {
  validate();
  Eigen::MatrixXd out(size(), 2);
  for (Eigen::Index iy = 0; iy < ny(); ++iy)
    for (Eigen::Index ix = 0; ix < nx(); ++ix) out.row(iy * nx() + ix) = node(ix, iy).transpose();
  return out;
}

std::string_view to_string(MapKind kind) {
  switch (kind) {
    case MapKind::likelihood: return "likelihood";
    case MapKind::prior: return "prior";
    case MapKind::posterior: return "posterior";
  }
  return "unknown";
}

void GaussianPrior::validate() const {
  if (!cov.allFinite() || std::abs(cov(0, 1) - cov(1, 0)) > 1e-12 * cov.norm() || cov(0, 0) <= 0 ||
      cov.determinant() <= 0) {
    throw std::invalid_argument("GaussianPrior: covariance must be symmetric positive definite");
  }
}

double GaussianPrior::log_density(const Location& x) const {
  const Location d = x - mean;
  return -0.5 * (d.dot(cov.inverse() * d) + std::log(cov.determinant()) + 2.0 * std::log(2.0 * std::numbers::pi));
}

namespace {

void derive_terms(PredictiveField& field) {
  const double log_2pi = std::log(2.0 * std::numbers::pi);
  field.log_normalizer = Eigen::ArrayXd::Zero(field.grid.size());
  field.precision.clear();
  for (const auto& pred : field.sources) {
    if (pred.mean.size() != field.grid.size() || pred.var.size() != field.grid.size()) {
      throw std::invalid_argument("PredictiveField: prediction size does not match the grid");
    }
    field.log_normalizer -= 0.5 * (log_2pi + pred.var.array().log());
    field.precision.push_back(pred.var.array().inverse());
  }
}

}  // namespace

PredictiveField predict_field(const std::vector<GpModel>& gps, const RoomGrid& grid) {
  grid.validate();
  Eigen::VectorXd xs(grid.nx()), ys(grid.ny());
  for (Eigen::Index ix = 0; ix < grid.nx(); ++ix) xs[ix] = grid.node(ix, 0).x();
  for (Eigen::Index iy = 0; iy < grid.ny(); ++iy) ys[iy] = grid.node(0, iy).y();
  PredictiveField field{grid, {}, {}, {}};
  field.sources.reserve(gps.size());
  for (const auto& gp : gps) {
    if (gp.dims() != 2) throw std::invalid_argument("predict_field: spatial GPs must take 2-D inputs");
    field.sources.push_back(predict_grid(gp, xs, ys));
  }
  derive_terms(field);
  return field;
}

LikelihoodMap likelihood_map(const FeatureVector& features, const PredictiveField& field) {
  if (static_cast<std::size_t>(features.values.size()) != field.sources.size()) {
    throw std::invalid_argument("likelihood_map: feature length " + std::to_string(features.values.size()) +
                                " does not match " + std::to_string(field.sources.size()) + " GPs");
  }
  if (field.precision.size() != field.sources.size()) {
    PredictiveField completed = field;
    derive_terms(completed);
    return likelihood_map(features, completed);
  }
  const RoomGrid& grid = field.grid;
  Eigen::ArrayXd total = field.log_normalizer;
  for (std::size_t k = 0; k < field.sources.size(); ++k) {
    const Eigen::ArrayXd d = features.values[static_cast<Eigen::Index>(k)] - field.sources[k].mean.array();
    total -= 0.5 * d.square() * field.precision[k];
  }
  LikelihoodMap map{grid, Eigen::MatrixXd(grid.ny(), grid.nx()), MapKind::likelihood};
  for (Eigen::Index iy = 0; iy < grid.ny(); ++iy)
    for (Eigen::Index ix = 0; ix < grid.nx(); ++ix) {
      const double v = total[iy * grid.nx() + ix];
      map.log_values(iy, ix) = std::isnan(v) ? kLogFloor : std::max(v, kLogFloor);
    }
  return map;
}

LikelihoodMap likelihood_map(const FeatureVector& features, const std::vector<GpModel>& gps,
                             const RoomGrid& grid) {
  if (static_cast<std::size_t>(features.values.size()) != gps.size()) {
    throw std::invalid_argument("likelihood_map: feature length does not match the number of GPs");
  }
  return likelihood_map(features, predict_field(gps, grid));
}

Location argmax(const LikelihoodMap& map) {
  Eigen::Index best_x = 0, best_y = 0;
  double best = -std::numeric_limits<double>::infinity();
  // Row-major scan with strict comparison keeps the first (smallest y, then x) maximum.
  for (Eigen::Index iy = 0; iy < map.log_values.rows(); ++iy)
    for (Eigen::Index ix = 0; ix < map.log_values.cols(); ++ix)
      if (map.log_values(iy, ix) > best) {
        best = map.log_values(iy, ix);
        best_x = ix;
        best_y = iy;
      }
  return map.grid.node(best_x, best_y);
}

Location argmax_ml(const LikelihoodMap& map) {
  if (map.kind != MapKind::likelihood) throw std::invalid_argument("argmax_ml: map is not a likelihood");
  return argmax(map);
}

LikelihoodMap prior_map(const GaussianPrior& prior, const RoomGrid& grid) {
  prior.validate();
  const Eigen::Matrix2d precision = prior.cov.inverse();
  const double offset = -0.5 * (std::log(prior.cov.determinant()) + 2.0 * std::log(2.0 * std::numbers::pi));
  LikelihoodMap map{grid, Eigen::MatrixXd(grid.ny(), grid.nx()), MapKind::prior};
  for (Eigen::Index iy = 0; iy < grid.ny(); ++iy)
    for (Eigen::Index ix = 0; ix < grid.nx(); ++ix) {
      const Location d = grid.node(ix, iy) - prior.mean;
      map.log_values(iy, ix) = std::max(offset - 0.5 * d.dot(precision * d), kLogFloor);
    }
  return map;
}

LikelihoodMap posterior_map(const LikelihoodMap& likelihood, const GaussianPrior& prior) {
  if (likelihood.kind != MapKind::likelihood) {
    throw std::invalid_argument("posterior_map: input must be a likelihood map");
  }
  LikelihoodMap post = prior_map(prior, likelihood.grid);
  post.log_values = (post.log_values + likelihood.log_values).cwiseMax(kLogFloor);
  post.kind = MapKind::posterior;
  return post;
}

GaussianPrior imu_like_prior(const Location& ground_truth, const Location& drift, double std_dev) {
  return {ground_truth + drift, std_dev * std_dev * Eigen::Matrix2d::Identity()};
}

Eigen::MatrixXd probabilities(const LikelihoodMap& map) {
  const double peak = map.log_values.maxCoeff();
  Eigen::MatrixXd p = (map.log_values.array() - peak).exp().matrix();
  return p / p.sum();
}

namespace {

double median_pairwise_distance(const Eigen::MatrixXd& x) {
  std::vector<double> d;
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    for (Eigen::Index j = i + 1; j < x.rows(); ++j) d.push_back((x.row(i) - x.row(j)).norm());
  if (d.empty()) return 1.0;
  std::nth_element(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(d.size() / 2), d.end());
  const double m = d[d.size() / 2];
  return m > 0 ? m : 1.0;
}

}  // namespace

DirectRegression fit_direct_regression(const Eigen::MatrixXd& features, const Eigen::MatrixXd& locations,
                                       const GpOptions& opt) {
  if (features.rows() < 2 || features.rows() != locations.rows() || locations.cols() != 2) {
    throw std::invalid_argument("fit_direct_regression: need >= 2 matching (features, location) pairs");
  }
  // Feature space has no metric units, so the length-scale floor does not apply.
  GpOptions o = opt;
  o.gamma_min = 0.0;
  const double gamma0 = median_pairwise_distance(features);
  KernelParams init_x = default_init(locations.col(0), gamma0);
  KernelParams init_y = default_init(locations.col(1), gamma0);
  return {fit(features, locations.col(0), o, init_x), fit(features, locations.col(1), o, init_y)};
}

Location predict_location(const DirectRegression& model, const Eigen::Ref<const Eigen::VectorXd>& features) {
  return {predict(model.x, features).mean, predict(model.y, features).mean};
}

}  // namespace soundloc
