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

#include "soundloc/dsp.hpp"
#include "soundloc/gp.hpp"

#include <Eigen/Core>

#include <string_view>
#include <vector>

namespace soundloc {

using Location = Eigen::Vector2d;

/// Regular search grid over the room; node (ix, iy) sits at (x_min + ix r, y_min + iy r).
struct RoomGrid {
  double x_min = 0.0, x_max = 30.0;
  double y_min = 0.0, y_max = 12.0;
  double resolution = 0.1;
  double z = 1.0;  // microphone height, metadata only

  void validate() const;
  Eigen::Index nx() const;
  Eigen::Index ny() const;
  Eigen::Index size() const { return nx() * ny(); }
  Location node(Eigen::Index ix, Eigen::Index iy) const {
    return {x_min + static_cast<double>(ix) * resolution, y_min + static_cast<double>(iy) * resolution};
  }
  /// All nodes as rows, y-major (row index = iy * nx + ix).
  Eigen::MatrixXd nodes() const;
};

enum class MapKind { likelihood, prior, posterior };
std::string_view to_string(MapKind kind);

/// Log values over grid nodes; log_values(iy, ix).
struct LikelihoodMap {
  RoomGrid grid;
  Eigen::MatrixXd log_values;
  MapKind kind = MapKind::likelihood;
};

inline constexpr double kLogFloor = -1e12;

struct GaussianPrior {
  Location mean = Location::Zero();
  Eigen::Matrix2d cov = Eigen::Matrix2d::Identity();

  void validate() const;
  double log_density(const Location& x) const;
};

/// Per-source GP predictions over every grid node, reusable across feature vectors.
struct PredictiveField {
  RoomGrid grid;
  std::vector<BatchPrediction> sources;
  // Derived per-node terms; filled by predict_field, or on demand by likelihood_map.
  Eigen::ArrayXd log_normalizer;          // sum_k -0.5 ln(2 pi v_k)
  std::vector<Eigen::ArrayXd> precision;  // 1 / v_k
};

PredictiveField predict_field(const std::vector<GpModel>& gps, const RoomGrid& grid);

/// Node value = sum_k log N(psi_k | m_k(x), v_k(x)).
LikelihoodMap likelihood_map(const FeatureVector& features, const PredictiveField& field);
LikelihoodMap likelihood_map(const FeatureVector& features, const std::vector<GpModel>& gps,
                             const RoomGrid& grid);

/// Location of the largest node; ties go to the smallest (y, then x).
Location argmax(const LikelihoodMap& map);
/// argmax of a likelihood map.
Location argmax_ml(const LikelihoodMap& map);

LikelihoodMap prior_map(const GaussianPrior& prior, const RoomGrid& grid);
/// Node value = likelihood + log prior.
LikelihoodMap posterior_map(const LikelihoodMap& likelihood, const GaussianPrior& prior);

/// Drifted dead-reckoning stand-in: N(ground_truth + drift, std^2 I).
GaussianPrior imu_like_prior(const Location& ground_truth, const Location& drift = {5.0, 5.0},
                             double std_dev = 5.0);

/// exp(log_values) normalized to sum to one, for plotting.
Eigen::MatrixXd probabilities(const LikelihoodMap& map);

/// Baseline that regresses x and y directly from the feature vector with two GPs.
struct DirectRegression {
  GpModel x;
  GpModel y;
};

/// features: N x D (one row per training sample); locations: N x 2.
DirectRegression fit_direct_regression(const Eigen::MatrixXd& features, const Eigen::MatrixXd& locations,
                                       const GpOptions& opt = {});
Location predict_location(const DirectRegression& model, const Eigen::Ref<const Eigen::VectorXd>& features);

}  // namespace soundloc
