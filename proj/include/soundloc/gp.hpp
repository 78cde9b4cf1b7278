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

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include <cmath>
#include <numbers>
#include <optional>

namespace soundloc {

/// Scaled RBF kernel parameters and the observation noise of one GP.
struct KernelParams {
  double theta = 1.0;      // signal variance
  double gamma = 5.0;      // length scale, same units as the inputs
  double noise_var = 0.1;  // sigma^2
};

/// theta * exp(-|a - b|^2 / (2 gamma^2))
template <typename DerivedA, typename DerivedB>
double kernel(const Eigen::MatrixBase<DerivedA>& a, const Eigen::MatrixBase<DerivedB>& b,
              const KernelParams& p) {
  return p.theta * std::exp(-(a - b).squaredNorm() / (2.0 * p.gamma * p.gamma));
}

/// Pairwise squared Euclidean distances between the rows of a and b.
Eigen::MatrixXd squared_distances(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

/// Kernel matrix between the rows of a and b (no noise term).
Eigen::MatrixXd kernel_matrix(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, const KernelParams& p);

struct GpOptions {
  double learning_rate = 0.1;
  int iterations = 100;
  double gamma_min = 3.0;
};

/// Fitted GP over N training inputs (rows of train_locations).
struct GpModel {
  KernelParams params;
  double gamma_min = 3.0;
  Eigen::MatrixXd train_locations;
  Eigen::VectorXd train_targets;
  double target_mean = 0.0;

  // Solver state for (K + (sigma^2 + jitter) I).
  double jitter = 0.0;
  Eigen::LLT<Eigen::MatrixXd> chol;
  Eigen::VectorXd alpha;

  Eigen::Index size() const { return train_locations.rows(); }
  Eigen::Index dims() const { return train_locations.cols(); }
};

struct Prediction {
  double mean = 0.0;
  double var = 0.0;
};

struct BatchPrediction {
  Eigen::VectorXd mean;
  Eigen::VectorXd var;
};

// Unconstrained parameterization: theta = softplus(u0), gamma = gamma_min + softplus(u1),
// sigma^2 = softplus(u2).
double softplus(double x);
double inverse_softplus(double y);
Eigen::Vector3d to_unconstrained(const KernelParams& p, double gamma_min);
KernelParams from_unconstrained(const Eigen::Vector3d& u, double gamma_min);

struct MarginalLikelihood {
  double value = 0.0;
  Eigen::Vector3d gradient = Eigen::Vector3d::Zero();  // w.r.t. the unconstrained parameters
};

/// log N(y | 0, K + sigma^2 I) and its analytic gradient. Throws if no jitter makes the matrix PD.
MarginalLikelihood log_marginal_likelihood(const Eigen::MatrixXd& locations, const Eigen::VectorXd& centered,
                                           const Eigen::Vector3d& unconstrained, double gamma_min);
double log_marginal_likelihood(const Eigen::MatrixXd& locations, const Eigen::VectorXd& centered,
                               const KernelParams& p);

/// Default initialization: theta = var(centered targets), gamma = 5, sigma^2 = 0.1 theta.
KernelParams default_init(const Eigen::VectorXd& targets, double gamma = 5.0);

/// Builds the solver state for fixed parameters. Targets are centered by their mean.
GpModel condition(const Eigen::MatrixXd& locations, const Eigen::VectorXd& targets, const KernelParams& p,
                  double gamma_min = 3.0);

/// Maximizes the marginal likelihood with Adam; returns the best iterate seen (never worse than init).
GpModel fit(const Eigen::MatrixXd& locations, const Eigen::VectorXd& targets, const GpOptions& opt = {},
            std::optional<KernelParams> init = std::nullopt);

Prediction predict(const GpModel& model, const Eigen::Ref<const Eigen::VectorXd>& x);
/// Predictions at the rows of points.
BatchPrediction predict_batch(const GpModel& model, const Eigen::MatrixXd& points);
/// Predictions at every (xs[i], ys[j]) of a 2-D Cartesian grid, ordered y-major (j * xs.size() + i).
/// Same values as predict_batch on the expanded points; much faster when the training inputs
/// sit on a lattice with few distinct coordinates.
BatchPrediction predict_grid(const GpModel& model, const Eigen::VectorXd& xs, const Eigen::VectorXd& ys);

inline double gaussian_log_density(double value, double mean, double var) {
  const double d = value - mean;
  return -0.5 * (std::log(2.0 * std::numbers::pi * var) + d * d / var);
}

inline double log_density(const GpModel& model, const Eigen::Ref<const Eigen::VectorXd>& x, double value) {
  const Prediction p = predict(model, x);
  return gaussian_log_density(value, p.mean, p.var);
}

}  // namespace soundloc
