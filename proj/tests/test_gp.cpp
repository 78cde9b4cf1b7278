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

#include "soundloc/gp.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <Eigen/LU>

#include <cmath>
#include <random>

namespace soundloc {
namespace {

struct Data {
  Eigen::MatrixXd x;
  Eigen::VectorXd y;
};

Data random_data(Eigen::Index n, std::uint64_t seed) {
  Rng rng(seed);
  std::uniform_real_distribution<double> ux(0.0, 30.0), uy(0.0, 12.0);
  std::normal_distribution<double> g;
  Data d{Eigen::MatrixXd(n, 2), Eigen::VectorXd(n)};
  for (Eigen::Index i = 0; i < n; ++i) {
    d.x(i, 0) = ux(rng);
    d.x(i, 1) = uy(rng);
    d.y[i] = 3.0 + std::sin(d.x(i, 0) / 4.0) + 0.5 * std::cos(d.x(i, 1) / 3.0) + 0.1 * g(rng);
  }
  return d;
}

// Draw one function from the GP prior at the given locations.
Eigen::VectorXd sample_prior(const Eigen::MatrixXd& x, const KernelParams& p, std::uint64_t seed) {
  Eigen::MatrixXd c = kernel_matrix(x, x, p);
  c.diagonal().array() += p.noise_var;
  const Eigen::MatrixXd l = c.llt().matrixL();
  Rng rng(seed);
  std::normal_distribution<double> g;
  Eigen::VectorXd z(x.rows());
  for (auto& v : z) v = g(rng);
  return l * z;
}

TEST(Kernel, ClosedForms) {
  const KernelParams p{2.0, 3.0, 0.1};
  const Eigen::Vector2d a(1.0, 2.0), b(1.0, 5.0);
  EXPECT_DOUBLE_EQ(kernel(a, a, p), 2.0);
  EXPECT_DOUBLE_EQ(kernel(a, b, p), kernel(b, a, p));
  EXPECT_NEAR(kernel(a, b, p), 2.0 * std::exp(-0.5), 1e-15);
  EXPECT_NEAR(kernel(a, b, p), 1.21306, 1e-5);
}

TEST(Kernel, MatrixMatchesScalar) {
  const Data d = random_data(7, 1);
  const KernelParams p{1.5, 4.0, 0.2};
  const Eigen::MatrixXd k = kernel_matrix(d.x, d.x.topRows(3), p);
  for (Eigen::Index i = 0; i < 7; ++i)
    for (Eigen::Index j = 0; j < 3; ++j)
      EXPECT_NEAR(k(i, j), kernel(d.x.row(i).transpose(), d.x.row(j).transpose(), p), 1e-14);
}

TEST(Softplus, RoundTripAndStability) {
  for (double y : {1e-8, 0.3, 1.0, 5.0, 80.0}) EXPECT_NEAR(softplus(inverse_softplus(y)), y, 1e-12 * std::max(1.0, y));
  EXPECT_NEAR(softplus(800.0), 800.0, 1e-12);
  EXPECT_GT(softplus(-800.0), -1e-300);
  const KernelParams p{0.7, 6.0, 0.05};
  const KernelParams q = from_unconstrained(to_unconstrained(p, 3.0), 3.0);
  EXPECT_NEAR(q.theta, p.theta, 1e-12);
  EXPECT_NEAR(q.gamma, p.gamma, 1e-12);
  EXPECT_NEAR(q.noise_var, p.noise_var, 1e-12);
}

TEST(MarginalLikelihood, GradientMatchesFiniteDifferences) {
  Rng rng(5);
  std::uniform_real_distribution<double> uu(-2.0, 2.0);
  for (int draw = 0; draw < 10; ++draw) {
    const Data d = random_data(25, 100 + draw);
    const Eigen::VectorXd c = (d.y.array() - d.y.mean()).matrix();
    const Eigen::Vector3d u(uu(rng), uu(rng), uu(rng));
    const MarginalLikelihood ml = log_marginal_likelihood(d.x, c, u, 3.0);
    const double h = 1e-5;
    for (int i = 0; i < 3; ++i) {
      Eigen::Vector3d up = u, dn = u;
      up[i] += h;
      dn[i] -= h;
      const double fd = (log_marginal_likelihood(d.x, c, up, 3.0).value -
                         log_marginal_likelihood(d.x, c, dn, 3.0).value) / (2 * h);
      EXPECT_LT(std::abs(fd - ml.gradient[i]), 1e-4 * std::max(1.0, std::abs(fd))) << "draw " << draw << " param " << i;
    }
  }
}

TEST(MarginalLikelihood, ValueMatchesDenseOracle) {
  const Data d = random_data(20, 6);
  const Eigen::VectorXd c = (d.y.array() - d.y.mean()).matrix();
  const KernelParams p{0.8, 4.5, 0.3};
  Eigen::MatrixXd cov = kernel_matrix(d.x, d.x, p);
  // The factorization always carries the smallest relative jitter.
  cov.diagonal().array() += p.noise_var + 1e-8 * (p.theta + p.noise_var);
  const double oracle = -0.5 * c.dot(cov.inverse() * c) - 0.5 * std::log(cov.determinant()) -
                        0.5 * 20 * std::log(2 * std::numbers::pi);
  EXPECT_NEAR(log_marginal_likelihood(d.x, c, p), oracle, 1e-9 * std::abs(oracle));
  EXPECT_NEAR(log_marginal_likelihood(d.x, c, to_unconstrained(p, 3.0), 3.0).value, oracle, 1e-9 * std::abs(oracle));
}

TEST(Fit, ImprovesOnInitialization) {
  const Data d = random_data(60, 7);
  const Eigen::VectorXd c = (d.y.array() - d.y.mean()).matrix();
  const GpModel m = fit(d.x, d.y);
  KernelParams init = default_init(d.y);
  EXPECT_GE(log_marginal_likelihood(d.x, c, m.params), log_marginal_likelihood(d.x, c, init));
  EXPECT_GE(m.params.gamma, 3.0);
  EXPECT_GT(m.params.theta, 0.0);
  EXPECT_GT(m.params.noise_var, 0.0);
}

TEST(Fit, RecoversLengthScaleFromPriorSample) {
  Rng rng(8);
  std::uniform_real_distribution<double> ux(0.0, 30.0), uy(0.0, 12.0);
  Eigen::MatrixXd x(100, 2);
  for (Eigen::Index i = 0; i < 100; ++i) x.row(i) << ux(rng), uy(rng);
  const Eigen::VectorXd y = sample_prior(x, {1.0, 5.0, 0.01}, 9);
  const GpModel m = fit(x, y);
  EXPECT_GE(m.params.gamma, 3.0);
  EXPECT_LE(m.params.gamma, 8.0);
}

TEST(Fit, Errors) {
  EXPECT_THROW(fit(Eigen::MatrixXd::Zero(0, 2), Eigen::VectorXd::Zero(0)), std::invalid_argument);
  EXPECT_THROW(fit(Eigen::MatrixXd::Zero(3, 2), Eigen::VectorXd::Zero(2)), std::invalid_argument);
  Eigen::MatrixXd x = Eigen::MatrixXd::Random(4, 2);
  x(1, 1) = std::nan("");
  EXPECT_THROW(fit(x, Eigen::VectorXd::Zero(4)), std::invalid_argument);
}

TEST(Fit, SinglePointIsFlat) {
  const GpModel m = fit(Eigen::RowVector2d(3.0, 4.0), Eigen::VectorXd::Constant(1, 0.7));
  EXPECT_NEAR(predict(m, Eigen::Vector2d(3.0, 4.0)).mean, 0.7, 1e-12);
  EXPECT_NEAR(predict(m, Eigen::Vector2d(20.0, 1.0)).mean, 0.7, 1e-12);
}

TEST(Predict, ConstantTargetsGiveConstantMean) {
  const Data d = random_data(30, 10);
  const GpModel m = fit(d.x, Eigen::VectorXd::Constant(30, 4.2));
  for (const Eigen::Vector2d& q : {Eigen::Vector2d(1, 1), Eigen::Vector2d(15, 6), Eigen::Vector2d(80, -40)})
    EXPECT_NEAR(predict(m, q).mean, 4.2, 1e-6);
}

TEST(Predict, InterpolatesWithTinyNoise) {
  const Data d = random_data(15, 11);
  const GpModel m = condition(d.x, d.y, {1.0, 4.0, 1e-9});
  for (Eigen::Index i = 0; i < 15; ++i) EXPECT_NEAR(predict(m, d.x.row(i).transpose()).mean, d.y[i], 1e-3);
}

TEST(Predict, RevertsToPriorFarAway) {
  const Data d = random_data(15, 12);
  const GpModel m = condition(d.x, d.y, {0.9, 4.0, 0.05});
  const Prediction p = predict(m, Eigen::Vector2d(1e4, 1e4));
  EXPECT_NEAR(p.mean, m.target_mean, 1e-6 * std::abs(m.target_mean));
  EXPECT_NEAR(p.var, 0.95, 1e-6 * 0.95);
}

TEST(Predict, MatchesDenseInverseOracle) {
  const Data d = random_data(40, 13);
  const GpModel m = fit(d.x, d.y);
  Eigen::MatrixXd c = kernel_matrix(d.x, d.x, m.params);
  c.diagonal().array() += m.params.noise_var + m.jitter;
  const Eigen::MatrixXd inv = c.inverse();
  const Data q = random_data(20, 14);
  const BatchPrediction batch = predict_batch(m, q.x);
  for (Eigen::Index i = 0; i < 20; ++i) {
    const Eigen::VectorXd k = kernel_matrix(d.x, q.x.row(i), m.params);
    const double mean = m.target_mean + k.dot(inv * (d.y.array() - m.target_mean).matrix());
    const double var = m.params.theta + m.params.noise_var - k.dot(inv * k);
    const Prediction p = predict(m, q.x.row(i).transpose());
    EXPECT_LT(test::rel_err(p.mean, mean), 1e-8);
    EXPECT_LT(test::rel_err(p.var, var), 1e-8);
    EXPECT_LT(test::rel_err(batch.mean[i], mean), 1e-8);
    EXPECT_LT(test::rel_err(batch.var[i], var), 1e-8);
  }
}

TEST(LogDensity, GaussianShape) {
  const Data d = random_data(20, 15);
  const GpModel m = fit(d.x, d.y);
  const Eigen::Vector2d x(12.0, 5.0);
  const Prediction p = predict(m, x);
  const double mode = log_density(m, x, p.mean);
  EXPECT_NEAR(mode, -0.5 * std::log(2 * std::numbers::pi * p.var), 1e-12);
  EXPECT_NEAR(log_density(m, x, p.mean + std::sqrt(p.var)), mode - 0.5, 1e-12);
  EXPECT_NEAR(log_density(m, x, p.mean - std::sqrt(p.var)), mode - 0.5, 1e-12);

  const int n = 20001;
  const double lo = p.mean - 8 * std::sqrt(p.var), hi = p.mean + 8 * std::sqrt(p.var);
  const double h = (hi - lo) / (n - 1);
  double integral = 0.0;
  for (int i = 0; i < n; ++i) {
    const double w = (i == 0 || i == n - 1) ? 0.5 : 1.0;
    integral += w * std::exp(gaussian_log_density(lo + i * h, p.mean, p.var));
  }
  EXPECT_NEAR(integral * h, 1.0, 1e-6);
}

Eigen::MatrixXd lattice(double spacing, Eigen::Index nx, Eigen::Index ny) {
  Eigen::MatrixXd x(nx * ny, 2);
  for (Eigen::Index iy = 0; iy < ny; ++iy)
    for (Eigen::Index ix = 0; ix < nx; ++ix) x.row(iy * nx + ix) << ix * spacing, iy * spacing;
  return x;
}

void expect_grid_matches_batch(const GpModel& m, const Eigen::VectorXd& xs, const Eigen::VectorXd& ys) {
  Eigen::MatrixXd points(xs.size() * ys.size(), 2);
  for (Eigen::Index iy = 0; iy < ys.size(); ++iy)
    for (Eigen::Index ix = 0; ix < xs.size(); ++ix) points.row(iy * xs.size() + ix) << xs[ix], ys[iy];
  const BatchPrediction want = predict_batch(m, points);
  const BatchPrediction got = predict_grid(m, xs, ys);
  const double scale = m.params.theta + m.params.noise_var;
  ASSERT_EQ(got.mean.size(), want.mean.size());
  EXPECT_LT((got.mean - want.mean).cwiseAbs().maxCoeff(), 1e-9 * std::sqrt(scale));
  // The lattice path goes through an explicit inverse; near-noiseless fits are badly conditioned.
  EXPECT_LT((got.var - want.var).cwiseAbs().maxCoeff(), 1e-7 * scale);
}

TEST(PredictGrid, MatchesBatchOnLattice) {
  Eigen::MatrixXd x = lattice(2.0, 16, 7);
  Eigen::VectorXd y(x.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i) y[i] = std::sin(x(i, 0) / 5.0) + 0.2 * x(i, 1);
  const Eigen::VectorXd xs = Eigen::VectorXd::LinSpaced(61, 0.0, 30.0), ys = Eigen::VectorXd::LinSpaced(25, 0.0, 12.0);
  expect_grid_matches_batch(fit(x, y), xs, ys);
  // Leaving one location out still leaves a lattice.
  const Eigen::MatrixXd x_fold = x.bottomRows(x.rows() - 1);
  const Eigen::VectorXd y_fold = y.tail(y.size() - 1);
  expect_grid_matches_batch(condition(x_fold, y_fold, {1.3, 4.0, 1e-4}), xs, ys);
}

TEST(PredictGrid, MatchesBatchWithRepeatedLocations) {
  Eigen::MatrixXd x(8, 2);
  x << 0, 0, 0, 0, 4, 0, 4, 2, 4, 2, 8, 6, 8, 6, 8, 6;
  const Eigen::VectorXd y = test::random_positive(8, 1, 12).col(0);
  const Eigen::VectorXd xs = Eigen::VectorXd::LinSpaced(17, 0.0, 8.0), ys = Eigen::VectorXd::LinSpaced(7, 0.0, 6.0);
  expect_grid_matches_batch(condition(x, y, {0.7, 3.5, 0.05}), xs, ys);
}

TEST(PredictGrid, MatchesBatchOnScatteredInputs) {
  const Data d = random_data(40, 13);
  const Eigen::VectorXd xs = Eigen::VectorXd::LinSpaced(31, 0.0, 30.0), ys = Eigen::VectorXd::LinSpaced(13, 0.0, 12.0);
  expect_grid_matches_batch(condition(d.x, d.y, {0.9, 5.0, 0.02}), xs, ys);
}

}  // namespace
}  // namespace soundloc
