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

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace soundloc {

namespace {

constexpr double kJitterStart = 1e-8;
constexpr double kJitterMax = 1e-2;

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Cholesky of cov + jitter I, escalating the relative jitter tenfold until it succeeds.
bool factorize(const Eigen::MatrixXd& cov, Eigen::LLT<Eigen::MatrixXd>& llt, double& jitter) {
  const double scale = cov.diagonal().mean();
  for (double rel = kJitterStart; rel <= kJitterMax * (1 + 1e-9); rel *= 10.0) {
    jitter = rel * scale;
    Eigen::MatrixXd c = cov;
    c.diagonal().array() += jitter;
    llt.compute(c);
    if (llt.info() == Eigen::Success) return true;
  }
  return false;
}

void validate_training(const Eigen::MatrixXd& locations, const Eigen::VectorXd& targets) {
  if (locations.rows() < 1) throw std::invalid_argument("gp: no training points");
  if (locations.rows() != targets.size()) throw std::invalid_argument("gp: locations/targets size mismatch");
  if (!locations.allFinite() || !targets.allFinite()) throw std::invalid_argument("gp: non-finite training data");
}

}  // namespace

double softplus(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

double inverse_softplus(double y) {
  if (!(y > 0)) throw std::invalid_argument("inverse_softplus: argument must be positive");
  return y + std::log(-std::expm1(-y));
}

Eigen::Vector3d to_unconstrained(const KernelParams& p, double gamma_min) {
  const double excess = std::max(p.gamma - gamma_min, 1e-6 * std::max(1.0, gamma_min));
  return {inverse_softplus(p.theta), inverse_softplus(excess), inverse_softplus(p.noise_var)};
}

KernelParams from_unconstrained(const Eigen::Vector3d& u, double gamma_min) {
  return {softplus(u[0]), gamma_min + softplus(u[1]), softplus(u[2])};
}

Eigen::MatrixXd squared_distances(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  Eigen::MatrixXd d(a.rows(), b.rows());
  for (Eigen::Index j = 0; j < b.rows(); ++j)
    d.col(j) = (a.rowwise() - b.row(j)).rowwise().squaredNorm();
  return d;
}

Eigen::MatrixXd kernel_matrix(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, const KernelParams& p) {
  return (p.theta * (-squared_distances(a, b).array() / (2.0 * p.gamma * p.gamma)).exp()).matrix();
}

namespace {

// (L L^T)^-1 from the lower Cholesky factor: invert L by forward substitution, then
// form L^-T L^-1 as a symmetric rank update. Much cheaper than solving against I.
Eigen::MatrixXd inverse_from_cholesky(const Eigen::MatrixXd& l) {
  const Eigen::Index n = l.rows();
  const Eigen::MatrixXd lt = l.transpose();  // rows of L as contiguous columns
  Eigen::MatrixXd inv_l = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    inv_l(j, j) = 1.0 / l(j, j);
    for (Eigen::Index i = j + 1; i < n; ++i) {
      inv_l(i, j) = -lt.col(i).segment(j, i - j).dot(inv_l.col(j).segment(j, i - j)) / l(i, i);
    }
  }
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n, n);
  out.selfadjointView<Eigen::Lower>().rankUpdate(inv_l.transpose());
  return out.selfadjointView<Eigen::Lower>();
}

MarginalLikelihood lml_with_distances(const Eigen::MatrixXd& d2, const Eigen::VectorXd& centered,
                                      const Eigen::Vector3d& unconstrained, double gamma_min) {
  const KernelParams p = from_unconstrained(unconstrained, gamma_min);
  const Eigen::Index n = d2.rows();
  const Eigen::MatrixXd k = (p.theta * (-d2.array() / (2.0 * p.gamma * p.gamma)).exp()).matrix();
  Eigen::MatrixXd cov = k;
  cov.diagonal().array() += p.noise_var;

  Eigen::LLT<Eigen::MatrixXd> llt;
  double jitter = 0.0;
  if (!factorize(cov, llt, jitter)) {
    throw std::runtime_error("gp: covariance is not positive definite after maximum jitter");
  }
  const Eigen::VectorXd alpha = llt.solve(centered);
  const Eigen::MatrixXd l = llt.matrixL();
  MarginalLikelihood out;
  out.value = -0.5 * centered.dot(alpha) - l.diagonal().array().log().sum() -
              0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi);

  // d/dp = 0.5 tr((alpha alpha^T - C^-1) dC/dp)
  const Eigen::MatrixXd q = alpha * alpha.transpose() - inverse_from_cholesky(l);
  const double d_theta = 0.5 * (q.array() * k.array()).sum() / p.theta;
  const double d_gamma =
      0.5 * (q.array() * k.array() * d2.array()).sum() / (p.gamma * p.gamma * p.gamma);
  const double d_noise = 0.5 * q.trace();
  out.gradient = {d_theta * sigmoid(unconstrained[0]), d_gamma * sigmoid(unconstrained[1]),
                  d_noise * sigmoid(unconstrained[2])};
  return out;
}

}  // namespace

MarginalLikelihood log_marginal_likelihood(const Eigen::MatrixXd& locations, const Eigen::VectorXd& centered,
                                           const Eigen::Vector3d& unconstrained, double gamma_min) {
  return lml_with_distances(squared_distances(locations, locations), centered, unconstrained, gamma_min);
}

double log_marginal_likelihood(const Eigen::MatrixXd& locations, const Eigen::VectorXd& centered,
                               const KernelParams& p) {
  Eigen::MatrixXd cov = kernel_matrix(locations, locations, p);
  cov.diagonal().array() += p.noise_var;
  Eigen::LLT<Eigen::MatrixXd> llt;
  double jitter = 0.0;
  if (!factorize(cov, llt, jitter)) {
    throw std::runtime_error("gp: covariance is not positive definite after maximum jitter");
  }
  const Eigen::MatrixXd l = llt.matrixL();
  return -0.5 * centered.dot(llt.solve(centered)) - l.diagonal().array().log().sum() -
         0.5 * static_cast<double>(locations.rows()) * std::log(2.0 * std::numbers::pi);
}

KernelParams default_init(const Eigen::VectorXd& targets, double gamma) {
  const double mean = targets.mean();
  double var = (targets.array() - mean).square().mean();
  // Constant targets still need a positive scale.
  if (!(var > 1e-12)) var = 1e-6;
  return {var, gamma, 0.1 * var};
}

GpModel condition(const Eigen::MatrixXd& locations, const Eigen::VectorXd& targets, const KernelParams& p,
                  double gamma_min) {
  validate_training(locations, targets);
  GpModel m;
  m.params = p;
  m.gamma_min = gamma_min;
  m.train_locations = locations;
  m.train_targets = targets;
  m.target_mean = targets.mean();
  Eigen::MatrixXd cov = kernel_matrix(locations, locations, p);
  cov.diagonal().array() += p.noise_var;
  if (!factorize(cov, m.chol, m.jitter)) {
    throw std::runtime_error("gp: covariance is not positive definite after maximum jitter");
  }
  m.alpha = m.chol.solve((targets.array() - m.target_mean).matrix());
  return m;
}

GpModel fit(const Eigen::MatrixXd& locations, const Eigen::VectorXd& targets, const GpOptions& opt,
            std::optional<KernelParams> init) {
  validate_training(locations, targets);
  const Eigen::VectorXd centered = (targets.array() - targets.mean()).matrix();
  KernelParams start = init.value_or(default_init(targets));
  start.gamma = std::max(start.gamma, opt.gamma_min);

  const Eigen::MatrixXd d2 = squared_distances(locations, locations);
  Eigen::Vector3d u = to_unconstrained(start, opt.gamma_min);
  MarginalLikelihood current = lml_with_distances(d2, centered, u, opt.gamma_min);
  Eigen::Vector3d best_u = u;
  double best_value = current.value;

  constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  Eigen::Vector3d m1 = Eigen::Vector3d::Zero(), m2 = Eigen::Vector3d::Zero();
  for (int it = 1; it <= opt.iterations; ++it) {
    const Eigen::Vector3d& g = current.gradient;
    m1 = beta1 * m1 + (1 - beta1) * g;
    m2 = beta2 * m2 + (1 - beta2) * g.cwiseAbs2();
    const Eigen::Vector3d m1_hat = m1 / (1 - std::pow(beta1, it));
    const Eigen::Vector3d m2_hat = m2 / (1 - std::pow(beta2, it));
    u += opt.learning_rate * (m1_hat.array() / (m2_hat.array().sqrt() + eps)).matrix();
    try {
      current = lml_with_distances(d2, centered, u, opt.gamma_min);
    } catch (const std::runtime_error&) {
      break;
    }
    if (!std::isfinite(current.value)) break;
    if (current.value > best_value) {
      best_value = current.value;
      best_u = u;
    }
  }
  return condition(locations, targets, from_unconstrained(best_u, opt.gamma_min), opt.gamma_min);
}

Prediction predict(const GpModel& model, const Eigen::Ref<const Eigen::VectorXd>& x) {
  if (x.size() != model.dims()) throw std::invalid_argument("gp predict: input dimension mismatch");
  Eigen::VectorXd ks(model.size());
  for (Eigen::Index i = 0; i < model.size(); ++i)
    ks[i] = kernel(model.train_locations.row(i).transpose(), x, model.params);
  const Eigen::VectorXd v = model.chol.matrixL().solve(ks);
  const double prior_var = model.params.theta + model.params.noise_var;
  const double var = std::max(prior_var - v.squaredNorm(), 1e-12 * prior_var);
  return {model.target_mean + ks.dot(model.alpha), var};
}

BatchPrediction predict_batch(const GpModel& model, const Eigen::MatrixXd& points) {
  if (points.cols() != model.dims()) throw std::invalid_argument("gp predict: input dimension mismatch");
  const Eigen::MatrixXd ks = kernel_matrix(model.train_locations, points, model.params);  // N x M
  BatchPrediction out;
  out.mean = (ks.transpose() * model.alpha).array() + model.target_mean;
  const Eigen::MatrixXd v = model.chol.matrixL().solve(ks);
  const double prior_var = model.params.theta + model.params.noise_var;
  out.var = (prior_var - v.colwise().squaredNorm().array()).max(1e-12 * prior_var).matrix().transpose();
  return out;
}

namespace {

// Index of each value in the sorted list of its distinct values.
std::vector<Eigen::Index> distinct_index(const Eigen::VectorXd& v, std::vector<double>& distinct) {
  distinct.assign(v.data(), v.data() + v.size());
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(v.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    idx[static_cast<std::size_t>(i)] =
        std::lower_bound(distinct.begin(), distinct.end(), v[i]) - distinct.begin();
  }
  return idx;
}

Eigen::MatrixXd axis_kernel(const std::vector<double>& train, const Eigen::VectorXd& query, double gamma) {
  Eigen::MatrixXd e(static_cast<Eigen::Index>(train.size()), query.size());
  for (Eigen::Index j = 0; j < query.size(); ++j)
    for (std::size_t a = 0; a < train.size(); ++a) {
      const double d = train[a] - query[j];
      e(static_cast<Eigen::Index>(a), j) = std::exp(-d * d / (2.0 * gamma * gamma));
    }
  return e;
}

// Row (or column) pair products: out(a + p * a2, j) = e(a, j) * e(a2, j).
Eigen::MatrixXd pair_products(const Eigen::MatrixXd& e) {
  const Eigen::Index p = e.rows();
  Eigen::MatrixXd out(p * p, e.cols());
  for (Eigen::Index a2 = 0; a2 < p; ++a2)
    out.middleRows(a2 * p, p) = e.array().rowwise() * e.row(a2).array();
  return out;
}

}  // namespace

BatchPrediction predict_grid(const GpModel& model, const Eigen::VectorXd& xs, const Eigen::VectorXd& ys) {
  if (model.dims() != 2) throw std::invalid_argument("predict_grid: model must take 2-D inputs");
  const Eigen::Index nx = xs.size(), ny = ys.size(), n = model.size();
  std::vector<double> ux, uy;
  const auto ai = distinct_index(model.train_locations.col(0), ux);
  const auto bi = distinct_index(model.train_locations.col(1), uy);
  const auto p = static_cast<Eigen::Index>(ux.size()), q = static_cast<Eigen::Index>(uy.size());

  // Scattered inputs: the pair tables would outgrow the direct computation.
  if (p * q > 4 * n + 64) {
    Eigen::MatrixXd points(nx * ny, 2);
    for (Eigen::Index iy = 0; iy < ny; ++iy)
      for (Eigen::Index ix = 0; ix < nx; ++ix) points.row(iy * nx + ix) << xs[ix], ys[iy];
    return predict_batch(model, points);
  }

  // k(x_i, (gx, gy)) = theta * ex(a_i, gx) * ey(b_i, gy) for the squared-exponential kernel.
  const double theta = model.params.theta;
  const Eigen::MatrixXd ex = axis_kernel(ux, xs, model.params.gamma);  // p x nx
  const Eigen::MatrixXd ey = axis_kernel(uy, ys, model.params.gamma);  // q x ny

  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(p, q);
  for (Eigen::Index i = 0; i < n; ++i) a(ai[static_cast<std::size_t>(i)], bi[static_cast<std::size_t>(i)]) += model.alpha[i];
  const Eigen::MatrixXd mean = (theta * (ex.transpose() * a * ey)).array() + model.target_mean;  // nx x ny

  // k^T C^-1 k summed over pairs of lattice cells.
  const Eigen::MatrixXd inv = model.chol.solve(Eigen::MatrixXd::Identity(n, n));
  Eigen::MatrixXd r = Eigen::MatrixXd::Zero(p * p, q * q);
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto ui = static_cast<std::size_t>(i), uj = static_cast<std::size_t>(j);
      r(ai[ui] + p * ai[uj], bi[ui] + q * bi[uj]) += inv(i, j);
    }
  const Eigen::MatrixXd s = r * pair_products(ey);                      // p^2 x ny
  const Eigen::MatrixXd quad = pair_products(ex).transpose() * s;       // nx x ny
  const double prior_var = theta + model.params.noise_var;

  BatchPrediction out;
  out.mean = Eigen::Map<const Eigen::VectorXd>(mean.data(), nx * ny);
  out.var = (prior_var - theta * theta * quad.array()).max(1e-12 * prior_var).matrix().reshaped();
  return out;
}

}  // namespace soundloc
