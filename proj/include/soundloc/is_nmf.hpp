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

// Multiplicative-update Itakura-Saito NMF on a nonnegative power matrix V ~ W H.
// A contiguous block of W columns may be held fixed (supervised mode).

#include <Eigen/Core>

#include <cassert>
#include <cmath>

namespace soundloc {

/// D_IS(V | L) = sum(V / L - log(V / L) - 1).
template <typename DerivedV, typename DerivedL>
typename DerivedV::Scalar is_divergence(const Eigen::MatrixBase<DerivedV>& v,
                                        const Eigen::MatrixBase<DerivedL>& model) {
  const auto ratio = (v.array() / model.array()).eval();
  return (ratio - ratio.log() - typename DerivedV::Scalar(1)).sum();
}

template <typename Scalar>
class IsNmfSolver {
 public:
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  /// Columns [free_begin, free_begin + free_count) of w are updated; the rest stay fixed.
  IsNmfSolver(Matrix v, Matrix w, Matrix h, Eigen::Index free_begin, Eigen::Index free_count,
              Scalar floor)
      : v_(std::move(v)),
        w_(std::move(w)),
        h_(std::move(h)),
        free_begin_(free_begin),
        free_count_(free_count),
        floor_(floor) {
    assert(w_.rows() == v_.rows() && h_.cols() == v_.cols() && w_.cols() == h_.rows());
    assert(free_begin_ >= 0 && free_begin_ + free_count_ <= w_.cols());
    const Eigen::Index t = v_.cols();
    ratio_.resize(v_.rows(), 2 * t);
    lambda_.noalias() = w_ * h_;
  }

  /// One sweep: all activations, then (optionally) the free basis columns.
  void step(bool update_bases = true) {
    update_activations();
    if (update_bases && free_count_ > 0) update_free_bases();
  }

  Scalar objective() const { return is_divergence(v_, lambda_); }

  const Matrix& w() const { return w_; }
  const Matrix& h() const { return h_; }
  const Matrix& model() const { return lambda_; }

 private:
  void refresh_ratios() {
    const Eigen::Index t = v_.cols();
    ratio_.rightCols(t).array() = lambda_.array().inverse();
    ratio_.leftCols(t).array() = v_.array() * ratio_.rightCols(t).array().square();
  }

  void update_activations() {
    const Eigen::Index t = v_.cols();
    refresh_ratios();
    grad_.noalias() = w_.transpose() * ratio_;
    h_.array() *= grad_.leftCols(t).array() / grad_.rightCols(t).array();
    h_ = h_.cwiseMax(floor_);
    lambda_.noalias() = w_ * h_;
  }

  void update_free_bases() {
    const Eigen::Index t = v_.cols();
    refresh_ratios();
    const auto h_free = h_.middleRows(free_begin_, free_count_);
    const Matrix num = ratio_.leftCols(t) * h_free.transpose();
    const Matrix den = ratio_.rightCols(t) * h_free.transpose();
    auto w_free = w_.middleCols(free_begin_, free_count_);
    if (2 * free_count_ >= w_.cols()) {
      w_free.array() *= num.array() / den.array();
      w_free = w_free.cwiseMax(floor_);
      lambda_.noalias() = w_ * h_;
    } else {
      const Matrix old = w_free;
      w_free.array() *= num.array() / den.array();
      w_free = w_free.cwiseMax(floor_);
      lambda_.noalias() += (w_free - old) * h_free;
    }
  }

  Matrix v_, w_, h_, lambda_;
  Matrix ratio_, grad_;
  Eigen::Index free_begin_, free_count_;
  Scalar floor_;
};

}  // namespace soundloc
