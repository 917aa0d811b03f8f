/*
 * Copyright 2026 the evocov authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef EVOCOV_GP_HPP
#define EVOCOV_GP_HPP

#include "evocov/expr.hpp"

#include <Eigen/Dense>

#include <stdexcept>
#include <utility>

namespace evocov {

/// Training inputs (n x d) and targets (n).  Rows of X align with f.
struct Dataset {
  Eigen::MatrixXd X;
  Eigen::VectorXd f;

  Eigen::Index n() const { return X.rows(); }
  Eigen::Index dim() const { return X.cols(); }

  Dataset rows(Eigen::Index start, Eigen::Index count) const {
    return {X.middleRows(start, count), f.segment(start, count)};
  }
};

struct Posterior {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;  // symmetrized, diagonal clamped at zero
  int clamped = 0;      // diagonal entries clamped during post-processing
};

enum class MetricKind { LML, LOOCV, PosteriorLML, SoPL, TrainTestRMSE };

const char* to_string(MetricKind m);
MetricKind metric_from_string(const std::string& name);

/// True for metrics where smaller values are better (RMSE); the likelihood
/// metrics are larger-is-better and get negated by the optimizer wrapper.
bool lower_is_better(MetricKind m);

struct FactorizationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// SPD factorization with jitter escalation: as given, then jitter starting
/// at 1e-10 * mean(diag) growing x10 up to 1e-4 * mean(diag).
struct CholResult {
  Eigen::LLT<Eigen::MatrixXd> llt;
  double jitter = 0.0;
  double log_det = 0.0;
};
CholResult factorize_spd(const Eigen::MatrixXd& K);

Posterior posterior(const KernelExpr& expr, const ThetaVector& theta,
                    const Dataset& train, const Eigen::MatrixXd& Xstar);

double log_marginal_likelihood(const KernelExpr& expr, const ThetaVector& theta,
                               const Dataset& train);

/// Closed-form leave-one-out log predictive density sum.  Requires n >= 2.
double loocv(const KernelExpr& expr, const ThetaVector& theta, const Dataset& train);

/// Chronological split: first ceil(ratio * n) rows, remainder held out.
/// Guarded so neither side is empty.
std::pair<Dataset, Dataset> split_train(const Dataset& train, double ratio = 0.9);

double posterior_lml(const KernelExpr& expr, const ThetaVector& theta, const Dataset& train);
double sopl(const KernelExpr& expr, const ThetaVector& theta, const Dataset& train);
double traintest_rmse(const KernelExpr& expr, const ThetaVector& theta, const Dataset& train);

double bic(const KernelExpr& expr, const ThetaVector& theta_best, const Dataset& train);

/// Final reporting metric on a held-out test set; never used for fitting.
double test_rmse(const KernelExpr& expr, const ThetaVector& theta,
                 const Dataset& train, const Dataset& test);

double metric_value(MetricKind m, const KernelExpr& expr, const ThetaVector& theta,
                    const Dataset& train);

}  // namespace evocov

#endif  // EVOCOV_GP_HPP
