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

#include "evocov/gp.hpp"

#include <cmath>
#include <numbers>

namespace evocov {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;  // log(2*pi)

}  // namespace

const char* to_string(MetricKind m) {
  switch (m) {
    case MetricKind::LML: return "lml";
    case MetricKind::LOOCV: return "loocv";
    case MetricKind::PosteriorLML: return "posterior_lml";
    case MetricKind::SoPL: return "sopl";
    case MetricKind::TrainTestRMSE: return "traintest_rmse";
  }
  return "?";
}

MetricKind metric_from_string(const std::string& name) {
  if (name == "lml") return MetricKind::LML;
  if (name == "loocv") return MetricKind::LOOCV;
  if (name == "posterior_lml") return MetricKind::PosteriorLML;
  if (name == "sopl") return MetricKind::SoPL;
  if (name == "traintest_rmse") return MetricKind::TrainTestRMSE;
  throw std::invalid_argument("unknown metric '" + name + "'");
}

bool lower_is_better(MetricKind m) { return m == MetricKind::TrainTestRMSE; }

CholResult factorize_spd(const Eigen::MatrixXd& K) {
  double base = K.diagonal().mean();
  if (!std::isfinite(base)) throw FactorizationError("non-finite covariance diagonal");
  double jitter = 0.0;
  for (int attempt = 0; attempt < 8; ++attempt) {
    Eigen::MatrixXd Kj = K;
    if (jitter > 0.0) Kj.diagonal().array() += jitter;
    Eigen::LLT<Eigen::MatrixXd> llt(Kj);
    if (llt.info() == Eigen::Success) {
      double log_det = 0.0;
      bool ok = true;
      const auto& L = llt.matrixLLT();
      for (Eigen::Index i = 0; i < L.rows(); ++i) {
        double d = L(i, i);
        if (!(d > 0.0) || !std::isfinite(d)) {
          ok = false;
          break;
        }
        log_det += 2.0 * std::log(d);
      }
      if (ok) return {std::move(llt), jitter, log_det};
    }
    jitter = (jitter == 0.0) ? 1e-10 * std::abs(base) : jitter * 10.0;
    if (jitter == 0.0) jitter = 1e-10;
    if (jitter > 1e-4 * std::max(std::abs(base), 1e-300)) break;
  }
  throw FactorizationError("covariance matrix not factorizable after jitter ladder");
}

Posterior posterior(const KernelExpr& expr, const ThetaVector& theta,
                    const Dataset& train, const Eigen::MatrixXd& Xstar) {
  Posterior post;
  if (Xstar.rows() == 0) return post;
  Eigen::MatrixXd Kaa = cov_matrix(expr, theta, train.X, train.X, true);
  CholResult chol = factorize_spd(Kaa);
  Eigen::MatrixXd Kas = cov_matrix(expr, theta, train.X, Xstar, false);
  Eigen::MatrixXd Kss = cov_matrix(expr, theta, Xstar, Xstar, false);
  post.mean = Kas.transpose() * chol.llt.solve(train.f);
  post.cov = Kss - Kas.transpose() * chol.llt.solve(Kas);
  post.cov = 0.5 * (post.cov + post.cov.transpose()).eval();
  for (Eigen::Index i = 0; i < post.cov.rows(); ++i) {
    if (post.cov(i, i) < 0.0) {
      post.cov(i, i) = 0.0;
      ++post.clamped;
    }
  }
  return post;
}

double log_marginal_likelihood(const KernelExpr& expr, const ThetaVector& theta,
                               const Dataset& train) {
  Eigen::MatrixXd Ka = cov_matrix(expr, theta, train.X, train.X, true);
  CholResult chol = factorize_spd(Ka);
  Eigen::VectorXd alpha = chol.llt.solve(train.f);
  double n = static_cast<double>(train.n());
  return -0.5 * train.f.dot(alpha) - 0.5 * chol.log_det - 0.5 * n * kLog2Pi;
}

double loocv(const KernelExpr& expr, const ThetaVector& theta, const Dataset& train) {
  if (train.n() < 2) throw std::invalid_argument("loocv requires n >= 2");
  Eigen::MatrixXd Ka = cov_matrix(expr, theta, train.X, train.X, true);
  CholResult chol = factorize_spd(Ka);
  Eigen::MatrixXd Kinv =
      chol.llt.solve(Eigen::MatrixXd::Identity(Ka.rows(), Ka.cols()));
  Eigen::VectorXd alpha = chol.llt.solve(train.f);
  double total = 0.0;
  for (Eigen::Index i = 0; i < train.n(); ++i) {
    double kii = Kinv(i, i);
    if (!(kii > 0.0)) throw FactorizationError("non-positive leave-one-out variance");
    double sigma2 = 1.0 / kii;
    double mu = train.f(i) - alpha(i) / kii;
    double r = train.f(i) - mu;
    total += -r * r / (2.0 * sigma2) - 0.5 * std::log(sigma2) - 0.5 * kLog2Pi;
  }
  return total;
}

std::pair<Dataset, Dataset> split_train(const Dataset& train, double ratio) {
  Eigen::Index n = train.n();
  if (n < 2) throw std::invalid_argument("split_train requires n >= 2");
  auto tt = static_cast<Eigen::Index>(std::ceil(ratio * static_cast<double>(n)));
  if (tt >= n) tt = n - 1;
  if (tt < 1) tt = 1;
  return {train.rows(0, tt), train.rows(tt, n - tt)};
}

namespace {

// Posterior over the train-test block; variance for observed targets, so the
// noise term is added to the predictive diagonal.
Posterior internal_posterior(const KernelExpr& expr, const ThetaVector& theta,
                             const Dataset& train, Dataset& heldout) {
  auto [tt, ts] = split_train(train);
  Posterior post = posterior(expr, theta, tt, ts.X);
  double s2 = theta.noise() * theta.noise();
  post.cov.diagonal().array() += s2;
  heldout = std::move(ts);
  return post;
}

}  // namespace

double posterior_lml(const KernelExpr& expr, const ThetaVector& theta,
                     const Dataset& train) {
  Dataset heldout;
  Posterior post = internal_posterior(expr, theta, train, heldout);
  CholResult chol = factorize_spd(post.cov);
  Eigen::VectorXd r = heldout.f - post.mean;
  double m = static_cast<double>(heldout.n());
  return -0.5 * r.dot(chol.llt.solve(r)) - 0.5 * chol.log_det - 0.5 * m * kLog2Pi;
}

double sopl(const KernelExpr& expr, const ThetaVector& theta, const Dataset& train) {
  Dataset heldout;
  Posterior post = internal_posterior(expr, theta, train, heldout);
  double total = 0.0;
  for (Eigen::Index i = 0; i < heldout.n(); ++i) {
    double var = post.cov(i, i);
    if (!(var > 0.0)) throw FactorizationError("non-positive posterior variance");
    double r = heldout.f(i) - post.mean(i);
    total += -r * r / (2.0 * var) - 0.5 * std::log(var) - 0.5 * kLog2Pi;
  }
  return total;
}

double traintest_rmse(const KernelExpr& expr, const ThetaVector& theta,
                      const Dataset& train) {
  auto [tt, ts] = split_train(train);
  Posterior post = posterior(expr, theta, tt, ts.X);
  return std::sqrt((post.mean - ts.f).squaredNorm() / static_cast<double>(ts.n()));
}

double bic(const KernelExpr& expr, const ThetaVector& theta_best, const Dataset& train) {
  double lml = log_marginal_likelihood(expr, theta_best, train);
  double q = static_cast<double>(expr.hyper_count + 1);
  return -2.0 * lml + q * std::log(static_cast<double>(train.n()));
}

double test_rmse(const KernelExpr& expr, const ThetaVector& theta,
                 const Dataset& train, const Dataset& test) {
  if (test.n() == 0) throw std::invalid_argument("test_rmse: empty test set");
  Posterior post = posterior(expr, theta, train, test.X);
  return std::sqrt((post.mean - test.f).squaredNorm() / static_cast<double>(test.n()));
}

double metric_value(MetricKind m, const KernelExpr& expr, const ThetaVector& theta,
                    const Dataset& train) {
  switch (m) {
    case MetricKind::LML: return log_marginal_likelihood(expr, theta, train);
    case MetricKind::LOOCV: return loocv(expr, theta, train);
    case MetricKind::PosteriorLML: return posterior_lml(expr, theta, train);
    case MetricKind::SoPL: return sopl(expr, theta, train);
    case MetricKind::TrainTestRMSE: return traintest_rmse(expr, theta, train);
  }
  throw std::invalid_argument("unknown metric");
}

}  // namespace evocov
