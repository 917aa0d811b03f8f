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

#include "evocov/psd.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <random>

namespace evocov {

PsdVerdict is_psd_matrix(const Eigen::MatrixXd& C, double sym_tol, double eig_tol) {
  if (!C.array().isFinite().all()) return {false, "non-finite entry"};
  double scale = C.array().abs().maxCoeff();
  double asym = (C - C.transpose()).array().abs().maxCoeff();
  if (asym > sym_tol * std::max(scale, 1.0)) return {false, "asymmetric"};
  double max_diag = std::max(C.diagonal().maxCoeff(), 1.0);
  if (C.diagonal().minCoeff() < -eig_tol * max_diag) return {false, "negative diagonal"};
  Eigen::MatrixXd sym = 0.5 * (C + C.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) return {false, "eigensolver failure"};
  double lo = es.eigenvalues().minCoeff();
  double hi = es.eigenvalues().array().abs().maxCoeff();
  if (lo < -eig_tol * std::max(hi, 1.0)) return {false, "negative eigenvalue"};
  return {true, ""};
}

namespace {

PsdVerdict validate_impl(const KernelExpr& expr, const PsdCheckConfig& cfg,
                         ThetaVector theta, std::mt19937_64 rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int w = 0; w < cfg.datasets; ++w) {
    Eigen::MatrixXd X(cfg.points_per_set, cfg.dim);
    for (Eigen::Index i = 0; i < X.size(); ++i) X(i) = unif(rng);
    for (int t = 0; t < cfg.theta_draws; ++t) {
      for (std::size_t s = 0; s < theta.values.size(); ++s) {
        theta.values[s] = sample_slot(theta.bounds[s], rng);
      }
      try {
        // Noise excluded: it would only mask indefiniteness.
        Eigen::MatrixXd C = cov_matrix(expr, theta, X, X, false);
        PsdVerdict v = is_psd_matrix(C, cfg.sym_tol, cfg.eig_tol);
        if (!v.pass) return v;
      } catch (const EvalError& err) {
        return {false, std::string("evaluation error: ") + err.what()};
      }
    }
  }
  return {true, ""};
}

}  // namespace

PsdVerdict validate_kernel(const KernelExpr& expr, const PsdCheckConfig& cfg,
                           const BoundsTable& bounds) {
  return validate_impl(expr, cfg, make_theta(expr, bounds), std::mt19937_64(cfg.seed));
}

PsdVerdict validate_kernel(const KernelExpr& expr, const PsdCheckConfig& cfg,
                           const ThetaVector& theta_template) {
  return validate_impl(expr, cfg, theta_template, std::mt19937_64(cfg.seed));
}

}  // namespace evocov
