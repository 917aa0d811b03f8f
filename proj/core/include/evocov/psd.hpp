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

#ifndef EVOCOV_PSD_HPP
#define EVOCOV_PSD_HPP

#include "evocov/bounds.hpp"
#include "evocov/expr.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <string>

namespace evocov {

/// Configuration of the stochastic PSD rejection test: covariance matrices
/// are built on random uniform datasets and checked for symmetry, diagonal
/// sign and eigenvalue sign.
struct PsdCheckConfig {
  int datasets = 20;      // random datasets checked per kernel
  int points_per_set = 10;
  int dim = 1;
  int theta_draws = 3;    // hyperparameter samples per dataset
  double sym_tol = 1e-8;
  double eig_tol = 1e-8;
  std::uint64_t seed = 0;
};

struct PsdVerdict {
  bool pass = true;
  std::string reason;  // empty on pass
};

/// Necessary-condition matrix test: fails on asymmetry, a negative diagonal
/// entry, a negative eigenvalue of the symmetrized matrix, or non-finite
/// entries.
PsdVerdict is_psd_matrix(const Eigen::MatrixXd& C, double sym_tol, double eig_tol);

/// Runs the matrix test on `datasets` random datasets x `theta_draws`
/// hyperparameter samples; any evaluation error also fails the kernel.
/// Passing is necessary but not sufficient for PSD-ness.
PsdVerdict validate_kernel(const KernelExpr& expr, const PsdCheckConfig& cfg,
                           const BoundsTable& bounds);

/// Same, but with fixed per-slot bounds (used for the builtin kernels whose
/// exponent slots have bespoke ranges).
PsdVerdict validate_kernel(const KernelExpr& expr, const PsdCheckConfig& cfg,
                           const ThetaVector& theta_template);

}  // namespace evocov

#endif  // EVOCOV_PSD_HPP
