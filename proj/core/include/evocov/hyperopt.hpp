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

#ifndef EVOCOV_HYPEROPT_HPP
#define EVOCOV_HYPEROPT_HPP

#include "evocov/bounds.hpp"
#include "evocov/expr.hpp"
#include "evocov/gp.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <limits>

namespace evocov {

inline constexpr double kPenalty = 1e12;

/// Function-evaluation budget, scaled quadratically with series length so the
/// wall-clock cost of one hyperparameter optimization stays roughly constant.
struct OptBudget {
  int ref_fun_call = 300;
  int series_len = 350;

  int max_fun_call() const;
};

/// How restarts draw their starting point.  Without inheritance every restart
/// samples the init distribution; with it, the first restart uses the mapped
/// parent values exactly and later restarts add Gaussian noise sigma.
/// Unmapped entries (NaN in center) are always drawn fresh.
struct InitStrategy {
  bool inherit = false;
  std::vector<double> center;  // size q+1 when inherit; NaN marks unmapped
  double sigma = 0.1;

  static InitStrategy uniform() { return {}; }
  static InitStrategy inherited(std::vector<double> center, double sigma);
};

struct OptResult {
  ThetaVector theta_best;
  double score_best = std::numeric_limits<double>::infinity();  // minimized
  int fun_calls_used = 0;
  int restarts = 0;
  bool all_penalized = true;
};

struct PowellOptions {
  double ftol = 1e-6;
  int max_evals = 1000;
  int line_eval_cap = 25;
};

struct PowellResult {
  Eigen::VectorXd x;
  double f = std::numeric_limits<double>::infinity();
  int evals = 0;
};

/// Conjugate-direction minimization without derivatives.  Never returns a
/// point worse than x0; stops on relative improvement < ftol over a full
/// sweep or budget exhaustion.
PowellResult powell_minimize(const std::function<double(const Eigen::VectorXd&)>& objective,
                             const Eigen::VectorXd& x0, const PowellOptions& opts);

/// Wraps a metric as a total minimization objective: orientation-normalized,
/// out-of-bounds points get kPenalty plus the squared violation distance,
/// evaluation/factorization failures get kPenalty.
std::function<double(const Eigen::VectorXd&)> penalized_objective(
    const KernelExpr& expr, const Dataset& train, MetricKind metric,
    const ThetaVector& theta_template);

/// Multi-start Powell within the budget.  theta_template supplies per-slot
/// bounds and init distributions.
OptResult optimize_hyperparams(const KernelExpr& expr, const Dataset& train,
                               MetricKind metric, const OptBudget& budget,
                               const InitStrategy& init,
                               const ThetaVector& theta_template,
                               std::uint64_t seed,
                               const PowellOptions& powell = {});

}  // namespace evocov

#endif  // EVOCOV_HYPEROPT_HPP
