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

#ifndef EVOCOV_EVOLVE_HPP
#define EVOCOV_EVOLVE_HPP

#include "evocov/bounds.hpp"
#include "evocov/expr.hpp"
#include "evocov/gp.hpp"
#include "evocov/hyperopt.hpp"
#include "evocov/psd.hpp"

#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

namespace evocov {

struct Individual {
  KernelExpr expr;
  ThetaVector theta;
  double fitness = std::numeric_limits<double>::infinity();  // BIC, minimized
  double metric_score = std::numeric_limits<double>::infinity();
  bool evaluated = false;
  std::string lineage;  // operator tag, for telemetry
  std::uint64_t seed = 0;
  /// Pending initialization for the next evaluation (inheritance from
  /// parents for variation products, uniform for random individuals).
  InitStrategy init;
};

struct SearchConfig {
  int population = 141;       // N
  int generations = 141;      // G
  int mu = 14;                // truncation-selection survivors
  double p_m = 0.4;           // mutation probability (p_cx = 1 - p_m)
  double beta = 1e-5;         // restart threshold on relative improvement
  int d_min = 5;
  int d_max = 15;
  int o_max = 40;             // bloat-control depth cap
  int rho_max = 250;          // variation retry cap
  double sigma_theta = 0.1;   // inheritance noise
  int ref_fun_call = 300;
  int series_len = 0;         // 0: use the training-set size for the budget
  MetricKind metric = MetricKind::LML;
  PsdCheckConfig psd;
  BoundsTable bounds;
  PowellOptions powell;
  std::uint64_t seed = 0;
  int jobs = 1;

  // Baseline parameters.
  int random_search_population = 20000;
  int gw_population = 13;   // Go-With-The-First initial population
  int gw_climb_steps = 200; // hill-climbing evaluations per individual

  double p_cx() const { return 1.0 - p_m; }
  OptBudget budget_for(const Dataset& train) const;
};

struct SearchStats {
  long psd_attempts = 0;
  long psd_rejects = 0;
  long eval_errors = 0;  // penalized evaluations
};

struct GenTelemetry {
  int gen = 0;
  double best_bic = 0.0;
  double mean_bic = 0.0;
  int restarts = 0;
  double psd_reject_rate = 0.0;
  long eval_errors = 0;
};

using TelemetrySink = std::function<void(const GenTelemetry&)>;

/// Strongly-typed grow: recursive random construction honoring depth bounds.
/// Slots are allocated on demand and densely renumbered before return.
KernelExpr typed_grow(int d_min, int d_max, ExprType want, std::mt19937_64& rng);

/// Random kernels filtered through the PSD validity check until N pass.
std::vector<Individual> gen_rand_pop(int n, const SearchConfig& cfg,
                                     std::mt19937_64& rng,
                                     SearchStats* stats = nullptr);

/// Joins a random Cov subtree of each parent under add or multiply.  Retries
/// on PSD failure or depth overflow up to rho_max; on exhaustion one parent
/// is returned unchanged.
Individual crossover(const Individual& a, const Individual& b,
                     const SearchConfig& cfg, std::mt19937_64& rng,
                     SearchStats* stats = nullptr);

/// One of insert / shrink / uniform / node-replacement, type-safe, with the
/// same retry-or-parent-copy policy as crossover.
Individual mutate(const Individual& a, const SearchConfig& cfg,
                  std::mt19937_64& rng, SearchStats* stats = nullptr);

std::vector<Individual> variate(const std::vector<Individual>& sel, int count,
                                const SearchConfig& cfg, std::mt19937_64& rng,
                                SearchStats* stats = nullptr);

/// Optimizes hyperparameters and assigns BIC fitness for every individual,
/// including already-evaluated survivors (which self-inherit exactly).
void evaluate_population(std::vector<Individual>& pop, const Dataset& train,
                         const SearchConfig& cfg, SearchStats* stats = nullptr);

/// Truncation selection: mu lowest-BIC individuals; ties broken by fewer
/// hyperparameters, then smaller depth, then insertion order.
std::vector<Individual> select(const std::vector<Individual>& pop, int mu);

Individual evocov_search(const Dataset& train, const SearchConfig& cfg,
                  const TelemetrySink& sink = {});

Individual random_search(const Dataset& train, const SearchConfig& cfg,
                         const TelemetrySink& sink = {});

Individual go_with_the_first(const Dataset& train, const SearchConfig& cfg,
                             const TelemetrySink& sink = {});

}  // namespace evocov

#endif  // EVOCOV_EVOLVE_HPP
