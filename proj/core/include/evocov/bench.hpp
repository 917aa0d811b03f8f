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

#ifndef EVOCOV_BENCH_HPP
#define EVOCOV_BENCH_HPP

#include "evocov/evolve.hpp"
#include "evocov/gp.hpp"
#include "evocov/kernels.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace evocov {

/// Affine maps applied at load time: x_norm = (x - x_shift) / x_scale,
/// f_norm = (f - f_shift) / f_scale.  Stored so predictions can be reported
/// in original units exactly.
struct Normalization {
  double x_shift = 0.0;
  double x_scale = 1.0;
  double f_shift = 0.0;
  double f_scale = 1.0;
};

struct SeriesSpec {
  std::string name;
  std::string path;
  Eigen::Index n = 0;
  Normalization norm;
};

/// A time series ready for the protocol: normalized Dataset plus the raw
/// columns for original-unit reporting.
struct LoadedSeries {
  Dataset data;  // X in [0,1], f z-scored
  SeriesSpec spec;
  Eigen::VectorXd t_raw;
  Eigen::VectorXd y_raw;
};

struct IOError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct FormatError : std::runtime_error {
  std::size_t line;
  FormatError(std::size_t line, const std::string& message);
};

/// CSV with a header and columns (t, y), or a single column of y values
/// (the row index becomes t).  Rejects NaN rows and non-increasing time.
LoadedSeries load_series(const std::string& path, const std::string& name = "");

/// Chronological 90/10 split: first floor(0.9 n) rows train, rest test.
/// The test side is reporting-only and never reaches a metric or search.
std::pair<Dataset, Dataset> protocol_split(const Dataset& ds);

enum class Algorithm { EvoCov, RandomSearch, GoWithTheFirst, FixedBuiltin };

const char* to_string(Algorithm a);
Algorithm algorithm_from_string(const std::string& name);

struct TrialReport {
  std::string series;
  std::string algorithm;
  std::uint64_t seed = 0;
  std::string best_expr;
  std::vector<double> theta;
  int q = 0;  // hyperparameter slot count of the best kernel
  double test_rmse = 0.0;  // original units, final 10% only
  double wall_time_s = 0.0;  // not serialized: reports stay byte-deterministic
  std::string telemetry_path;
  std::string predictions_path;
  bool failed = false;
  std::string error;
};

struct RunOptions {
  SearchConfig search;
  Algorithm algorithm = Algorithm::EvoCov;
  BuiltinName fixed_kernel = BuiltinName::SE;  // FixedBuiltin only
  int trials = 10;
  std::string out_dir = ".";
  std::uint64_t master_seed = 0;
  int jobs = 1;
};

/// Runs trials x series, appending to <out_dir>/reports.jsonl as each trial
/// finishes.  Completed (series, algorithm, seed) triples found in an
/// existing report file are skipped, so interrupted runs resume.  Per-trial
/// failures are recorded in the report, not thrown.
std::vector<TrialReport> run_trials(const std::vector<LoadedSeries>& series,
                                    const RunOptions& opt);

/// One trial in isolation (used by run_trials and the tests).
TrialReport run_single_trial(const LoadedSeries& series, const RunOptions& opt,
                             std::uint64_t seed);

struct RmseTable {
  std::vector<std::string> algorithms;          // columns
  std::vector<std::string> series;              // rows
  std::vector<std::vector<double>> values;      // [row][col], NaN = missing
  std::vector<double> mean_row;
  std::vector<double> median_row;
};

/// Per-series RMSE means divided by the series minimum (1 = best).  External
/// baseline minima may be injected per series to reproduce published
/// normalizations without implementing the competitor systems.
RmseTable standardized_rmse(const std::vector<TrialReport>& reports,
                            const std::map<std::string, double>& external_min = {});

/// Mean hyperparameter count per (series, algorithm).
RmseTable hyperparam_table(const std::vector<TrialReport>& reports);

std::string to_csv(const RmseTable& table);
std::string to_text(const RmseTable& table);

struct MetricCompareResult {
  std::vector<MetricKind> metrics;          // columns
  std::vector<std::string> series;          // rows
  std::vector<std::vector<double>> avg_rmse;  // original units
};

/// Fits a fixed kernel on every series once per (metric, trial) from random
/// starts and reports the average test RMSE per metric.
MetricCompareResult metric_comparison(const std::vector<LoadedSeries>& series,
                                      const KernelExpr& kernel,
                                      const ThetaVector& theta_template,
                                      const std::vector<MetricKind>& metrics,
                                      int ref_fun_call = 5000, int trials = 10,
                                      std::uint64_t seed = 0, int jobs = 1);

std::string to_csv(const MetricCompareResult& r);
std::string to_text(const MetricCompareResult& r);

}  // namespace evocov

#endif  // EVOCOV_BENCH_HPP
