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
#include "evocov/kernels.hpp"

#include <benchmark/benchmark.h>

#include <random>

namespace {

using namespace evocov;

Dataset make_data(int n) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> g;
  Dataset d;
  d.X.resize(n, 1);
  d.f.resize(n);
  for (int i = 0; i < n; ++i) {
    d.X(i, 0) = double(i) / double(n - 1);
    d.f(i) = std::sin(20.0 * d.X(i, 0)) + 0.05 * g(rng);
  }
  return d;
}

ThetaVector se_theta(const BuiltinKernel& bk) {
  ThetaVector t = bk.theta_template;
  t.values = {1.0, 0.2, 0.05};
  return t;
}

void BM_CovMatrix(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  BuiltinKernel bk = builtin(BuiltinName::SE);
  ThetaVector theta = se_theta(bk);
  Dataset d = make_data(n);
  for (auto _ : state) {
    Eigen::MatrixXd K = cov_matrix(bk.expr, theta, d.X, d.X, true);
    benchmark::DoNotOptimize(K.data());
  }
}
BENCHMARK(BM_CovMatrix)->Arg(100)->Arg(350)->Arg(1000);

void BM_LogMarginalLikelihood(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  BuiltinKernel bk = builtin(BuiltinName::SE);
  ThetaVector theta = se_theta(bk);
  Dataset d = make_data(n);
  for (auto _ : state) {
    double lml = log_marginal_likelihood(bk.expr, theta, d);
    benchmark::DoNotOptimize(lml);
  }
}
BENCHMARK(BM_LogMarginalLikelihood)->Arg(100)->Arg(350);

void BM_Loocv(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  BuiltinKernel bk = builtin(BuiltinName::SE);
  ThetaVector theta = se_theta(bk);
  Dataset d = make_data(n);
  for (auto _ : state) {
    double v = loocv(bk.expr, theta, d);
    benchmark::DoNotOptimize(v);
  }
}
BENCHMARK(BM_Loocv)->Arg(100)->Arg(350);

}  // namespace

BENCHMARK_MAIN();
