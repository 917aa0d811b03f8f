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

#include <doctest.h>

#include <evocov/gp.hpp>
#include <evocov/hyperopt.hpp>
#include <evocov/kernels.hpp>

#include <cmath>
#include <random>

using namespace evocov;

namespace {

Dataset smooth_series(int n, unsigned seed = 3) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 0.05);
  Dataset d;
  d.X.resize(n, 1);
  d.f.resize(n);
  for (int i = 0; i < n; ++i) {
    double x = static_cast<double>(i) / (n - 1);
    d.X(i, 0) = x;
    d.f(i) = std::sin(4.0 * x) + 0.3 * x + gauss(rng);
  }
  return d;
}

}  // namespace

TEST_CASE("line minimizer finds a quadratic minimum") {
  auto quad = [](const Eigen::VectorXd& x) { return (x(0) - 3.0) * (x(0) - 3.0); };
  Eigen::VectorXd x0(1);
  x0 << 0.0;
  PowellResult r = powell_minimize(quad, x0, {});
  CHECK(std::abs(r.x(0) - 3.0) < 1e-6);
  CHECK(r.f < 1e-10);
}

TEST_CASE("Rosenbrock valley is solved within the evaluation budget") {
  auto rosen = [](const Eigen::VectorXd& v) {
    double a = 1.0 - v(0);
    double b = v(1) - v(0) * v(0);
    return a * a + 100.0 * b * b;
  };
  Eigen::VectorXd x0(2);
  x0 << -1.2, 1.0;
  PowellOptions opts;
  opts.max_evals = 5000;
  opts.ftol = 1e-12;
  PowellResult r = powell_minimize(rosen, x0, opts);
  CHECK(r.f < 1e-4);
  CHECK(r.evals <= 5000 + 2 * opts.line_eval_cap);
}

TEST_CASE("an exhausted budget returns the starting point") {
  auto quad = [](const Eigen::VectorXd& x) { return x.squaredNorm(); };
  Eigen::VectorXd x0(2);
  x0 << 4.0, -1.0;
  PowellOptions opts;
  opts.max_evals = 1;
  PowellResult r = powell_minimize(quad, x0, opts);
  CHECK(r.x == x0);
  CHECK(r.f == doctest::Approx(17.0));
}

TEST_CASE("objective wrapper flips orientation and penalizes") {
  BuiltinKernel se = builtin(BuiltinName::SE);
  Dataset d = smooth_series(20);
  auto obj = penalized_objective(se.expr, d, MetricKind::LML, se.theta_template);

  Eigen::VectorXd inside(3);
  inside << 1.0, 0.5, 0.1;
  ThetaVector t = se.theta_template;
  t.values = {1.0, 0.5, 0.1};
  CHECK(obj(inside) ==
        doctest::Approx(-log_marginal_likelihood(se.expr, t, d)).epsilon(1e-12));

  // One unit above the amplitude's upper bound: penalty plus squared distance.
  Eigen::VectorXd outside = inside;
  outside(0) = se.theta_template.bounds[0].hi + 1.0;
  CHECK(obj(outside) == doctest::Approx(kPenalty + 1.0).epsilon(1e-9));

  // A kernel dividing by zero on the diagonal is penalized flat.
  auto div_zero = KernelExpr::from_root(make_node(
      NodeKind::Div,
      {make_node(NodeKind::SqDist,
                 {make_node(NodeKind::Euc, {make_node(NodeKind::X, {})}),
                  make_hyper(0)})}));
  ThetaVector tmpl;
  tmpl.bounds = {SlotBounds{}, SlotBounds{}};
  tmpl.values = {1.0, 0.1};
  auto bad = penalized_objective(div_zero, d, MetricKind::LML, tmpl);
  Eigen::VectorXd p(2);
  p << 1.0, 0.1;
  CHECK(bad(p) == doctest::Approx(kPenalty));
}

TEST_CASE("evaluation budget follows the quadratic length scaling") {
  CHECK(OptBudget{300, 100}.max_fun_call() == 3675);
  CHECK(OptBudget{300, 350}.max_fun_call() == 300);
  CHECK(OptBudget{300, 1000}.max_fun_call() == 36);
}

TEST_CASE("hyperparameter search beats the data-generating parameters floor") {
  BuiltinKernel se = builtin(BuiltinName::SE);
  Dataset d = smooth_series(40);
  OptBudget budget{2000, 350};
  OptResult r = optimize_hyperparams(se.expr, d, MetricKind::LML, budget,
                                     InitStrategy::uniform(), se.theta_template, 9);
  CHECK(!r.all_penalized);
  CHECK(r.theta_best.values.size() == 3);
  CHECK(r.fun_calls_used > 0);
  // The optimum cannot be much worse than any hand-picked feasible point.
  ThetaVector hand = se.theta_template;
  hand.values = {1.0, 0.3, 0.05};
  double hand_score = -log_marginal_likelihood(se.expr, hand, d);
  CHECK(r.score_best <= hand_score + 2.0);
}

TEST_CASE("exact self-inheritance never worsens the score") {
  BuiltinKernel se = builtin(BuiltinName::SE);
  Dataset d = smooth_series(30);
  OptBudget budget{400, 350};
  OptResult first = optimize_hyperparams(se.expr, d, MetricKind::LML, budget,
                                         InitStrategy::uniform(),
                                         se.theta_template, 17);
  OptResult second = optimize_hyperparams(
      se.expr, d, MetricKind::LML, budget,
      InitStrategy::inherited(first.theta_best.values, 0.0), se.theta_template,
      18);
  CHECK(second.score_best <= first.score_best + 1e-9);
}

TEST_CASE("optimization is deterministic under a fixed seed") {
  BuiltinKernel rq = builtin(BuiltinName::RQ);
  Dataset d = smooth_series(25);
  OptBudget budget{200, 350};
  OptResult a = optimize_hyperparams(rq.expr, d, MetricKind::LOOCV, budget,
                                     InitStrategy::uniform(), rq.theta_template, 5);
  OptResult b = optimize_hyperparams(rq.expr, d, MetricKind::LOOCV, budget,
                                     InitStrategy::uniform(), rq.theta_template, 5);
  CHECK(a.score_best == b.score_best);
  CHECK(a.theta_best.values == b.theta_best.values);
  CHECK(a.fun_calls_used == b.fun_calls_used);
  CHECK(a.restarts == b.restarts);
}
