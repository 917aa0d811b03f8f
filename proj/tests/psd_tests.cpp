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

#include <evocov/kernels.hpp>
#include <evocov/psd.hpp>

#include <limits>

using namespace evocov;

TEST_CASE("matrix check accepts PSD fixtures") {
  CHECK(is_psd_matrix(Eigen::MatrixXd::Identity(3, 3), 1e-8, 1e-8).pass);
  CHECK(is_psd_matrix(Eigen::MatrixXd::Zero(2, 2), 1e-8, 1e-8).pass);
}

TEST_CASE("matrix check rejects the indefinite 2x2 fixture") {
  Eigen::MatrixXd C(2, 2);
  C << 1, 2, 2, 1;  // eigenvalues 3 and -1
  PsdVerdict v = is_psd_matrix(C, 1e-8, 1e-8);
  CHECK(!v.pass);
  CHECK(!v.reason.empty());
}

TEST_CASE("matrix check rejects asymmetry, negative diagonal and NaN") {
  Eigen::MatrixXd A(2, 2);
  A << 1, 0.5, -0.5, 1;
  CHECK(!is_psd_matrix(A, 1e-8, 1e-8).pass);

  Eigen::MatrixXd D = Eigen::MatrixXd::Identity(2, 2);
  D(1, 1) = -0.5;
  CHECK(!is_psd_matrix(D, 1e-8, 1e-8).pass);

  Eigen::MatrixXd N = Eigen::MatrixXd::Identity(2, 2);
  N(0, 1) = std::numeric_limits<double>::quiet_NaN();
  CHECK(!is_psd_matrix(N, 1e-8, 1e-8).pass);
}

TEST_CASE("every builtin kernel passes the stochastic validator") {
  PsdCheckConfig cfg;
  cfg.seed = 5;
  for (BuiltinName name : kAllBuiltins) {
    BuiltinKernel k = builtin(name);
    PsdVerdict v = validate_kernel(k.expr, cfg, k.theta_template);
    CHECK_MESSAGE(v.pass, to_string(name), ": ", v.reason);
  }
}

TEST_CASE("negated kernel fails the validator on its diagonal") {
  BuiltinKernel se = builtin(BuiltinName::SE);
  auto negated = KernelExpr::from_root(
      make_node(NodeKind::Multiply, {make_const(-1), se.expr.root}));
  PsdCheckConfig cfg;
  cfg.seed = 5;
  CHECK(!validate_kernel(negated, cfg, BoundsTable{}).pass);
}

TEST_CASE("sums and products of passing kernels pass") {
  BuiltinKernel se = builtin(BuiltinName::SE);
  BuiltinKernel per = builtin(BuiltinName::PER);
  auto sum = canonical_hyper_reindex(KernelExpr::from_root(make_node(
                 NodeKind::Add, {se.expr.root, per.expr.root})))
                 .expr;
  auto product = canonical_hyper_reindex(KernelExpr::from_root(make_node(
                     NodeKind::Multiply, {se.expr.root, per.expr.root})))
                     .expr;
  PsdCheckConfig cfg;
  cfg.seed = 5;
  CHECK(validate_kernel(sum, cfg, BoundsTable{}).pass);
  CHECK(validate_kernel(product, cfg, BoundsTable{}).pass);
}

TEST_CASE("validator verdicts are deterministic under a fixed seed") {
  BuiltinKernel rq = builtin(BuiltinName::RQ);
  PsdCheckConfig cfg;
  cfg.seed = 42;
  PsdVerdict a = validate_kernel(rq.expr, cfg, rq.theta_template);
  PsdVerdict b = validate_kernel(rq.expr, cfg, rq.theta_template);
  CHECK(a.pass == b.pass);
  CHECK(a.reason == b.reason);
}
