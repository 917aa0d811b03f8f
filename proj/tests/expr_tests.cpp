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

#include <evocov/evolve.hpp>
#include <evocov/expr.hpp>
#include <evocov/kernels.hpp>

#include <cmath>
#include <random>

using namespace evocov;

namespace {

KernelExpr se_tree() { return builtin(BuiltinName::SE).expr; }

ThetaVector se_theta(double amp, double len, double noise) {
  ThetaVector t = builtin(BuiltinName::SE).theta_template;
  t.values = {amp, len, noise};
  return t;
}

}  // namespace

TEST_CASE("type_check accepts minimal constant kernel") {
  auto e = KernelExpr::from_root(make_node(NodeKind::HpWrap, {make_hyper(0)}));
  CHECK(!type_check(e).has_value());
  CHECK(e.hyper_count == 1);
}

TEST_CASE("type_check rejects pair-typed operand of arithmetic node") {
  auto bad = KernelExpr::from_root(make_node(
      NodeKind::Add,
      {make_const(1), make_node(NodeKind::Euc, {make_node(NodeKind::X, {})})}));
  auto err = type_check(bad);
  REQUIRE(err.has_value());
  CHECK(!err->message.empty());
  CHECK(!err->path.empty());
}

TEST_CASE("type_check accepts the squared-exponential tree") {
  CHECK(!type_check(se_tree()).has_value());
}

TEST_CASE("type_check requires a covariance-valued root") {
  auto e = KernelExpr::from_root(make_node(NodeKind::Euc, {make_node(NodeKind::X, {})}));
  CHECK(type_check(e).has_value());
}

TEST_CASE("depth counts levels from leaves") {
  CHECK(depth(KernelExpr::from_root(make_const(1))) == 1);
  CHECK(depth(KernelExpr::from_root(make_node(NodeKind::HpWrap, {make_hyper(0)}))) == 2);
  auto three = KernelExpr::from_root(make_node(
      NodeKind::Multiply,
      {make_const(2), make_node(NodeKind::HpWrap, {make_hyper(0)})}));
  CHECK(depth(three) == 3);
}

TEST_CASE("eval_kernel of the squared exponential") {
  auto e = se_tree();
  auto t = se_theta(1.0, 1.0, 0.0);
  double x0 = 0.0, x1 = 1.0;
  CHECK(eval_kernel(e, t, {&x0, 1}, {&x0, 1}) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(eval_kernel(e, t, {&x0, 1}, {&x1, 1}) ==
        doctest::Approx(std::exp(-0.5)).epsilon(1e-12));
  CHECK(std::exp(-0.5) == doctest::Approx(0.606531).epsilon(1e-6));
}

TEST_CASE("division by a zero-valued branch is a domain violation") {
  // 1 / sq_dist evaluates 1/0 whenever x == x2.
  auto e = KernelExpr::from_root(make_node(
      NodeKind::Div,
      {make_node(NodeKind::SqDist,
                 {make_node(NodeKind::Euc, {make_node(NodeKind::X, {})}),
                  make_hyper(0)})}));
  REQUIRE(!type_check(e).has_value());
  ThetaVector t;
  t.values = {1.0, 0.0};
  t.bounds.resize(2);
  double x0 = 0.5;
  CHECK_THROWS_AS(eval_kernel(e, t, {&x0, 1}, {&x0, 1}), EvalError);
  try {
    eval_kernel(e, t, {&x0, 1}, {&x0, 1});
  } catch (const EvalError& err) {
    CHECK(err.kind == EvalError::Kind::DomainViolation);
  }
}

TEST_CASE("cov_matrix of a constant kernel fills every entry") {
  auto e = KernelExpr::from_root(make_node(NodeKind::HpWrap, {make_hyper(0)}));
  ThetaVector t;
  t.values = {2.0, 0.0};
  t.bounds.resize(2);
  Eigen::MatrixXd X(3, 1);
  X << 0.0, 1.0, 2.0;
  Eigen::MatrixXd C = cov_matrix(e, t, X, X, false);
  REQUIRE(C.rows() == 3);
  REQUIRE(C.cols() == 3);
  CHECK((C.array() - 2.0).abs().maxCoeff() < 1e-14);
}

TEST_CASE("cov_matrix of the squared exponential with and without noise") {
  auto e = se_tree();
  Eigen::MatrixXd X(2, 1);
  X << 0.0, 1.0;
  Eigen::MatrixXd C = cov_matrix(e, se_theta(1.0, 1.0, 0.0), X, X, true);
  CHECK(C(0, 0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(C(1, 1) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(C(0, 1) == doctest::Approx(std::exp(-0.5)).epsilon(1e-12));
  CHECK(C(1, 0) == doctest::Approx(std::exp(-0.5)).epsilon(1e-12));

  Eigen::MatrixXd Cn = cov_matrix(e, se_theta(1.0, 1.0, 0.1), X, X, true);
  CHECK(Cn(0, 0) == doctest::Approx(1.01).epsilon(1e-12));
  CHECK(Cn(1, 1) == doctest::Approx(1.01).epsilon(1e-12));
  CHECK(Cn(0, 1) == doctest::Approx(std::exp(-0.5)).epsilon(1e-12));
}

TEST_CASE("serialization round trips and reports errors") {
  auto hp = KernelExpr::from_root(make_node(NodeKind::HpWrap, {make_hyper(0)}));
  CHECK(serialize(hp) == "(hp h0)");

  KernelExpr parsed = parse("(add (hp h0) (hp h1))");
  CHECK(parsed.hyper_count == 2);
  CHECK(parsed.root.kind == NodeKind::Add);

  CHECK_THROWS_AS(parse("(add (hp h0)"), ParseError);
  try {
    parse("(add (hp h0)");
  } catch (const ParseError& err) {
    CHECK(err.position >= 12);
  }
  CHECK_THROWS_AS(parse("(frobnicate x)"), ParseError);
}

TEST_CASE("canonical_hyper_reindex densifies and splits slots") {
  auto gappy = KernelExpr::from_root(make_node(
      NodeKind::Add, {make_node(NodeKind::HpWrap, {make_hyper(3)}),
                      make_node(NodeKind::HpWrap, {make_hyper(7)})}));
  Reindexed r = canonical_hyper_reindex(gappy);
  CHECK(r.expr.hyper_count == 2);
  REQUIRE(r.source_slot.size() == 2);
  CHECK(r.source_slot[0] == 3);
  CHECK(r.source_slot[1] == 7);
  CHECK(r.expr.root.children[0].children[0].slot == 0);
  CHECK(r.expr.root.children[1].children[0].slot == 1);

  // Already-dense trees map to themselves.
  Reindexed same = canonical_hyper_reindex(r.expr);
  CHECK(same.expr == r.expr);
  CHECK(same.source_slot == std::vector<int>{0, 1});

  // Duplicated slots (as after a subtree copy) are split apart.
  auto dup = KernelExpr::from_root(make_node(
      NodeKind::Add, {make_node(NodeKind::HpWrap, {make_hyper(0)}),
                      make_node(NodeKind::HpWrap, {make_hyper(0)})}));
  Reindexed split = canonical_hyper_reindex(dup);
  CHECK(split.expr.hyper_count == 2);
  CHECK(split.source_slot == std::vector<int>{0, 0});
}

TEST_CASE("parse after serialize is the identity on random trees") {
  std::mt19937_64 rng(20260826);
  for (int i = 0; i < 200; ++i) {
    KernelExpr e = typed_grow(2, 8, ExprType::Cov, rng);
    REQUIRE(!type_check(e).has_value());
    KernelExpr back = parse(serialize(e));
    CHECK(back == e);
    CHECK(back.hyper_count == e.hyper_count);
  }
}

TEST_CASE("covariance matrices of random kernels are symmetric") {
  std::mt19937_64 rng(7);
  BoundsTable table;
  Eigen::MatrixXd X(6, 1);
  X << 0.0, 0.17, 0.31, 0.55, 0.78, 1.0;
  int checked = 0;
  for (int i = 0; i < 100 && checked < 40; ++i) {
    KernelExpr e = typed_grow(2, 7, ExprType::Cov, rng);
    ThetaVector t = sample_theta(e, table, rng);
    try {
      Eigen::MatrixXd C = cov_matrix(e, t, X, X, false);
      CHECK((C - C.transpose()).cwiseAbs().maxCoeff() <=
            1e-9 * std::max(1.0, C.cwiseAbs().maxCoeff()));
      ++checked;
    } catch (const EvalError&) {
      // Evaluation failures are legitimate for random trees; the search
      // penalizes them.  Symmetry only applies to evaluable kernels.
    }
  }
  CHECK(checked >= 20);
}

TEST_CASE("hyper_count equals the number of hyperparameter leaves") {
  std::mt19937_64 rng(99);
  for (int i = 0; i < 100; ++i) {
    KernelExpr e = typed_grow(2, 8, ExprType::Cov, rng);
    int leaves = 0;
    std::vector<const Node*> stack{&e.root};
    while (!stack.empty()) {
      const Node* n = stack.back();
      stack.pop_back();
      if (n->kind == NodeKind::HyperArg) ++leaves;
      for (const Node& c : n->children) stack.push_back(&c);
    }
    CHECK(e.hyper_count == leaves);
  }
}
