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
#include <evocov/kernels.hpp>

#include <cmath>
#include <random>
#include <set>

using namespace evocov;

namespace {

Dataset sin_trend(int n, unsigned seed = 2) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 0.05);
  Dataset d;
  d.X.resize(n, 1);
  d.f.resize(n);
  for (int i = 0; i < n; ++i) {
    double x = static_cast<double>(i) / (n - 1);
    d.X(i, 0) = x;
    d.f(i) = std::sin(8.0 * x) + 0.5 * x + gauss(rng);
  }
  return d;
}

Individual builtin_individual(BuiltinName name, std::uint64_t seed) {
  BuiltinKernel k = builtin(name);
  Individual ind;
  ind.expr = k.expr;
  ind.theta = k.theta_template;
  ind.theta.values.assign(ind.theta.bounds.size(), 1.0);
  ind.theta.values.back() = 0.1;
  ind.seed = seed;
  return ind;
}

SearchConfig tiny_config() {
  SearchConfig cfg;
  cfg.population = 6;
  cfg.generations = 2;
  cfg.mu = 2;
  cfg.d_min = 2;
  cfg.d_max = 6;
  cfg.ref_fun_call = 30;
  cfg.seed = 1234;
  return cfg;
}

}  // namespace

TEST_CASE("random tree growth honors type and depth constraints") {
  std::mt19937_64 rng(100);
  int undershoot = 0;
  for (int i = 0; i < 500; ++i) {
    KernelExpr e = typed_grow(5, 15, ExprType::Cov, rng);
    REQUIRE(!type_check(e).has_value());
    CHECK(depth(e) <= 15);
    if (depth(e) < 5) ++undershoot;
  }
  CHECK(undershoot <= 25);  // at most 5%
}

TEST_CASE("depth-one covariance requests yield constants") {
  std::mt19937_64 rng(101);
  for (int i = 0; i < 100; ++i) {
    KernelExpr e = typed_grow(1, 1, ExprType::Cov, rng);
    CHECK(e.root.kind == NodeKind::Const);
  }
}

TEST_CASE("hyperparameter requests yield argument leaves") {
  std::mt19937_64 rng(102);
  for (int d : {1, 3, 8}) {
    KernelExpr e = typed_grow(1, d, ExprType::Hyper, rng);
    CHECK(e.root.kind == NodeKind::HyperArg);
  }
}

TEST_CASE("random population generation validates and is deterministic") {
  SearchConfig cfg = tiny_config();
  std::mt19937_64 rng(50);
  CHECK(gen_rand_pop(0, cfg, rng).empty());

  std::mt19937_64 r1(50), r2(50);
  auto p1 = gen_rand_pop(10, cfg, r1);
  auto p2 = gen_rand_pop(10, cfg, r2);
  REQUIRE(p1.size() == 10);
  for (std::size_t i = 0; i < p1.size(); ++i) {
    CHECK(!p1[i].evaluated);
    CHECK(!type_check(p1[i].expr).has_value());
    CHECK(validate_kernel(p1[i].expr, cfg.psd, cfg.bounds).pass);
    CHECK(serialize(p1[i].expr) == serialize(p2[i].expr));
  }
}

TEST_CASE("crossover joins parents under a sum or product") {
  SearchConfig cfg = tiny_config();
  std::mt19937_64 rng(7);
  Individual a = builtin_individual(BuiltinName::SE, 1);
  Individual b = builtin_individual(BuiltinName::PER, 2);
  for (int i = 0; i < 20; ++i) {
    Individual child = crossover(a, b, cfg, rng);
    CHECK(!type_check(child.expr).has_value());
    CHECK(depth(child.expr) <= cfg.o_max);
    CHECK((child.expr.root.kind == NodeKind::Add ||
           child.expr.root.kind == NodeKind::Multiply));
  }
}

TEST_CASE("crossover with no retries falls back to a parent copy") {
  SearchConfig cfg = tiny_config();
  cfg.rho_max = 0;
  std::mt19937_64 rng(8);
  Individual a = builtin_individual(BuiltinName::SE, 1);
  Individual b = builtin_individual(BuiltinName::PER, 2);
  Individual child = crossover(a, b, cfg, rng);
  CHECK((child.expr == a.expr || child.expr == b.expr));
}

TEST_CASE("mutations stay type-correct and within the depth cap") {
  SearchConfig cfg = tiny_config();
  std::mt19937_64 rng(9);
  Individual a = builtin_individual(BuiltinName::SE, 1);
  std::set<std::string> lineages;
  for (int i = 0; i < 300; ++i) {
    Individual child = mutate(a, cfg, rng);
    REQUIRE(!type_check(child.expr).has_value());
    CHECK(depth(child.expr) <= cfg.o_max);
    lineages.insert(child.lineage);
  }
  // All four mutation methods should be reachable in 300 draws.
  CHECK(lineages.size() >= 4);
}

TEST_CASE("node replacement can turn a sum into a product") {
  SearchConfig cfg = tiny_config();
  std::mt19937_64 rng(10);
  BuiltinKernel se = builtin(BuiltinName::SE);
  Individual a;
  a.expr = canonical_hyper_reindex(KernelExpr::from_root(make_node(
               NodeKind::Add, {se.expr.root, se.expr.root}))).expr;
  a.theta = make_theta(a.expr, cfg.bounds);
  a.theta.values.assign(a.theta.bounds.size(), 1.0);
  bool product_seen = false;
  for (int i = 0; i < 400 && !product_seen; ++i) {
    Individual child = mutate(a, cfg, rng);
    if (child.lineage == "mutate-node-replacement" &&
        child.expr.root.kind == NodeKind::Multiply) {
      product_seen = true;
    }
  }
  CHECK(product_seen);
}

TEST_CASE("shrink reduces a product to one of its factors") {
  SearchConfig cfg = tiny_config();
  std::mt19937_64 rng(11);
  BuiltinKernel se = builtin(BuiltinName::SE);
  Individual a;
  a.expr = KernelExpr::from_root(
      make_node(NodeKind::Multiply, {make_const(2), se.expr.root}));
  a.theta = make_theta(a.expr, cfg.bounds);
  a.theta.values.assign(a.theta.bounds.size(), 1.0);
  bool shrunk_to_factor = false;
  for (int i = 0; i < 400 && !shrunk_to_factor; ++i) {
    Individual child = mutate(a, cfg, rng);
    if (child.lineage == "mutate-shrink" &&
        (child.expr.root == make_const(2) || child.expr.root == se.expr.root)) {
      shrunk_to_factor = true;
    }
  }
  CHECK(shrunk_to_factor);
}

TEST_CASE("truncation selection orders by fitness with complexity tie-breaks") {
  std::vector<Individual> pop(3);
  pop[0].fitness = 3.0;
  pop[1].fitness = 1.0;
  pop[2].fitness = 2.0;
  auto sel = select(pop, 2);
  REQUIRE(sel.size() == 2);
  CHECK(sel[0].fitness == 1.0);
  CHECK(sel[1].fitness == 2.0);

  // Equal fitness: the kernel with fewer hyperparameters wins.
  std::vector<Individual> tie(2);
  tie[0].expr = builtin(BuiltinName::PER).expr;  // 3 slots
  tie[1].expr = builtin(BuiltinName::SE).expr;   // 2 slots
  tie[0].fitness = tie[1].fitness = 5.0;
  auto picked = select(tie, 1);
  REQUIRE(picked.size() == 1);
  CHECK(picked[0].expr.hyper_count == 2);

  CHECK(select(pop, 0).empty());
  CHECK(select(pop, 10).size() == 3);
}

TEST_CASE("variation produces only mutants when crossover is disabled") {
  SearchConfig cfg = tiny_config();
  cfg.p_m = 1.0;
  std::mt19937_64 rng(12);
  std::vector<Individual> sel = {builtin_individual(BuiltinName::SE, 1),
                                 builtin_individual(BuiltinName::PER, 2)};
  auto kids = variate(sel, 10, cfg, rng);
  REQUIRE(kids.size() == 10);
  for (const Individual& k : kids) {
    CHECK(k.lineage.rfind("mutate", 0) == 0);
  }
}

TEST_CASE("variation with a single parent falls back to mutation") {
  SearchConfig cfg = tiny_config();
  cfg.p_m = 0.0;  // crossover-only, but impossible with one parent
  std::mt19937_64 rng(13);
  std::vector<Individual> sel = {builtin_individual(BuiltinName::SE, 1)};
  auto kids = variate(sel, 5, cfg, rng);
  REQUIRE(kids.size() == 5);
  for (const Individual& k : kids) {
    CHECK(k.lineage.rfind("mutate", 0) == 0);
  }
}

TEST_CASE("population evaluation assigns finite fitness to sound kernels") {
  SearchConfig cfg = tiny_config();
  Dataset d = sin_trend(24);
  std::vector<Individual> pop = {builtin_individual(BuiltinName::SE, 21),
                                 builtin_individual(BuiltinName::CON, 22)};
  SearchStats stats;
  evaluate_population(pop, d, cfg, &stats);
  for (const Individual& ind : pop) {
    CHECK(ind.evaluated);
    CHECK(std::isfinite(ind.fitness));
    CHECK(ind.fitness < kPenalty);
  }
  // The flexible kernel should not lose to the constant on wavy data.
  CHECK(pop[0].fitness <= pop[1].fitness);
}

TEST_CASE("re-evaluating a survivor never worsens its fitness") {
  SearchConfig cfg = tiny_config();
  cfg.sigma_theta = 0.0;
  Dataset d = sin_trend(24);
  std::vector<Individual> pop = {builtin_individual(BuiltinName::SE, 77)};
  evaluate_population(pop, d, cfg);
  double first = pop[0].fitness;
  evaluate_population(pop, d, cfg);
  CHECK(pop[0].fitness <= first + 1e-9);
}

TEST_CASE("full search runs and is deterministic under a fixed seed") {
  SearchConfig cfg = tiny_config();
  Dataset d = sin_trend(24);
  int generations_seen = 0;
  Individual best = evocov_search(d, cfg, [&](const GenTelemetry& t) {
    ++generations_seen;
    CHECK(std::isfinite(t.mean_bic));
  });
  CHECK(best.evaluated);
  CHECK(std::isfinite(best.fitness));
  CHECK(generations_seen == cfg.generations);

  Individual again = evocov_search(d, cfg);
  CHECK(serialize(again.expr) == serialize(best.expr));
  CHECK(again.fitness == best.fitness);
  CHECK(again.theta.values == best.theta.values);
}

TEST_CASE("single-generation search returns the best random individual") {
  SearchConfig cfg = tiny_config();
  cfg.generations = 1;
  Dataset d = sin_trend(20);
  Individual best = evocov_search(d, cfg);
  CHECK(best.evaluated);
  CHECK(std::isfinite(best.fitness));
}

TEST_CASE("baseline searches return evaluated winners") {
  SearchConfig cfg = tiny_config();
  cfg.random_search_population = 8;
  cfg.gw_population = 3;
  cfg.gw_climb_steps = 2;
  Dataset d = sin_trend(20);

  Individual rs = random_search(d, cfg);
  CHECK(rs.evaluated);
  CHECK(std::isfinite(rs.fitness));

  Individual gw = go_with_the_first(d, cfg);
  CHECK(gw.evaluated);
  CHECK(std::isfinite(gw.fitness));
}
