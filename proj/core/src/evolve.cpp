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

#include "evocov/evolve.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <thread>
#include <tuple>

namespace evocov {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Slot-id bases marking the origin of hyperparameter leaves while a
// variation product is assembled; canonical_hyper_reindex flattens them.
constexpr int kFreshBase = 1 << 20;   // new leaves: no inherited value
constexpr int kParentBBase = 1 << 21; // crossover: slot of the second parent

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

struct Candidate {
  NodeKind kind;
  double cval = 0.0;
};

void append_terminals(ExprType t, std::vector<Candidate>& out) {
  switch (t) {
    case ExprType::Cov:
      for (double v : kConstValues) out.push_back({NodeKind::Const, v});
      break;
    case ExprType::Hyper:
      out.push_back({NodeKind::HyperArg});
      break;
    case ExprType::InputPair:
      out.push_back({NodeKind::X});
      break;
    case ExprType::TransformedPair:
      break;
  }
}

// Depth of the shortest full chain each not-nestable operator completes
// into: sq_dist/dot_prod need a transformed pair underneath (3 levels),
// euc/spectral/hp close out in 2.  A not-nestable is only offered when its
// chain fits between the remaining minimum and maximum depth, so it can
// neither undershoot d_min nor overshoot d_max.
int completion_depth(NodeKind k) {
  return (k == NodeKind::SqDist || k == NodeKind::DotProd) ? 3 : 2;
}

void append_not_nestable(ExprType t, int d_min, int d_max,
                         std::vector<Candidate>& out) {
  auto add = [&](NodeKind k) {
    if (d_min <= completion_depth(k) && completion_depth(k) <= d_max)
      out.push_back({k});
  };
  switch (t) {
    case ExprType::Cov:
      add(NodeKind::SqDist);
      add(NodeKind::DotProd);
      add(NodeKind::HpWrap);
      break;
    case ExprType::TransformedPair:
      add(NodeKind::Euc);
      add(NodeKind::Spectral);
      break;
    default:
      break;
  }
}

void append_any_not_nestable(ExprType t, std::vector<Candidate>& out) {
  append_not_nestable(t, 0, 1 << 20, out);
}

void append_nestable(ExprType t, std::vector<Candidate>& out) {
  if (t != ExprType::Cov) return;
  for (NodeKind k : {NodeKind::Power, NodeKind::Add, NodeKind::Multiply,
                     NodeKind::Div, NodeKind::Exp, NodeKind::Sqrt, NodeKind::Square})
    out.push_back({k});
}

Node grow_node(int d_min, int d_max, ExprType want, std::mt19937_64& rng,
               int& next_slot) {
  std::vector<Candidate> cand;
  if (d_min <= 3) {
    append_not_nestable(want, d_min, d_max, cand);
    if (d_min <= 1) append_terminals(want, cand);
  }
  if (4 <= d_max) append_nestable(want, cand);
  if (cand.empty()) {
    append_terminals(want, cand);
    append_any_not_nestable(want, cand);
    append_nestable(want, cand);
  }
  const Candidate& c = cand[std::uniform_int_distribution<std::size_t>(
      0, cand.size() - 1)(rng)];
  switch (c.kind) {
    case NodeKind::X:
      return make_node(NodeKind::X, {});
    case NodeKind::HyperArg:
      return make_hyper(next_slot++);
    case NodeKind::Const:
      return make_const(c.cval);
    default: {
      const Signature& sig = signature(c.kind);
      std::vector<Node> children;
      children.reserve(static_cast<std::size_t>(sig.arity));
      for (int i = 0; i < sig.arity; ++i)
        children.push_back(grow_node(d_min - 1, d_max - 1, sig.in[static_cast<std::size_t>(i)],
                                     rng, next_slot));
      return make_node(c.kind, std::move(children));
    }
  }
}

void offset_slots(Node& n, int delta) {
  if (n.kind == NodeKind::HyperArg) n.slot += delta;
  for (Node& c : n.children) offset_slots(c, delta);
}

void all_paths(const Node& n, std::vector<int>& path,
               std::vector<std::vector<int>>& out) {
  out.push_back(path);
  for (int i = 0; i < static_cast<int>(n.children.size()); ++i) {
    path.push_back(i);
    all_paths(n.children[static_cast<std::size_t>(i)], path, out);
    path.pop_back();
  }
}

std::vector<std::vector<int>> all_paths(const Node& root) {
  std::vector<std::vector<int>> out;
  std::vector<int> path;
  all_paths(root, path, out);
  return out;
}

template <typename T>
const T& pick(const std::vector<T>& v, std::mt19937_64& rng) {
  return v[std::uniform_int_distribution<std::size_t>(0, v.size() - 1)(rng)];
}

double rand_const(std::mt19937_64& rng) {
  return kConstValues[std::uniform_int_distribution<std::size_t>(
      0, kConstValues.size() - 1)(rng)];
}

// --- mutation methods ------------------------------------------------------
// Each returns true when it produced a structurally changed tree; `root`
// holds parent slot ids for kept leaves and >= kFreshBase for new ones.

bool mutate_insert(Node& root, std::mt19937_64& rng, int& fresh) {
  auto paths = nodes_of_type(root, ExprType::Cov);
  if (paths.empty()) return false;
  const auto& p = pick(paths, rng);
  Node& target = node_at(root, p);
  Node old = target;
  std::vector<Candidate> ops;
  append_nestable(ExprType::Cov, ops);
  NodeKind op = pick(ops, rng).kind;
  switch (op) {
    case NodeKind::Power:
      target = make_node(op, {std::move(old), make_hyper(fresh++)});
      break;
    case NodeKind::Add:
    case NodeKind::Multiply: {
      Node filler = make_const(rand_const(rng));
      if (std::bernoulli_distribution(0.5)(rng))
        target = make_node(op, {std::move(old), std::move(filler)});
      else
        target = make_node(op, {std::move(filler), std::move(old)});
      break;
    }
    default:
      target = make_node(op, {std::move(old)});
      break;
  }
  return true;
}

bool mutate_shrink(Node& root, std::mt19937_64& rng) {
  std::vector<std::vector<int>> cand;
  for (auto& p : all_paths(root))
    if (is_nestable(node_at(root, p).kind)) cand.push_back(p);
  if (cand.empty()) return false;
  const auto& p = pick(cand, rng);
  Node& target = node_at(root, p);
  std::size_t child = 0;
  if ((target.kind == NodeKind::Add || target.kind == NodeKind::Multiply) &&
      std::bernoulli_distribution(0.5)(rng))
    child = 1;
  Node keep = std::move(target.children[child]);
  target = std::move(keep);
  return true;
}

bool mutate_uniform(Node& root, const SearchConfig& cfg, std::mt19937_64& rng,
                    int& fresh) {
  auto paths = all_paths(root);
  const auto& p = pick(paths, rng);
  Node& target = node_at(root, p);
  ExprType t = signature(target.kind).out;
  int remaining = std::max(1, cfg.d_max - static_cast<int>(p.size()));
  target = grow_node(1, remaining, t, rng, fresh);
  return true;
}

bool mutate_node_replacement(Node& root, std::mt19937_64& rng) {
  std::vector<std::vector<int>> cand;
  for (auto& p : all_paths(root)) {
    NodeKind k = node_at(root, p).kind;
    if (k == NodeKind::Add || k == NodeKind::Multiply || k == NodeKind::Div ||
        k == NodeKind::Exp || k == NodeKind::Sqrt || k == NodeKind::Square ||
        k == NodeKind::Const)
      cand.push_back(p);
  }
  if (cand.empty()) return false;
  const auto& p = pick(cand, rng);
  Node& target = node_at(root, p);
  switch (target.kind) {
    case NodeKind::Add:
      target.kind = NodeKind::Multiply;
      break;
    case NodeKind::Multiply:
      target.kind = NodeKind::Add;
      break;
    case NodeKind::Const: {
      double v = target.value;
      while (v == target.value) v = rand_const(rng);
      target.value = v;
      break;
    }
    default: {
      std::vector<NodeKind> group{NodeKind::Div, NodeKind::Exp, NodeKind::Sqrt,
                                  NodeKind::Square};
      group.erase(std::find(group.begin(), group.end(), target.kind));
      target.kind = pick(group, rng);
      break;
    }
  }
  return true;
}

// --- shared variation plumbing ---------------------------------------------

double parent_value(const Individual& par, int slot) {
  if (slot < 0 || slot >= static_cast<int>(par.theta.values.size())) return kNaN;
  if (!par.evaluated) return kNaN;
  return par.theta.values[static_cast<std::size_t>(slot)];
}

/// Finalizes a variation product: dense slots, depth cap, PSD filter,
/// inherited starting point.  Returns nullopt when the candidate is rejected.
std::optional<Individual> finalize_child(
    Node root, const Individual& a, const Individual* b,
    const SearchConfig& cfg, std::mt19937_64& rng, SearchStats* stats,
    const char* lineage) {
  if (depth(root) > cfg.o_max) return std::nullopt;
  Reindexed rx = canonical_hyper_reindex(KernelExpr::from_root(std::move(root)));
  if (type_check(rx.expr)) return std::nullopt;
  PsdCheckConfig pc = cfg.psd;
  pc.seed = rng();
  if (stats) stats->psd_attempts++;
  if (!validate_kernel(rx.expr, pc, cfg.bounds).pass) {
    if (stats) stats->psd_rejects++;
    return std::nullopt;
  }
  std::vector<double> center(static_cast<std::size_t>(rx.expr.hyper_count) + 1, kNaN);
  for (int i = 0; i < rx.expr.hyper_count; ++i) {
    int src = rx.source_slot[static_cast<std::size_t>(i)];
    double v = kNaN;
    if (src >= kParentBBase) {
      if (b) v = parent_value(*b, src - kParentBBase);
    } else if (src < kFreshBase) {
      v = parent_value(a, src);
    }
    center[static_cast<std::size_t>(i)] = v;
  }
  if (a.evaluated && !a.theta.values.empty()) center.back() = a.theta.noise();

  Individual child;
  child.expr = rx.expr;
  child.theta = make_theta(rx.expr, cfg.bounds);
  child.init = InitStrategy::inherited(std::move(center), cfg.sigma_theta);
  child.seed = rng();
  child.lineage = lineage;
  return child;
}

Individual parent_fallback(const Individual& a, const SearchConfig& cfg,
                           std::mt19937_64& rng, const char* lineage) {
  Individual child;
  child.expr = a.expr;
  child.theta = make_theta(a.expr, cfg.bounds);
  if (a.evaluated)
    child.init = InitStrategy::inherited(a.theta.values, cfg.sigma_theta);
  child.seed = rng();
  child.lineage = lineage;
  return child;
}

std::tuple<double, int, int> rank_key(const Individual& ind) {
  return {ind.fitness, ind.expr.hyper_count, depth(ind.expr)};
}

void update_best(std::optional<Individual>& best, const std::vector<Individual>& pop) {
  for (const Individual& ind : pop)
    if (!best || rank_key(ind) < rank_key(*best)) best = ind;
}

GenTelemetry snapshot(int gen, const std::vector<Individual>& pop, int restarts,
                      const SearchStats& stats) {
  GenTelemetry t;
  t.gen = gen;
  t.best_bic = kInf;
  double sum = 0.0;
  for (const Individual& ind : pop) {
    t.best_bic = std::min(t.best_bic, ind.fitness);
    sum += ind.fitness;
  }
  t.mean_bic = pop.empty() ? 0.0 : sum / static_cast<double>(pop.size());
  t.restarts = restarts;
  t.psd_reject_rate = stats.psd_attempts
      ? static_cast<double>(stats.psd_rejects) / static_cast<double>(stats.psd_attempts)
      : 0.0;
  t.eval_errors = stats.eval_errors;
  return t;
}

}  // namespace

OptBudget SearchConfig::budget_for(const Dataset& train) const {
  OptBudget b;
  b.ref_fun_call = ref_fun_call;
  b.series_len = series_len > 0 ? series_len : static_cast<int>(train.n());
  return b;
}

KernelExpr typed_grow(int d_min, int d_max, ExprType want, std::mt19937_64& rng) {
  int next_slot = 0;
  Node root = grow_node(d_min, d_max, want, rng, next_slot);
  return canonical_hyper_reindex(KernelExpr::from_root(std::move(root))).expr;
}

std::vector<Individual> gen_rand_pop(int n, const SearchConfig& cfg,
                                     std::mt19937_64& rng, SearchStats* stats) {
  std::vector<Individual> out;
  out.reserve(static_cast<std::size_t>(n));
  long attempts = 0;
  long accepts = 0;
  while (static_cast<int>(out.size()) < n) {
    ++attempts;
    if (stats) stats->psd_attempts++;
    KernelExpr expr = typed_grow(cfg.d_min, cfg.d_max, ExprType::Cov, rng);
    PsdCheckConfig pc = cfg.psd;
    pc.seed = rng();
    if (!validate_kernel(expr, pc, cfg.bounds).pass) {
      if (stats) stats->psd_rejects++;
      if (attempts >= 1000000 && accepts * 1000 < attempts)
        throw std::runtime_error(
            "random kernel generation: acceptance rate below 0.1%");
      continue;
    }
    ++accepts;
    Individual ind;
    ind.theta = make_theta(expr, cfg.bounds);
    ind.expr = std::move(expr);
    ind.init = InitStrategy::uniform();
    ind.seed = rng();
    ind.lineage = "random";
    out.push_back(std::move(ind));
  }
  return out;
}

Individual crossover(const Individual& a, const Individual& b,
                     const SearchConfig& cfg, std::mt19937_64& rng,
                     SearchStats* stats) {
  auto cov_a = nodes_of_type(a.expr.root, ExprType::Cov);
  auto cov_b = nodes_of_type(b.expr.root, ExprType::Cov);
  for (int attempt = 0; attempt < cfg.rho_max; ++attempt) {
    Node sub_a = node_at(a.expr.root, pick(cov_a, rng));
    Node sub_b = node_at(b.expr.root, pick(cov_b, rng));
    offset_slots(sub_b, kParentBBase);
    NodeKind join = std::bernoulli_distribution(0.5)(rng) ? NodeKind::Add
                                                          : NodeKind::Multiply;
    Node root = make_node(join, {std::move(sub_a), std::move(sub_b)});
    auto child = finalize_child(std::move(root), a, &b, cfg, rng, stats, "crossover");
    if (child) return *std::move(child);
  }
  const Individual& keep = std::bernoulli_distribution(0.5)(rng) ? a : b;
  return parent_fallback(keep, cfg, rng, "crossover-fallback");
}

Individual mutate(const Individual& a, const SearchConfig& cfg,
                  std::mt19937_64& rng, SearchStats* stats) {
  for (int attempt = 0; attempt < cfg.rho_max; ++attempt) {
    Node root = a.expr.root;
    int fresh = kFreshBase;
    bool changed = false;
    const char* lineage = "mutate";
    switch (std::uniform_int_distribution<int>(0, 3)(rng)) {
      case 0:
        changed = mutate_insert(root, rng, fresh);
        lineage = "mutate-insert";
        break;
      case 1:
        changed = mutate_shrink(root, rng);
        lineage = "mutate-shrink";
        break;
      case 2:
        changed = mutate_uniform(root, cfg, rng, fresh);
        lineage = "mutate-uniform";
        break;
      default:
        changed = mutate_node_replacement(root, rng);
        lineage = "mutate-node-replacement";
        break;
    }
    if (!changed) continue;
    auto child = finalize_child(std::move(root), a, nullptr, cfg, rng, stats, lineage);
    if (child) return *std::move(child);
  }
  return parent_fallback(a, cfg, rng, "mutate-fallback");
}

std::vector<Individual> variate(const std::vector<Individual>& sel, int count,
                                const SearchConfig& cfg, std::mt19937_64& rng,
                                SearchStats* stats) {
  if (sel.empty()) throw std::invalid_argument("variate: empty selection");
  // Penalized kernels never become parents unless nothing else is left.
  std::vector<const Individual*> pool;
  for (const Individual& ind : sel)
    if (ind.fitness < kPenalty) pool.push_back(&ind);
  if (pool.empty())
    for (const Individual& ind : sel) pool.push_back(&ind);

  std::vector<Individual> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int c = 0; c < count; ++c) {
    bool do_mut = std::bernoulli_distribution(cfg.p_m)(rng) || pool.size() < 2;
    if (do_mut) {
      out.push_back(mutate(*pick(pool, rng), cfg, rng, stats));
    } else {
      std::uniform_int_distribution<std::size_t> d(0, pool.size() - 1);
      std::size_t i = d(rng);
      std::size_t j = d(rng);
      while (j == i) j = d(rng);
      out.push_back(crossover(*pool[i], *pool[j], cfg, rng, stats));
    }
  }
  return out;
}

void evaluate_population(std::vector<Individual>& pop, const Dataset& train,
                         const SearchConfig& cfg, SearchStats* stats) {
  OptBudget budget = cfg.budget_for(train);
  std::atomic<long> errors{0};
  auto work = [&](Individual& ind) {
    InitStrategy init = ind.evaluated
        ? InitStrategy::inherited(ind.theta.values, cfg.sigma_theta)
        : ind.init;
    ThetaVector tmpl = make_theta(ind.expr, cfg.bounds);
    std::uint64_t eval_seed = ind.seed;
    ind.seed = splitmix64(ind.seed);
    OptResult res;
    try {
      res = optimize_hyperparams(ind.expr, train, cfg.metric, budget, init,
                                 tmpl, eval_seed, cfg.powell);
    } catch (const std::exception&) {
      res.all_penalized = true;
      res.score_best = kPenalty;
    }
    if (res.all_penalized) {
      ind.fitness = std::max(res.score_best, kPenalty);
      ind.metric_score = res.score_best;
      errors.fetch_add(1, std::memory_order_relaxed);
    } else {
      ind.theta = res.theta_best;
      ind.metric_score = res.score_best;
      double f;
      try {
        f = bic(ind.expr, ind.theta, train);
      } catch (const std::exception&) {
        f = kPenalty;
      }
      ind.fitness = std::isfinite(f) ? f : kPenalty;
    }
    ind.evaluated = true;
  };

  int jobs = std::max(1, cfg.jobs);
  if (jobs == 1 || pop.size() < 2) {
    for (Individual& ind : pop) work(ind);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> threads;
    threads.reserve(static_cast<std::size_t>(jobs));
    for (int t = 0; t < jobs; ++t)
      threads.emplace_back([&] {
        for (std::size_t i = next.fetch_add(1); i < pop.size(); i = next.fetch_add(1))
          work(pop[i]);
      });
    for (std::thread& t : threads) t.join();
  }
  if (stats) stats->eval_errors += errors.load();
}

std::vector<Individual> select(const std::vector<Individual>& pop, int mu) {
  std::vector<std::size_t> order(pop.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t l, std::size_t r) {
    return rank_key(pop[l]) < rank_key(pop[r]);
  });
  std::vector<Individual> out;
  std::size_t take = std::min(static_cast<std::size_t>(std::max(mu, 0)), pop.size());
  out.reserve(take);
  for (std::size_t i = 0; i < take; ++i) out.push_back(pop[order[i]]);
  return out;
}

Individual evocov_search(const Dataset& train, const SearchConfig& cfg,
                  const TelemetrySink& sink) {
  if (cfg.generations < 1 || cfg.population < 1 || cfg.mu < 1)
    throw std::invalid_argument("evocov: population, generations and mu must be >= 1");
  std::mt19937_64 rng(cfg.seed);
  SearchStats stats;
  std::optional<Individual> best;
  auto pop = gen_rand_pop(cfg.population, cfg, rng, &stats);
  double prev = kInf;
  int restarts = 0;
  for (int g = 1; g < cfg.generations; ++g) {
    evaluate_population(pop, train, cfg, &stats);
    double cur = kInf;
    for (const Individual& ind : pop) cur = std::min(cur, ind.fitness);
    if (sink) sink(snapshot(g, pop, restarts, stats));
    double relimprov = (prev - cur) / std::max(std::abs(cur), 1e-300);
    if (cfg.beta < relimprov) {
      auto sel = select(pop, cfg.mu);
      int offspring = cfg.population - static_cast<int>(sel.size());
      auto off = variate(sel, offspring, cfg, rng, &stats);
      for (Individual& s : sel) off.push_back(std::move(s));
      pop = std::move(off);
      prev = cur;
    } else {
      update_best(best, pop);
      pop = gen_rand_pop(cfg.population, cfg, rng, &stats);
      prev = kInf;
      ++restarts;
    }
  }
  evaluate_population(pop, train, cfg, &stats);
  if (sink) sink(snapshot(cfg.generations, pop, restarts, stats));
  update_best(best, pop);
  return *best;
}

Individual random_search(const Dataset& train, const SearchConfig& cfg,
                         const TelemetrySink& sink) {
  std::mt19937_64 rng(cfg.seed);
  SearchStats stats;
  SearchConfig local = cfg;
  auto pop = gen_rand_pop(cfg.random_search_population, local, rng, &stats);
  evaluate_population(pop, train, local, &stats);
  if (sink) sink(snapshot(1, pop, 0, stats));
  std::optional<Individual> best;
  update_best(best, pop);
  return *best;
}

Individual go_with_the_first(const Dataset& train, const SearchConfig& cfg,
                             const TelemetrySink& sink) {
  std::mt19937_64 rng(cfg.seed);
  SearchStats stats;
  auto pop = gen_rand_pop(cfg.gw_population, cfg, rng, &stats);
  evaluate_population(pop, train, cfg, &stats);
  int round = 0;
  do {
    for (Individual& ind : pop) {
      for (int step = 0; step < cfg.gw_climb_steps; ++step) {
        std::vector<Individual> child{mutate(ind, cfg, rng, &stats)};
        evaluate_population(child, train, cfg, &stats);
        if (rank_key(child[0]) < rank_key(ind)) ind = std::move(child[0]);
      }
    }
    if (sink) sink(snapshot(++round, pop, 0, stats));
    if (pop.size() > 1) {
      auto worst = std::max_element(pop.begin(), pop.end(),
                                    [](const Individual& l, const Individual& r) {
                                      return rank_key(l) < rank_key(r);
                                    });
      pop.erase(worst);
    }
  } while (pop.size() > 1);
  return pop.front();
}

}  // namespace evocov
