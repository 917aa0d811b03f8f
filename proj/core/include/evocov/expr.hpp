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

#ifndef EVOCOV_EXPR_HPP
#define EVOCOV_EXPR_HPP

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace evocov {

/// Output type of a grammar node. Every node produces exactly one of these.
enum class ExprType : std::uint8_t {
  InputPair,        ///< the raw pair of input vectors
  TransformedPair,  ///< the pair after a feature transform
  Hyper,            ///< a hyperparameter scalar
  Cov,              ///< a covariance-valued scalar
};

const char* to_string(ExprType t);

enum class NodeKind : std::uint8_t {
  X,         // leaf: the input pair
  HyperArg,  // leaf: hyperparameter slot
  Const,     // leaf: one of the allowed constants
  Euc,       // identity transform of the input pair
  Spectral,  // per-coordinate sin/cos feature stack
  SqDist,    // scaled squared distance of the transformed pair
  DotProd,   // shifted, scaled dot product of the transformed pair
  HpWrap,    // promotes a hyperparameter to a covariance value
  Power,
  Add,
  Multiply,
  Div,
  Exp,
  Sqrt,
  Square,
};

const char* symbol_name(NodeKind k);

inline constexpr std::array<double, 7> kConstValues{-1.0, -0.5, 0.5, 1.0, 2.0, 3.0, 5.0};

struct Signature {
  ExprType out;
  std::array<ExprType, 3> in;
  int arity;
};

const Signature& signature(NodeKind k);

/// Cov -> Cov reachable operators; these can grow a branch indefinitely.
bool is_nestable(NodeKind k);
/// Operators that consume a different type than they produce.
bool is_not_nestable(NodeKind k);
/// Zero-arity nodes (X, HyperArg, Const).
bool is_terminal(NodeKind k);

struct Node {
  NodeKind kind = NodeKind::Const;
  double value = 0.0;  // Const only
  int slot = -1;       // HyperArg only
  std::vector<Node> children;

  bool operator==(const Node& other) const;
};

Node make_const(double v);
Node make_hyper(int slot);
Node make_node(NodeKind k, std::vector<Node> children);

/// A type-correct kernel-expression tree; the genotype of the search.
/// Immutable by convention: all operations return new trees.
struct KernelExpr {
  Node root;
  int hyper_count = 0;

  /// Wraps a root node, counting the distinct hyperparameter slots.
  static KernelExpr from_root(Node root);

  bool operator==(const KernelExpr& other) const { return root == other.root; }
};

struct TypeError {
  std::vector<int> path;  // child indices from the root
  std::string message;
};

/// nullopt when the tree satisfies every arity/type invariant and the root
/// produces Cov; otherwise the first violation found in depth-first order.
std::optional<TypeError> type_check(const KernelExpr& expr);

int depth(const Node& node);
inline int depth(const KernelExpr& e) { return depth(e.root); }

int node_count(const Node& node);

/// Hyperparameter values paired with their box bounds.  The last entry is
/// always the white-noise amplitude; values outside bounds are representable
/// (the optimizer penalizes them).
struct SlotBounds {
  double lo = 1e-5;
  double hi = 1e3;
  double init_lo = 1e-3;
  double init_hi = 1e2;
  bool log_init = true;
};

struct ThetaVector {
  std::vector<double> values;
  std::vector<SlotBounds> bounds;

  std::size_t size() const { return values.size(); }
  double noise() const { return values.back(); }
  bool feasible() const;
};

struct EvalError : std::runtime_error {
  enum class Kind { NonFinite, DomainViolation };
  Kind kind;
  std::vector<int> path;

  EvalError(Kind kind, std::vector<int> path, const std::string& what);
};

/// Covariance matrix between the rows of A (n x d) and B (m x d).
/// Entry (i,j) is the kernel evaluated at (A_i, B_j).  When add_noise is set
/// the call is for A against itself and theta_noise^2 is added to the
/// diagonal.  Throws EvalError on non-finite results or domain violations.
Eigen::MatrixXd cov_matrix(const KernelExpr& expr, const ThetaVector& theta,
                           const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                           bool add_noise);

double eval_kernel(const KernelExpr& expr, const ThetaVector& theta,
                   std::span<const double> x, std::span<const double> x2);

// --- serialization ---------------------------------------------------------

struct ParseError : std::runtime_error {
  std::size_t position;
  ParseError(std::size_t position, const std::string& message);
};

/// Parenthesized prefix notation, e.g.
///   (multiply (square (hp h0)) (exp (multiply -0.5 (sq_dist (euc x) h1))))
std::string serialize(const KernelExpr& expr);
KernelExpr parse(const std::string& text);

// --- slot management -------------------------------------------------------

struct Reindexed {
  KernelExpr expr;
  /// source_slot[new_index] = old slot index the value should be inherited
  /// from.  Duplicated old indices appear once per occurrence.
  std::vector<int> source_slot;
};

/// Renumbers hyperparameter slots 0..q-1 in depth-first order, splitting
/// duplicates so every slot appears exactly once.
Reindexed canonical_hyper_reindex(const KernelExpr& expr);

/// Paths (root-relative child index chains) of all nodes whose output type
/// matches `want`, in depth-first order.
std::vector<std::vector<int>> nodes_of_type(const Node& root, ExprType want);

const Node& node_at(const Node& root, std::span<const int> path);
Node& node_at(Node& root, std::span<const int> path);

}  // namespace evocov

#endif  // EVOCOV_EXPR_HPP
