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

#include "evocov/expr.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>

namespace evocov {

namespace {

constexpr ExprType IP = ExprType::InputPair;
constexpr ExprType TP = ExprType::TransformedPair;
constexpr ExprType HP = ExprType::Hyper;
constexpr ExprType CV = ExprType::Cov;

const Signature kSignatures[] = {
    /* X        */ {IP, {IP, IP, IP}, 0},
    /* HyperArg */ {HP, {IP, IP, IP}, 0},
    /* Const    */ {CV, {IP, IP, IP}, 0},
    /* Euc      */ {TP, {IP, IP, IP}, 1},
    /* Spectral */ {TP, {IP, HP, IP}, 2},
    /* SqDist   */ {CV, {TP, HP, IP}, 2},
    /* DotProd  */ {CV, {TP, HP, HP}, 3},
    /* HpWrap   */ {CV, {HP, IP, IP}, 1},
    /* Power    */ {CV, {CV, HP, IP}, 2},
    /* Add      */ {CV, {CV, CV, IP}, 2},
    /* Multiply */ {CV, {CV, CV, IP}, 2},
    /* Div      */ {CV, {CV, IP, IP}, 1},
    /* Exp      */ {CV, {CV, IP, IP}, 1},
    /* Sqrt     */ {CV, {CV, IP, IP}, 1},
    /* Square   */ {CV, {CV, IP, IP}, 1},
};

const char* kSymbols[] = {
    "x",   "h",        "const", "euc", "spectral", "sq_dist", "dot_prod",
    "hp",  "power",    "add",   "multiply", "div", "exp",     "sqrt",
    "square",
};

}  // namespace

const char* to_string(ExprType t) {
  switch (t) {
    case ExprType::InputPair: return "input-pair";
    case ExprType::TransformedPair: return "transformed-pair";
    case ExprType::Hyper: return "hyper";
    case ExprType::Cov: return "cov";
  }
  return "?";
}

const char* symbol_name(NodeKind k) { return kSymbols[static_cast<int>(k)]; }

const Signature& signature(NodeKind k) { return kSignatures[static_cast<int>(k)]; }

bool is_nestable(NodeKind k) {
  switch (k) {
    case NodeKind::Power:
    case NodeKind::Add:
    case NodeKind::Multiply:
    case NodeKind::Div:
    case NodeKind::Exp:
    case NodeKind::Sqrt:
    case NodeKind::Square:
      return true;
    default:
      return false;
  }
}

bool is_not_nestable(NodeKind k) {
  switch (k) {
    case NodeKind::Euc:
    case NodeKind::Spectral:
    case NodeKind::SqDist:
    case NodeKind::DotProd:
    case NodeKind::HpWrap:
      return true;
    default:
      return false;
  }
}

bool is_terminal(NodeKind k) {
  return k == NodeKind::X || k == NodeKind::HyperArg || k == NodeKind::Const;
}

bool Node::operator==(const Node& other) const {
  return kind == other.kind && value == other.value && slot == other.slot &&
         children == other.children;
}

Node make_const(double v) {
  Node n;
  n.kind = NodeKind::Const;
  n.value = v;
  return n;
}

Node make_hyper(int slot) {
  Node n;
  n.kind = NodeKind::HyperArg;
  n.slot = slot;
  return n;
}

Node make_node(NodeKind k, std::vector<Node> children) {
  Node n;
  n.kind = k;
  n.children = std::move(children);
  return n;
}

namespace {

void max_slot(const Node& n, int& best) {
  if (n.kind == NodeKind::HyperArg) best = std::max(best, n.slot);
  for (const Node& c : n.children) max_slot(c, best);
}

}  // namespace

KernelExpr KernelExpr::from_root(Node root) {
  KernelExpr e;
  e.root = std::move(root);
  int best = -1;
  max_slot(e.root, best);
  e.hyper_count = best + 1;
  return e;
}

int depth(const Node& node) {
  int d = 0;
  for (const Node& c : node.children) d = std::max(d, depth(c));
  return 1 + d;
}

int node_count(const Node& node) {
  int n = 1;
  for (const Node& c : node.children) n += node_count(c);
  return n;
}

bool ThetaVector::feasible() const {
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!(values[i] >= bounds[i].lo && values[i] <= bounds[i].hi)) return false;
  }
  return true;
}

// --- type checking ---------------------------------------------------------

namespace {

std::optional<TypeError> check_node(const Node& n, std::vector<int>& path,
                                    std::set<int>& seen_slots) {
  const Signature& sig = signature(n.kind);
  if (static_cast<int>(n.children.size()) != sig.arity) {
    return TypeError{path, std::string(symbol_name(n.kind)) + ": expected " +
                               std::to_string(sig.arity) + " children, found " +
                               std::to_string(n.children.size())};
  }
  if (n.kind == NodeKind::Const) {
    if (std::find(kConstValues.begin(), kConstValues.end(), n.value) ==
        kConstValues.end()) {
      return TypeError{path, "constant " + std::to_string(n.value) +
                                 " is not in the terminal set"};
    }
  }
  if (n.kind == NodeKind::HyperArg) {
    if (n.slot < 0) return TypeError{path, "negative hyperparameter slot"};
    if (!seen_slots.insert(n.slot).second) {
      return TypeError{path, "hyperparameter slot h" + std::to_string(n.slot) +
                                 " appears more than once"};
    }
  }
  for (std::size_t i = 0; i < n.children.size(); ++i) {
    ExprType found = signature(n.children[i].kind).out;
    if (found != sig.in[i]) {
      path.push_back(static_cast<int>(i));
      TypeError err{path, std::string(symbol_name(n.kind)) + " input " +
                              std::to_string(i) + ": expected " +
                              to_string(sig.in[i]) + ", found " +
                              to_string(found)};
      path.pop_back();
      return err;
    }
    path.push_back(static_cast<int>(i));
    auto sub = check_node(n.children[i], path, seen_slots);
    path.pop_back();
    if (sub) return sub;
  }
  return std::nullopt;
}

}  // namespace

std::optional<TypeError> type_check(const KernelExpr& expr) {
  if (signature(expr.root.kind).out != ExprType::Cov) {
    return TypeError{{}, std::string("root produces ") +
                             to_string(signature(expr.root.kind).out) +
                             ", expected cov"};
  }
  std::vector<int> path;
  std::set<int> slots;
  auto err = check_node(expr.root, path, slots);
  if (err) return err;
  for (int s : slots) {
    if (s >= expr.hyper_count) {
      return TypeError{{}, "slot h" + std::to_string(s) + " out of range"};
    }
  }
  return std::nullopt;
}

// --- evaluation ------------------------------------------------------------

EvalError::EvalError(Kind kind, std::vector<int> path, const std::string& what)
    : std::runtime_error(what), kind(kind), path(std::move(path)) {}

namespace {

struct PairOperand {
  Eigen::MatrixXd a;  // n x dim
  Eigen::MatrixXd b;  // m x dim
};

struct Value {
  enum class Tag { Pair, Hyper, Cov } tag;
  PairOperand pair;
  double hyper = 0.0;
  Eigen::ArrayXXd cov;
};

[[noreturn]] void fail(EvalError::Kind kind, const std::vector<int>& path,
                       const std::string& what) {
  throw EvalError(kind, path, what);
}

Value eval_node(const Node& n, const ThetaVector& theta,
                const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                std::vector<int>& path) {
  auto child = [&](int i) {
    path.push_back(i);
    Value v = eval_node(n.children[i], theta, A, B, path);
    path.pop_back();
    return v;
  };
  auto check_finite = [&](const Eigen::ArrayXXd& z) {
    if (!z.isFinite().all()) fail(EvalError::Kind::NonFinite, path, "non-finite value");
  };
  Value out;
  switch (n.kind) {
    case NodeKind::X:
      out.tag = Value::Tag::Pair;
      out.pair = {A, B};
      return out;
    case NodeKind::HyperArg:
      out.tag = Value::Tag::Hyper;
      out.hyper = theta.values.at(static_cast<std::size_t>(n.slot));
      return out;
    case NodeKind::Const:
      out.tag = Value::Tag::Cov;
      out.cov = Eigen::ArrayXXd::Constant(A.rows(), B.rows(), n.value);
      return out;
    case NodeKind::Euc:
      return child(0);
    case NodeKind::Spectral: {
      Value p = child(0);
      double period = child(1).hyper;
      auto stack = [&](const Eigen::MatrixXd& m) {
        Eigen::MatrixXd s(m.rows(), 2 * m.cols());
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
          s.col(2 * c) = (period * m.col(c).array()).sin();
          s.col(2 * c + 1) = (period * m.col(c).array()).cos();
        }
        return s;
      };
      out.tag = Value::Tag::Pair;
      out.pair = {stack(p.pair.a), stack(p.pair.b)};
      return out;
    }
    case NodeKind::SqDist: {
      Value p = child(0);
      double ls = child(1).hyper;
      Eigen::ArrayXXd z(p.pair.a.rows(), p.pair.b.rows());
      for (Eigen::Index j = 0; j < p.pair.b.rows(); ++j) {
        z.col(j) = (p.pair.a.rowwise() - p.pair.b.row(j)).rowwise().squaredNorm();
      }
      if (ls == 0.0) fail(EvalError::Kind::DomainViolation, path, "sq_dist: zero lengthscale");
      out.tag = Value::Tag::Cov;
      out.cov = z / (ls * ls);
      check_finite(out.cov);
      return out;
    }
    case NodeKind::DotProd: {
      Value p = child(0);
      double shift = child(1).hyper;
      double ls = child(2).hyper;
      if (ls == 0.0) fail(EvalError::Kind::DomainViolation, path, "dot_prod: zero lengthscale");
      Eigen::MatrixXd as = p.pair.a.array() - shift;
      Eigen::MatrixXd bs = p.pair.b.array() - shift;
      out.tag = Value::Tag::Cov;
      out.cov = (as * bs.transpose()).array() / ls;
      check_finite(out.cov);
      return out;
    }
    case NodeKind::HpWrap: {
      double h = child(0).hyper;
      out.tag = Value::Tag::Cov;
      out.cov = Eigen::ArrayXXd::Constant(A.rows(), B.rows(), h);
      check_finite(out.cov);
      return out;
    }
    case NodeKind::Power: {
      Eigen::ArrayXXd w = child(0).cov;
      double e = child(1).hyper;
      bool integer_exp = e == std::floor(e);
      for (Eigen::Index i = 0; i < w.size(); ++i) {
        double v = w(i);
        if (v < 0.0 && !integer_exp) {
          fail(EvalError::Kind::DomainViolation, path, "power: negative base, non-integer exponent");
        }
        if (v == 0.0 && e < 0.0) {
          fail(EvalError::Kind::DomainViolation, path, "power: zero base, negative exponent");
        }
      }
      out.tag = Value::Tag::Cov;
      out.cov = w.pow(e);
      check_finite(out.cov);
      return out;
    }
    case NodeKind::Add: {
      out.tag = Value::Tag::Cov;
      out.cov = child(0).cov + child(1).cov;
      check_finite(out.cov);
      return out;
    }
    case NodeKind::Multiply: {
      out.tag = Value::Tag::Cov;
      out.cov = child(0).cov * child(1).cov;
      check_finite(out.cov);
      return out;
    }
    case NodeKind::Div: {
      Eigen::ArrayXXd w = child(0).cov;
      if ((w == 0.0).any()) fail(EvalError::Kind::DomainViolation, path, "div: zero operand");
      out.tag = Value::Tag::Cov;
      out.cov = w.inverse();
      check_finite(out.cov);
      return out;
    }
    case NodeKind::Exp: {
      out.tag = Value::Tag::Cov;
      out.cov = child(0).cov.exp();
      check_finite(out.cov);
      return out;
    }
    case NodeKind::Sqrt: {
      Eigen::ArrayXXd w = child(0).cov;
      if ((w < 0.0).any()) fail(EvalError::Kind::DomainViolation, path, "sqrt: negative operand");
      out.tag = Value::Tag::Cov;
      out.cov = w.sqrt();
      check_finite(out.cov);
      return out;
    }
    case NodeKind::Square: {
      out.tag = Value::Tag::Cov;
      out.cov = child(0).cov.square();
      check_finite(out.cov);
      return out;
    }
  }
  fail(EvalError::Kind::DomainViolation, path, "unreachable");
}

}  // namespace

Eigen::MatrixXd cov_matrix(const KernelExpr& expr, const ThetaVector& theta,
                           const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                           bool add_noise) {
  if (static_cast<int>(theta.size()) != expr.hyper_count + 1) {
    throw std::invalid_argument("theta length does not match expression");
  }
  std::vector<int> path;
  Value v = eval_node(expr.root, theta, A, B, path);
  Eigen::MatrixXd K = v.cov.matrix();
  if (add_noise) {
    if (A.rows() != B.rows()) {
      throw std::invalid_argument("add_noise requires a self covariance matrix");
    }
    double s2 = theta.noise() * theta.noise();
    K.diagonal().array() += s2;
  }
  return K;
}

double eval_kernel(const KernelExpr& expr, const ThetaVector& theta,
                   std::span<const double> x, std::span<const double> x2) {
  Eigen::MatrixXd A(1, static_cast<Eigen::Index>(x.size()));
  Eigen::MatrixXd B(1, static_cast<Eigen::Index>(x2.size()));
  for (std::size_t i = 0; i < x.size(); ++i) A(0, static_cast<Eigen::Index>(i)) = x[i];
  for (std::size_t i = 0; i < x2.size(); ++i) B(0, static_cast<Eigen::Index>(i)) = x2[i];
  return cov_matrix(expr, theta, A, B, false)(0, 0);
}

// --- serialization ---------------------------------------------------------

namespace {

std::string format_const(double v) {
  char buf[32];
  if (v == std::floor(v)) {
    std::snprintf(buf, sizeof(buf), "%d", static_cast<int>(v));
  } else {
    std::snprintf(buf, sizeof(buf), "%g", v);
  }
  return buf;
}

void serialize_node(const Node& n, std::string& out) {
  switch (n.kind) {
    case NodeKind::X:
      out += "x";
      return;
    case NodeKind::HyperArg:
      out += "h" + std::to_string(n.slot);
      return;
    case NodeKind::Const:
      out += format_const(n.value);
      return;
    default:
      out += "(";
      out += symbol_name(n.kind);
      for (const Node& c : n.children) {
        out += " ";
        serialize_node(c, out);
      }
      out += ")";
  }
}

struct Parser {
  const std::string& text;
  std::size_t pos = 0;

  explicit Parser(const std::string& t) : text(t) {}

  void skip_ws() {
    while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
  }

  std::string token() {
    skip_ws();
    if (pos >= text.size()) throw ParseError(pos, "unexpected end of input");
    if (text[pos] == '(' || text[pos] == ')') return std::string(1, text[pos++]);
    std::size_t start = pos;
    while (pos < text.size() && !std::isspace(static_cast<unsigned char>(text[pos])) &&
           text[pos] != '(' && text[pos] != ')') {
      ++pos;
    }
    return text.substr(start, pos - start);
  }

  Node atom(const std::string& tok, std::size_t at) {
    if (tok == "x") return make_node(NodeKind::X, {});
    if (tok.size() >= 2 && tok[0] == 'h' &&
        std::all_of(tok.begin() + 1, tok.end(),
                    [](char c) { return std::isdigit(static_cast<unsigned char>(c)); })) {
      return make_hyper(std::stoi(tok.substr(1)));
    }
    char* end = nullptr;
    double v = std::strtod(tok.c_str(), &end);
    if (end == tok.c_str() + tok.size()) {
      if (std::find(kConstValues.begin(), kConstValues.end(), v) == kConstValues.end()) {
        throw ParseError(at, "constant '" + tok + "' is not in the terminal set");
      }
      return make_const(v);
    }
    throw ParseError(at, "unknown token '" + tok + "'");
  }

  Node expr() {
    std::size_t at = pos;
    std::string tok = token();
    if (tok == ")") throw ParseError(at, "unexpected ')'");
    if (tok != "(") return atom(tok, at);
    std::size_t op_at = pos;
    std::string op = token();
    NodeKind kind;
    bool found = false;
    for (int k = static_cast<int>(NodeKind::Euc); k <= static_cast<int>(NodeKind::Square); ++k) {
      if (op == kSymbols[k]) {
        kind = static_cast<NodeKind>(k);
        found = true;
        break;
      }
    }
    if (!found) throw ParseError(op_at, "unknown operator '" + op + "'");
    std::vector<Node> children;
    for (;;) {
      skip_ws();
      if (pos >= text.size()) throw ParseError(pos, "unexpected end of input, expected ')'");
      if (text[pos] == ')') {
        ++pos;
        break;
      }
      children.push_back(expr());
    }
    return make_node(kind, std::move(children));
  }
};

}  // namespace

ParseError::ParseError(std::size_t position, const std::string& message)
    : std::runtime_error("parse error at " + std::to_string(position) + ": " + message),
      position(position) {}

std::string serialize(const KernelExpr& expr) {
  std::string out;
  serialize_node(expr.root, out);
  return out;
}

KernelExpr parse(const std::string& text) {
  Parser p(text);
  Node root = p.expr();
  p.skip_ws();
  if (p.pos != text.size()) throw ParseError(p.pos, "trailing input");
  return KernelExpr::from_root(std::move(root));
}

// --- slot management -------------------------------------------------------

namespace {

void reindex_node(Node& n, std::vector<int>& source, int& next) {
  if (n.kind == NodeKind::HyperArg) {
    source.push_back(n.slot);
    n.slot = next++;
    return;
  }
  for (Node& c : n.children) reindex_node(c, source, next);
}

}  // namespace

Reindexed canonical_hyper_reindex(const KernelExpr& expr) {
  Reindexed r;
  r.expr.root = expr.root;
  int next = 0;
  reindex_node(r.expr.root, r.source_slot, next);
  r.expr.hyper_count = next;
  return r;
}

namespace {

void collect_paths(const Node& n, ExprType want, std::vector<int>& path,
                   std::vector<std::vector<int>>& out) {
  if (signature(n.kind).out == want) out.push_back(path);
  for (std::size_t i = 0; i < n.children.size(); ++i) {
    path.push_back(static_cast<int>(i));
    collect_paths(n.children[i], want, path, out);
    path.pop_back();
  }
}

}  // namespace

std::vector<std::vector<int>> nodes_of_type(const Node& root, ExprType want) {
  std::vector<std::vector<int>> out;
  std::vector<int> path;
  collect_paths(root, want, path, out);
  return out;
}

const Node& node_at(const Node& root, std::span<const int> path) {
  const Node* n = &root;
  for (int i : path) n = &n->children.at(static_cast<std::size_t>(i));
  return *n;
}

Node& node_at(Node& root, std::span<const int> path) {
  Node* n = &root;
  for (int i : path) n = &n->children.at(static_cast<std::size_t>(i));
  return *n;
}

}  // namespace evocov
