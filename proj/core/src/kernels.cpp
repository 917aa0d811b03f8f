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

#include "evocov/kernels.hpp"

#include <cmath>
#include <stdexcept>

namespace evocov {

namespace {

using NK = NodeKind;

Node op(NK k, std::vector<Node> c) { return make_node(k, std::move(c)); }
Node x_leaf() { return op(NK::X, {}); }
Node euc() { return op(NK::Euc, {x_leaf()}); }
Node sq_dist(int slot) { return op(NK::SqDist, {euc(), make_hyper(slot)}); }
Node r_of(int slot) { return op(NK::Sqrt, {sq_dist(slot)}); }
Node amp_sq(int slot) {
  return op(NK::Square, {op(NK::HpWrap, {make_hyper(slot)})});
}

double sq_norm(std::span<const double> x, std::span<const double> x2) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double d = x[i] - x2[i];
    s += d * d;
  }
  return s;
}

}  // namespace

const char* to_string(BuiltinName n) {
  switch (n) {
    case BuiltinName::CON: return "CON";
    case BuiltinName::WN: return "WN";
    case BuiltinName::E: return "E";
    case BuiltinName::EGamma: return "EGamma";
    case BuiltinName::SE: return "SE";
    case BuiltinName::M12: return "M12";
    case BuiltinName::M32: return "M32";
    case BuiltinName::M52: return "M52";
    case BuiltinName::RQ: return "RQ";
    case BuiltinName::PER: return "PER";
    case BuiltinName::LIN: return "LIN";
  }
  return "?";
}

BuiltinName builtin_from_string(const std::string& name) {
  for (BuiltinName n : kAllBuiltins) {
    if (name == to_string(n)) return n;
  }
  throw std::invalid_argument("unknown builtin kernel '" + name + "'");
}

BuiltinKernel builtin(BuiltinName name, const BoundsTable& table) {
  BuiltinKernel k;
  k.name = name;
  Node root;
  switch (name) {
    case BuiltinName::CON:
      root = op(NK::HpWrap, {make_hyper(0)});
      k.slot_roles = {{0, "constant"}};
      break;
    case BuiltinName::WN:
      // By convention the white-noise kernel lives in theta_noise at matrix
      // level; the tree evaluates to zero using in-grammar terminals.
      root = op(NK::Add, {make_const(1), make_const(-1)});
      break;
    case BuiltinName::E:
    case BuiltinName::M12:
      root = op(NK::Multiply,
                {amp_sq(0), op(NK::Exp, {op(NK::Multiply, {make_const(-1), r_of(1)})})});
      k.slot_roles = {{0, "amplitude"}, {1, "lengthscale"}};
      break;
    case BuiltinName::EGamma:
      root = op(NK::Multiply,
                {amp_sq(0),
                 op(NK::Exp, {op(NK::Multiply,
                                 {make_const(-1),
                                  op(NK::Power, {r_of(1), make_hyper(2)})})})});
      k.slot_roles = {{0, "amplitude"}, {1, "lengthscale"}, {2, "gamma"}};
      break;
    case BuiltinName::SE:
      root = op(NK::Multiply,
                {amp_sq(0),
                 op(NK::Exp, {op(NK::Multiply, {make_const(-0.5), sq_dist(1)})})});
      k.slot_roles = {{0, "amplitude"}, {1, "lengthscale"}};
      break;
    case BuiltinName::M32: {
      // Each lengthscale occurrence is its own slot (the grammar never
      // shares slots), so the polynomial and decay factors can disagree.
      // The function is only PSD when the decay lengthscale is the smaller
      // one; bespoke bounds below keep every feasible theta on that side.
      Node sqrt3 = op(NK::Sqrt, {make_const(3)});
      Node poly = op(NK::Add, {make_const(1), op(NK::Multiply, {sqrt3, r_of(1)})});
      Node decay = op(NK::Exp, {op(NK::Multiply,
                                   {make_const(-1),
                                    op(NK::Multiply, {op(NK::Sqrt, {make_const(3)}), r_of(2)})})});
      root = op(NK::Multiply, {amp_sq(0), op(NK::Multiply, {poly, decay})});
      k.slot_roles = {{0, "amplitude"}, {1, "lengthscale-poly"}, {2, "lengthscale-exp"}};
      break;
    }
    case BuiltinName::M52: {
      Node sqrt5 = op(NK::Sqrt, {make_const(5)});
      Node five_thirds = op(NK::Multiply, {make_const(5), op(NK::Div, {make_const(3)})});
      Node poly = op(NK::Add,
                     {op(NK::Add, {make_const(1), op(NK::Multiply, {sqrt5, r_of(1)})}),
                      op(NK::Multiply, {five_thirds, sq_dist(2)})});
      Node decay = op(NK::Exp, {op(NK::Multiply,
                                   {make_const(-1),
                                    op(NK::Multiply, {op(NK::Sqrt, {make_const(5)}), r_of(3)})})});
      root = op(NK::Multiply, {amp_sq(0), op(NK::Multiply, {poly, decay})});
      k.slot_roles = {{0, "amplitude"},
                      {1, "lengthscale-linear"},
                      {2, "lengthscale-quadratic"},
                      {3, "lengthscale-exp"}};
      break;
    }
    case BuiltinName::RQ: {
      Node base = op(NK::Add, {make_const(1), op(NK::Multiply, {make_const(0.5), sq_dist(1)})});
      root = op(NK::Multiply, {amp_sq(0), op(NK::Power, {base, make_hyper(2)})});
      k.slot_roles = {{0, "amplitude"}, {1, "lengthscale"}, {2, "negated-alpha"}};
      break;
    }
    case BuiltinName::PER: {
      Node spectral = op(NK::Spectral, {x_leaf(), make_hyper(1)});
      Node z = op(NK::SqDist, {std::move(spectral), make_hyper(2)});
      root = op(NK::Multiply,
                {amp_sq(0),
                 op(NK::Exp, {op(NK::Multiply, {make_const(-0.5), std::move(z)})})});
      k.slot_roles = {{0, "amplitude"}, {1, "frequency"}, {2, "lengthscale"}};
      break;
    }
    case BuiltinName::LIN:
      root = op(NK::DotProd, {euc(), make_hyper(0), make_hyper(1)});
      k.slot_roles = {{0, "shift"}, {1, "lengthscale"}};
      break;
  }
  k.expr = KernelExpr::from_root(std::move(root));
  k.theta_template = make_theta(k.expr, table);
  if (name == BuiltinName::M32 || name == BuiltinName::M52) {
    // With independent occurrence slots the Matern form is only PSD when the
    // exponential-decay lengthscale is at most every polynomial lengthscale.
    // Splitting the ranges at 1 keeps all feasible thetas on the PSD side.
    const SlotBounds poly{1.0, 1e3, 1.0, 1e2, true};
    const SlotBounds decay{1e-5, 1.0, 1e-3, 1.0, true};
    int last = k.expr.hyper_count - 1;  // the decay slot is allocated last
    for (int s = 1; s < last; ++s) k.theta_template.bounds[s] = poly;
    k.theta_template.bounds[last] = decay;
  }
  if (name == BuiltinName::RQ) {
    // The exponent is -alpha; keep it strictly negative or the kernel is
    // not PSD.
    k.theta_template.bounds[2] = {-5.0, -0.05, -5.0, -0.05, false};
  } else if (name == BuiltinName::EGamma) {
    k.theta_template.bounds[2] = {0.05, 2.0, 0.05, 2.0, false};
  }
  return k;
}

double closed_form(BuiltinName name, const ThetaVector& theta,
                   std::span<const double> x, std::span<const double> x2) {
  const std::vector<double>& t = theta.values;
  switch (name) {
    case BuiltinName::CON:
      return t[0];
    case BuiltinName::WN:
      return 0.0;  // handled at matrix level via theta_noise
    case BuiltinName::E:
    case BuiltinName::M12: {
      double r = std::sqrt(sq_norm(x, x2)) / std::abs(t[1]);
      return t[0] * t[0] * std::exp(-r);
    }
    case BuiltinName::EGamma: {
      double r = std::sqrt(sq_norm(x, x2)) / std::abs(t[1]);
      return t[0] * t[0] * std::exp(-std::pow(r, t[2]));
    }
    case BuiltinName::SE: {
      double z = sq_norm(x, x2) / (t[1] * t[1]);
      return t[0] * t[0] * std::exp(-0.5 * z);
    }
    case BuiltinName::M32: {
      double r1 = std::sqrt(sq_norm(x, x2)) / std::abs(t[1]);
      double r2 = std::sqrt(sq_norm(x, x2)) / std::abs(t[2]);
      return t[0] * t[0] * (1.0 + std::sqrt(3.0) * r1) * std::exp(-std::sqrt(3.0) * r2);
    }
    case BuiltinName::M52: {
      double r1 = std::sqrt(sq_norm(x, x2)) / std::abs(t[1]);
      double z2 = sq_norm(x, x2) / (t[2] * t[2]);
      double r3 = std::sqrt(sq_norm(x, x2)) / std::abs(t[3]);
      return t[0] * t[0] * (1.0 + std::sqrt(5.0) * r1 + (5.0 / 3.0) * z2) *
             std::exp(-std::sqrt(5.0) * r3);
    }
    case BuiltinName::RQ: {
      double z = sq_norm(x, x2) / (t[1] * t[1]);
      return t[0] * t[0] * std::pow(1.0 + 0.5 * z, t[2]);
    }
    case BuiltinName::PER: {
      // Distance in the per-coordinate (sin, cos) feature space; this equals
      // 2 - 2 cos(t1 (x - x2)) analytically, but is evaluated in feature
      // form so the oracle shares the formula's rounding profile near zero.
      double z = 0.0;
      for (std::size_t i = 0; i < x.size(); ++i) {
        double ds = std::sin(t[1] * x[i]) - std::sin(t[1] * x2[i]);
        double dc = std::cos(t[1] * x[i]) - std::cos(t[1] * x2[i]);
        z += ds * ds + dc * dc;
      }
      z /= t[2] * t[2];
      return t[0] * t[0] * std::exp(-0.5 * z);
    }
    case BuiltinName::LIN: {
      double s = 0.0;
      for (std::size_t i = 0; i < x.size(); ++i) {
        s += (x[i] - t[0]) * (x2[i] - t[0]);
      }
      return s / t[1];
    }
  }
  throw std::invalid_argument("unknown builtin");
}

}  // namespace evocov
