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

#include "evocov/bounds.hpp"

#include <cmath>

namespace evocov {

const SlotBounds& BoundsTable::for_class(SlotClass c) const {
  switch (c) {
    case SlotClass::Scale: return scale;
    case SlotClass::SignedScale: return signed_scale;
    case SlotClass::Shift: return shift;
    case SlotClass::Noise: return noise;
  }
  return scale;
}

namespace {

void infer_node(const Node& n, std::vector<SlotClass>& classes) {
  for (std::size_t i = 0; i < n.children.size(); ++i) {
    const Node& c = n.children[i];
    if (c.kind == NodeKind::HyperArg) {
      SlotClass cls = SlotClass::SignedScale;
      switch (n.kind) {
        case NodeKind::Spectral:  // period
        case NodeKind::SqDist:    // lengthscale
          cls = SlotClass::Scale;
          break;
        case NodeKind::DotProd:
          cls = (i == 1) ? SlotClass::Shift : SlotClass::Scale;
          break;
        case NodeKind::Power:  // exponent
          cls = SlotClass::Shift;
          break;
        default:  // hp wrap and anything else
          cls = SlotClass::SignedScale;
      }
      classes.at(static_cast<std::size_t>(c.slot)) = cls;
    } else {
      infer_node(c, classes);
    }
  }
}

}  // namespace

std::vector<SlotClass> infer_slot_classes(const KernelExpr& expr) {
  std::vector<SlotClass> classes(static_cast<std::size_t>(expr.hyper_count),
                                 SlotClass::SignedScale);
  infer_node(expr.root, classes);
  return classes;
}

ThetaVector make_theta(const KernelExpr& expr, const BoundsTable& table) {
  ThetaVector theta;
  auto classes = infer_slot_classes(expr);
  theta.values.assign(classes.size() + 1, 0.0);
  theta.bounds.reserve(classes.size() + 1);
  for (SlotClass c : classes) theta.bounds.push_back(table.for_class(c));
  theta.bounds.push_back(table.noise);
  return theta;
}

double sample_slot(const SlotBounds& b, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  double u = unif(rng);
  if (b.log_init) {
    double lo = std::log(b.init_lo);
    double hi = std::log(b.init_hi);
    return std::exp(lo + u * (hi - lo));
  }
  return b.init_lo + u * (b.init_hi - b.init_lo);
}

ThetaVector sample_theta(const KernelExpr& expr, const BoundsTable& table,
                         std::mt19937_64& rng) {
  ThetaVector theta = make_theta(expr, table);
  for (std::size_t i = 0; i < theta.values.size(); ++i) {
    theta.values[i] = sample_slot(theta.bounds[i], rng);
  }
  return theta;
}

}  // namespace evocov
