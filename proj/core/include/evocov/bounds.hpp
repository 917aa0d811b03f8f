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

#ifndef EVOCOV_BOUNDS_HPP
#define EVOCOV_BOUNDS_HPP

#include "evocov/expr.hpp"

#include <random>
#include <vector>

namespace evocov {

/// Role of a hyperparameter slot, inferred from the node that consumes it.
enum class SlotClass {
  Scale,        // lengthscales, periods: positive, log-scaled initialization
  SignedScale,  // hp-wrapped amplitudes: sign allowed
  Shift,        // dot-product shifts and power exponents
  Noise,        // the appended white-noise amplitude
};

/// Bound/init ranges per slot class.  Configuration, not code: experiments
/// may override any entry.
struct BoundsTable {
  SlotBounds scale{1e-5, 1e3, 1e-3, 1e2, true};
  SlotBounds signed_scale{-1e3, 1e3, 1e-3, 1e2, true};
  SlotBounds shift{-1e3, 1e3, -10.0, 10.0, false};
  SlotBounds noise{1e-5, 1e3, 1e-3, 1e2, true};

  const SlotBounds& for_class(SlotClass c) const;
};

/// Slot class per hyperparameter slot (size hyper_count), inferred from the
/// consuming node kind and argument position.
std::vector<SlotClass> infer_slot_classes(const KernelExpr& expr);

/// Theta skeleton for an expression: hyper_count + 1 entries (noise last),
/// bounds filled from the table, values unset (zero).
ThetaVector make_theta(const KernelExpr& expr, const BoundsTable& table);

double sample_slot(const SlotBounds& b, std::mt19937_64& rng);

/// Fresh theta with every slot drawn from its init distribution.
ThetaVector sample_theta(const KernelExpr& expr, const BoundsTable& table,
                         std::mt19937_64& rng);

}  // namespace evocov

#endif  // EVOCOV_BOUNDS_HPP
