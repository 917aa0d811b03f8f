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

#ifndef EVOCOV_KERNELS_HPP
#define EVOCOV_KERNELS_HPP

#include "evocov/bounds.hpp"
#include "evocov/expr.hpp"

#include <span>
#include <string>
#include <utility>
#include <vector>

namespace evocov {

enum class BuiltinName { CON, WN, E, EGamma, SE, M12, M32, M52, RQ, PER, LIN };

constexpr std::array<BuiltinName, 11> kAllBuiltins{
    BuiltinName::CON, BuiltinName::WN,  BuiltinName::E,   BuiltinName::EGamma,
    BuiltinName::SE,  BuiltinName::M12, BuiltinName::M32, BuiltinName::M52,
    BuiltinName::RQ,  BuiltinName::PER, BuiltinName::LIN};

const char* to_string(BuiltinName n);
BuiltinName builtin_from_string(const std::string& name);

/// A well-known kernel expressed as a grammar tree.  Where a formula reuses
/// the lengthscale in several places, each occurrence gets its own slot (the
/// grammar never shares slots); slot_roles documents the mapping.
struct BuiltinKernel {
  BuiltinName name;
  KernelExpr expr;
  std::vector<std::pair<int, std::string>> slot_roles;
  /// Theta skeleton with bespoke bounds where a slot needs one (the rational
  /// quadratic exponent must stay negative, the gamma exponent in (0, 2]).
  ThetaVector theta_template;
};

BuiltinKernel builtin(BuiltinName name, const BoundsTable& table = {});

/// Direct formula evaluation (independent of the tree evaluator), used as a
/// cross-check oracle.  Theta layout matches builtin(name).slot_roles.
double closed_form(BuiltinName name, const ThetaVector& theta,
                   std::span<const double> x, std::span<const double> x2);

}  // namespace evocov

#endif  // EVOCOV_KERNELS_HPP
