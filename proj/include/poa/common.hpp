// Copyright 2026 The poa-lab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace poa {

// Two reals closer than this are treated as equal (bid ties, payment and
// welfare comparisons).
inline constexpr double kEqualityTolerance = 1e-12;

// A unilateral gain at most this large still counts as an exact equilibrium.
inline constexpr double kRegretTolerance = 1e-9;

enum class Pricing { discriminatory, uniform };

enum class BidInterface { standard, uniform };

// Which bid sets the per-unit price under uniform pricing.
enum class UniformPriceRule { highest_losing, lowest_winning };

enum class ValuationClass { submodular, subadditive, general };

// Malformed input: violated invariants, bad dimensions, unknown names.
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// An exhaustive search would exceed its configured budget.
class CapExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline std::string_view to_string(Pricing p) {
  return p == Pricing::discriminatory ? "discriminatory" : "uniform";
}

inline std::string_view to_string(BidInterface b) {
  return b == BidInterface::standard ? "standard" : "uniform";
}

inline std::string_view to_string(ValuationClass c) {
  switch (c) {
    case ValuationClass::submodular: return "submodular";
    case ValuationClass::subadditive: return "subadditive";
    case ValuationClass::general: return "general";
  }
  return "general";
}

inline Pricing parse_pricing(std::string_view s) {
  if (s == "discriminatory" || s == "da") return Pricing::discriminatory;
  if (s == "uniform" || s == "upa") return Pricing::uniform;
  throw InvalidInput("unknown pricing rule: " + std::string(s));
}

inline BidInterface parse_interface(std::string_view s) {
  if (s == "standard") return BidInterface::standard;
  if (s == "uniform") return BidInterface::uniform;
  throw InvalidInput("unknown bidding interface: " + std::string(s));
}

inline ValuationClass parse_valuation_class(std::string_view s) {
  if (s == "submodular") return ValuationClass::submodular;
  if (s == "subadditive") return ValuationClass::subadditive;
  if (s == "general") return ValuationClass::general;
  throw InvalidInput("unknown valuation class: " + std::string(s));
}

}  // namespace poa
