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

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "poa/common.hpp"

namespace poa {

/// A bidder's value for receiving 0..k identical units.
///
/// Stores v(0..k) with v(0) = 0 and v non-decreasing. Immutable once built.
class Valuation {
 public:
  Valuation() : values_{0.0, 0.0} {}

  explicit Valuation(std::vector<double> values) : values_(std::move(values)) {
    if (values_.size() < 2) {
      throw InvalidInput("valuation needs at least one unit (k >= 1)");
    }
    if (values_[0] != 0.0) throw InvalidInput("valuation must have v(0) = 0");
    for (std::size_t j = 1; j < values_.size(); ++j) {
      if (!std::isfinite(values_[j])) {
        throw InvalidInput("valuation entries must be finite");
      }
      if (values_[j] < values_[j - 1] - kEqualityTolerance) {
        throw InvalidInput("valuation must be non-decreasing (v(" +
                           std::to_string(j) + ") < v(" +
                           std::to_string(j - 1) + "))");
      }
    }
  }

  /// Builds v from marginal values m(1..k) by prefix summation.
  static Valuation from_marginals(std::span<const double> marginals) {
    std::vector<double> v(marginals.size() + 1, 0.0);
    for (std::size_t j = 0; j < marginals.size(); ++j) {
      v[j + 1] = v[j] + marginals[j];
    }
    return Valuation(std::move(v));
  }

  /// Constant value `level` for any positive number of units.
  static Valuation single_minded_flat(int k, double level) {
    std::vector<double> v(static_cast<std::size_t>(k) + 1, level);
    v[0] = 0.0;
    return Valuation(std::move(v));
  }

  /// v(j) = per_unit * j.
  static Valuation additive(int k, double per_unit) {
    std::vector<double> v(static_cast<std::size_t>(k) + 1);
    for (int j = 0; j <= k; ++j) v[j] = per_unit * j;
    return Valuation(std::move(v));
  }

  int units() const { return static_cast<int>(values_.size()) - 1; }

  double operator()(int j) const { return values_[static_cast<std::size_t>(j)]; }

  std::span<const double> values() const { return values_; }

  bool operator==(const Valuation&) const = default;

 private:
  std::vector<double> values_;
};

/// m(j) = v(j) - v(j-1) for j = 1..k.
inline std::vector<double> marginals(const Valuation& val) {
  std::vector<double> m(static_cast<std::size_t>(val.units()));
  for (int j = 1; j <= val.units(); ++j) m[j - 1] = val(j) - val(j - 1);
  return m;
}

/// True iff marginal values are non-increasing.
inline bool is_submodular(const Valuation& val) {
  for (int j = 2; j <= val.units(); ++j) {
    if (val(j) - val(j - 1) > val(j - 1) - val(j - 2) + kEqualityTolerance) {
      return false;
    }
  }
  return true;
}

/// True iff v(x + y) <= v(x) + v(y) for all x, y >= 1 with x + y <= k.
/// Values beyond k units are undefined and never consulted.
inline bool is_subadditive(const Valuation& val) {
  const int k = val.units();
  for (int x = 1; x <= k; ++x) {
    for (int y = x; x + y <= k; ++y) {
      if (val(x + y) > val(x) + val(y) + kEqualityTolerance) return false;
    }
  }
  return true;
}

inline bool satisfies_class(const Valuation& val, ValuationClass cls) {
  switch (cls) {
    case ValuationClass::submodular: return is_submodular(val);
    case ValuationClass::subadditive: return is_subadditive(val);
    case ValuationClass::general: return true;
  }
  return true;
}

/// The unit count j in [1, x] minimising the average value v(j)/j.
///
/// Ratio ties resolve to the largest such j, so non-increasing averages
/// (every submodular v) give tau = x. A valuation that is zero on [1, x]
/// yields 1.
inline int tau(const Valuation& val, int x) {
  if (x < 1 || x > val.units()) {
    throw InvalidInput("tau: unit count " + std::to_string(x) +
                       " outside [1, " + std::to_string(val.units()) + "]");
  }
  if (val(x) <= 0.0) return 1;
  int best = 1;
  double best_ratio = val(1);
  for (int j = 2; j <= x; ++j) {
    const double ratio = val(j) / j;
    if (ratio <= best_ratio + kEqualityTolerance * std::max(1.0, best_ratio)) {
      best = j;
      best_ratio = std::min(best_ratio, ratio);
    }
  }
  return best;
}

/// Deterministic random valuation of the requested class.
///
/// submodular: k uniform marginals in [0, scale] sorted non-increasing.
/// subadditive: v(j) drawn uniformly between v(j-1) and the tightest split
///   bound min_a v(a) + v(j-a), so every prefix stays subadditive.
/// general: unsorted uniform marginals (any monotone curve).
inline Valuation random_valuation(ValuationClass cls, int k, double scale,
                                  std::uint64_t seed) {
  if (k < 1) throw InvalidInput("random_valuation: k must be >= 1");
  if (!(scale > 0.0)) throw InvalidInput("random_valuation: scale must be > 0");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  Valuation out;
  switch (cls) {
    case ValuationClass::submodular: {
      std::vector<double> m(static_cast<std::size_t>(k));
      for (auto& x : m) x = scale * unit(rng);
      std::sort(m.begin(), m.end(), std::greater<>());
      out = Valuation::from_marginals(m);
      break;
    }
    case ValuationClass::subadditive: {
      std::vector<double> v(static_cast<std::size_t>(k) + 1, 0.0);
      v[1] = scale * unit(rng);
      for (int j = 2; j <= k; ++j) {
        double cap = v[j - 1] + v[1];
        for (int a = 2; a < j; ++a) cap = std::min(cap, v[a] + v[j - a]);
        v[j] = v[j - 1] + (cap - v[j - 1]) * unit(rng);
      }
      out = Valuation(std::move(v));
      break;
    }
    case ValuationClass::general: {
      std::vector<double> m(static_cast<std::size_t>(k));
      for (auto& x : m) x = scale * unit(rng);
      out = Valuation::from_marginals(m);
      break;
    }
  }
  if (!satisfies_class(out, cls)) {
    throw std::logic_error("random_valuation produced a curve outside its class");
  }
  return out;
}

}  // namespace poa
