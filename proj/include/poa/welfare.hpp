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
#include <span>
#include <vector>

#include "poa/common.hpp"
#include "poa/valuation.hpp"

namespace poa {

struct OptimalAssignment {
  std::vector<int> allocation;
  double value = 0.0;
};

namespace detail {

inline int common_units(std::span<const Valuation> vals) {
  if (vals.empty()) throw InvalidInput("welfare: no bidders");
  const int k = vals.front().units();
  for (const auto& v : vals) {
    if (v.units() != k) throw InvalidInput("welfare: valuations disagree on k");
  }
  return k;
}

}  // namespace detail

/// Welfare-maximising split of all k units, by DP over (bidder suffix,
/// units left). Since every v is non-decreasing, handing out all k units
/// loses nothing, so the returned allocation always sums to k. Among
/// optimal splits the lexicographically smallest one is returned.
inline OptimalAssignment optimal_allocation(std::span<const Valuation> vals) {
  const int k = detail::common_units(vals);
  const int n = static_cast<int>(vals.size());
  const auto K = static_cast<std::size_t>(k);

  // best[i][u]: max welfare of bidders i..n-1 sharing exactly u units.
  std::vector<std::vector<double>> best(static_cast<std::size_t>(n) + 1,
                                        std::vector<double>(K + 1, -INFINITY));
  best[static_cast<std::size_t>(n)][0] = 0.0;
  for (int i = n - 1; i >= 0; --i) {
    const auto& v = vals[static_cast<std::size_t>(i)];
    auto& row = best[static_cast<std::size_t>(i)];
    const auto& next = best[static_cast<std::size_t>(i) + 1];
    for (int u = 0; u <= k; ++u) {
      for (int x = 0; x <= u; ++x) {
        const double rest = next[static_cast<std::size_t>(u - x)];
        if (rest == -INFINITY) continue;
        row[static_cast<std::size_t>(u)] = std::max(row[static_cast<std::size_t>(u)], v(x) + rest);
      }
    }
  }

  OptimalAssignment out;
  out.value = best[0][K];
  out.allocation.assign(static_cast<std::size_t>(n), 0);
  int left = k;
  for (int i = 0; i < n; ++i) {
    const auto& v = vals[static_cast<std::size_t>(i)];
    const double target = best[static_cast<std::size_t>(i)][static_cast<std::size_t>(left)];
    const double slack = kEqualityTolerance * std::max(1.0, std::abs(target));
    const auto& next = best[static_cast<std::size_t>(i) + 1];
    for (int x = 0; x <= left; ++x) {
      const double rest = next[static_cast<std::size_t>(left - x)];
      if (rest != -INFINITY && v(x) + rest >= target - slack) {
        out.allocation[static_cast<std::size_t>(i)] = x;
        left -= x;
        break;
      }
    }
  }
  return out;
}

/// Fast path for submodular bidders: the k largest marginals across all
/// bidders form an optimal allocation. Equal marginals go to the lower
/// bidder index.
inline OptimalAssignment greedy_optimal_submodular(std::span<const Valuation> vals) {
  const int k = detail::common_units(vals);
  for (const auto& v : vals) {
    if (!is_submodular(v)) throw InvalidInput("greedy allocation needs submodular valuations");
  }
  const int n = static_cast<int>(vals.size());
  OptimalAssignment out;
  out.allocation.assign(static_cast<std::size_t>(n), 0);
  for (int unit = 0; unit < k; ++unit) {
    int pick = -1;
    double best_gain = -INFINITY;
    for (int i = 0; i < n; ++i) {
      const int x = out.allocation[static_cast<std::size_t>(i)];
      if (x >= k) continue;
      const auto& v = vals[static_cast<std::size_t>(i)];
      const double gain = v(x + 1) - v(x);
      if (gain > best_gain) {
        best_gain = gain;
        pick = i;
      }
    }
    ++out.allocation[static_cast<std::size_t>(pick)];
  }
  for (int i = 0; i < n; ++i) {
    out.value += vals[static_cast<std::size_t>(i)](out.allocation[static_cast<std::size_t>(i)]);
  }
  return out;
}

/// Optimal welfare over equilibrium welfare.
inline double poa_ratio(double opt_value, double eq_welfare) {
  if (!(eq_welfare > 0.0)) {
    throw InvalidInput("price of anarchy undefined for non-positive equilibrium welfare");
  }
  return opt_value / eq_welfare;
}

}  // namespace poa
