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

// Bid grids, best responses, and pure / epsilon / Bayes-Nash verification.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <set>
#include <utility>
#include <vector>

#include "poa/common.hpp"
#include "poa/mechanism.hpp"
#include "poa/parallel.hpp"
#include "poa/valuation.hpp"
#include "poa/welfare.hpp"

namespace poa {

/// Finite bid space: multiples of `tick` in [0, max_bid].
class BidGrid {
 public:
  BidGrid(double tick, double max_bid, BidInterface interface = BidInterface::standard,
          bool no_overbidding = true)
      : tick_(tick), max_bid_(max_bid), interface_(interface), no_overbidding_(no_overbidding) {
    if (!(tick > 0.0) || !std::isfinite(tick)) throw InvalidInput("grid tick must be > 0");
    if (!(max_bid > 0.0) || !std::isfinite(max_bid)) throw InvalidInput("grid max_bid must be > 0");
    // Decimal ticks such as 0.001: divide by 1000 so that level 333 is the
    // same double as the literal 0.333.
    const double inv = 1.0 / tick;
    if (std::abs(inv - std::round(inv)) < 1e-9 * inv) divisor_ = std::round(inv);
  }

  double tick() const { return tick_; }
  double max_bid() const { return max_bid_; }
  BidInterface interface() const { return interface_; }
  bool no_overbidding() const { return no_overbidding_; }

  /// Number of grid points, including 0.
  long levels() const { return static_cast<long>(std::floor(max_bid_ / tick_ + 1e-9)) + 1; }

  double level(long l) const {
    return divisor_ > 0.0 ? static_cast<double>(l) / divisor_ : static_cast<double>(l) * tick_;
  }

  bool contains(double x) const {
    if (x < 0.0 || x > max_bid_ + kEqualityTolerance) return false;
    const double q = x / tick_;
    return std::abs(q - std::round(q)) < 1e-9;
  }

  /// Smallest grid point strictly above x.
  double next_above(double x) const {
    return level(static_cast<long>(std::floor(x / tick_ + 1e-9)) + 1);
  }

  /// Largest grid point not above x (0 for negative x).
  double floor_level(double x) const {
    return level(std::max(0L, static_cast<long>(std::floor(x / tick_ + 1e-9))));
  }

 private:
  double tick_;
  double max_bid_;
  BidInterface interface_;
  bool no_overbidding_;
  double divisor_ = 0.0;
};

/// Complete-information auction: one valuation per bidder plus the rules.
struct AuctionInstance {
  std::vector<Valuation> valuations;
  Pricing pricing = Pricing::discriminatory;
  TieBreakRule tie_break = TieBreakRule::lexicographic();
  UniformPriceRule price_rule = UniformPriceRule::highest_losing;

  int bidders() const { return static_cast<int>(valuations.size()); }
  int units() const { return valuations.empty() ? 0 : valuations.front().units(); }
  AuctionRules rules() const { return AuctionRules{pricing, price_rule}; }
};

struct DeviationOptions {
  // Also scan every uniform grid bid when k * |grid| is at most the cap.
  bool enumerate_uniform_grid = true;
  long enumeration_cap = 50000;
  // Scan every non-increasing grid vector (k <= 4 only).
  bool full_standard_enumeration = false;
};

struct BestResponse {
  Bid bid;
  double utility = 0.0;
  int units = 0;
};

/// True iff the constant bid `level` on the first `quantity` slots never
/// overbids: s * level <= v(s) for every s <= quantity.
inline bool constant_bid_affordable(const Valuation& val, double level, int quantity) {
  for (int s = 1; s <= quantity; ++s) {
    if (s * level > val(s) + kEqualityTolerance) return false;
  }
  return true;
}

/// Highest per-unit level a constant bid on `quantity` slots may carry.
inline double max_affordable_level(const Valuation& val, int quantity) {
  double cap = std::numeric_limits<double>::infinity();
  for (int s = 1; s <= quantity; ++s) cap = std::min(cap, val(s) / s);
  return cap;
}

namespace detail {

// Utility of bidder i for candidate bids against a fixed b_{-i}. Holds
// pointers into `profile`, which must outlive the evaluator.
class DeviationEvaluator {
 public:
  DeviationEvaluator(const BidProfile& profile, int i, const Valuation& val,
                     const TieBreakRule& tb, AuctionRules rules)
      : ptrs_(bid_pointers(profile)), i_(static_cast<std::size_t>(i)), val_(val), tb_(tb),
        rules_(rules), k_(profile.units()) {
    if (val.units() != k_) throw InvalidInput("valuation and profile disagree on k");
  }

  DeviationEvaluator(std::vector<const StandardBid*> ptrs, int i, const Valuation& val,
                     const TieBreakRule& tb, AuctionRules rules)
      : ptrs_(std::move(ptrs)), i_(static_cast<std::size_t>(i)), val_(val), tb_(tb),
        rules_(rules), k_(val.units()) {}

  double operator()(const StandardBid& bid, int* units = nullptr) {
    const StandardBid* saved = ptrs_[i_];
    ptrs_[i_] = &bid;
    const Outcome out = allocate_bids(ptrs_, tb_, k_, rules_.price_rule);
    ptrs_[i_] = saved;
    const int x = out.allocation[i_];
    if (units != nullptr) *units = x;
    const double pay = rules_.pricing == Pricing::discriminatory ? bid.prefix_sum(x)
                                                                 : x * out.uniform_price;
    return val_(x) - pay;
  }

  /// beta(b_{-i}).
  std::vector<double> opposing_winning_bids() {
    const StandardBid zero = StandardBid::zero(k_);
    const StandardBid* saved = ptrs_[i_];
    ptrs_[i_] = &zero;
    auto beta = allocate_bids(ptrs_, tb_, k_).winning_bids;
    ptrs_[i_] = saved;
    return beta;
  }

  void set_opponent(int j, const StandardBid* bid) { ptrs_[static_cast<std::size_t>(j)] = bid; }

 private:
  std::vector<const StandardBid*> ptrs_;
  std::size_t i_;
  const Valuation& val_;
  const TieBreakRule& tb_;
  AuctionRules rules_;
  int k_;
};

struct ConstantCandidate {
  double level;
  int quantity;
  bool operator<(const ConstantCandidate& o) const {
    return level != o.level ? level < o.level : quantity < o.quantity;
  }
};

// Cheapest ways to win exactly j units against beta(b_{-i}): match the
// j-th lowest opposing winning bid (wins if the tie-break favours us) or go
// one tick above it. Uniform pricing also tries the highest affordable
// level, which wins the same units at the same price but survives ties.
inline void threshold_candidates(const std::vector<double>& beta, const Valuation& val,
                                 const BidGrid& grid, Pricing pricing,
                                 std::set<ConstantCandidate>& out) {
  const int k = static_cast<int>(beta.size());
  for (int j = 1; j <= k; ++j) {
    const double b = beta[static_cast<std::size_t>(j - 1)];
    out.insert({b, j});
    out.insert({grid.next_above(b), j});
    if (pricing == Pricing::uniform) {
      const double cap = std::min(max_affordable_level(val, j), grid.max_bid());
      out.insert({grid.floor_level(cap), j});
    }
  }
}

inline void grid_candidates(int k, const BidGrid& grid, std::set<ConstantCandidate>& out) {
  for (long l = 1; l < grid.levels(); ++l) {
    for (int q = 1; q <= k; ++q) out.insert({grid.level(l), q});
  }
}

inline bool admissible(const ConstantCandidate& c, const Valuation& val, const BidGrid& grid) {
  if (!(c.level > 0.0) || c.level > grid.max_bid() + kEqualityTolerance) return false;
  return !grid.no_overbidding() || constant_bid_affordable(val, c.level, c.quantity);
}

inline Bid make_bid(const ConstantCandidate& c, int k, BidInterface interface) {
  if (interface == BidInterface::uniform) return UniformBid{c.level, c.quantity};
  return StandardBid::constant(c.level, c.quantity, k);
}

inline Bid zero_bid(int k, BidInterface interface) {
  if (interface == BidInterface::uniform) return UniformBid{0.0, 0};
  return StandardBid::zero(k);
}

inline void enumerate_nonincreasing(int k, const BidGrid& grid, const Valuation& val,
                                    std::vector<double>& prefix, long max_level,
                                    std::vector<StandardBid>& out, long cap) {
  const int j = static_cast<int>(prefix.size());
  if (j == k) {
    if (static_cast<long>(out.size()) >= cap) {
      throw CapExceeded("standard bid enumeration exceeds its cap");
    }
    out.emplace_back(prefix);
    return;
  }
  const double spent = std::accumulate(prefix.begin(), prefix.end(), 0.0);
  for (long l = 0; l <= max_level; ++l) {
    const double b = grid.level(l);
    if (grid.no_overbidding() && spent + b > val(j + 1) + kEqualityTolerance) break;
    prefix.push_back(b);
    enumerate_nonincreasing(k, grid, val, prefix, l, out, cap);
    prefix.pop_back();
  }
}

}  // namespace detail

/// Every non-increasing vector of grid levels (respecting no-overbidding
/// when the grid demands it). Only sensible for small k and coarse grids.
inline std::vector<StandardBid> enumerate_standard_bids(const Valuation& val, const BidGrid& grid,
                                                        long cap = 5'000'000) {
  std::vector<StandardBid> out;
  std::vector<double> prefix;
  detail::enumerate_nonincreasing(val.units(), grid, val, prefix, grid.levels() - 1, out, cap);
  return out;
}

/// The zero bid plus every (level, quantity) uniform bid on the grid.
inline std::vector<UniformBid> enumerate_uniform_bids(const Valuation& val, const BidGrid& grid) {
  std::vector<UniformBid> out{UniformBid{0.0, 0}};
  for (long l = 1; l < grid.levels(); ++l) {
    for (int q = 1; q <= val.units(); ++q) {
      const double c = grid.level(l);
      if (grid.no_overbidding() && !constant_bid_affordable(val, c, q)) continue;
      out.push_back(UniformBid{c, q});
    }
  }
  return out;
}

/// A bidder's whole grid strategy space under the grid's interface.
inline std::vector<Bid> strategy_space(const Valuation& val, const BidGrid& grid,
                                       long cap = 5'000'000) {
  std::vector<Bid> out;
  if (grid.interface() == BidInterface::uniform) {
    for (const auto& b : enumerate_uniform_bids(val, grid)) out.emplace_back(b);
  } else {
    for (auto& b : enumerate_standard_bids(val, grid, cap)) out.emplace_back(std::move(b));
  }
  return out;
}

namespace detail {

inline std::set<ConstantCandidate> deviation_family(const std::vector<double>& beta,
                                                    const Valuation& val, const BidGrid& grid,
                                                    Pricing pricing,
                                                    const DeviationOptions& options) {
  std::set<ConstantCandidate> cands;
  threshold_candidates(beta, val, grid, pricing, cands);
  const int k = val.units();
  if (options.enumerate_uniform_grid &&
      static_cast<double>(k) * static_cast<double>(grid.levels()) <=
          static_cast<double>(options.enumeration_cap)) {
    grid_candidates(k, grid, cands);
  }
  return cands;
}

inline bool full_enumeration_enabled(const DeviationOptions& options, const BidGrid& grid, int k) {
  return options.full_standard_enumeration && grid.interface() == BidInterface::standard && k <= 4;
}

}  // namespace detail

/// Best deviation of bidder i (valuation `val`) against the other bids in
/// `profile`. The search covers the zero bid, the cheapest constant bid
/// winning each unit count j, and (when small enough) every uniform grid bid
/// or every standard grid vector.
inline BestResponse best_response(int i, const Valuation& val, const BidProfile& profile,
                                  const BidGrid& grid, AuctionRules rules,
                                  const TieBreakRule& tb, const DeviationOptions& options = {}) {
  detail::DeviationEvaluator eval(profile, i, val, tb, rules);
  const int k = profile.units();

  BestResponse best;
  best.bid = detail::zero_bid(k, grid.interface());
  best.utility = eval(StandardBid::zero(k), &best.units);

  const auto cands =
      detail::deviation_family(eval.opposing_winning_bids(), val, grid, rules.pricing, options);
  for (const auto& c : cands) {
    if (!detail::admissible(c, val, grid)) continue;
    int units = 0;
    const double u = eval(StandardBid::constant(c.level, c.quantity, k), &units);
    if (u > best.utility) {
      best = {detail::make_bid(c, k, grid.interface()), u, units};
    }
  }
  if (detail::full_enumeration_enabled(options, grid, k)) {
    for (const auto& b : enumerate_standard_bids(val, grid)) {
      int units = 0;
      const double u = eval(b, &units);
      if (u > best.utility) best = {b, u, units};
    }
  }
  return best;
}

inline BestResponse best_response(int i, const Valuation& val, const BidProfile& profile,
                                  const BidGrid& grid, Pricing pricing, const TieBreakRule& tb,
                                  const DeviationOptions& options = {}) {
  return best_response(i, val, profile, grid, AuctionRules{pricing, UniformPriceRule::highest_losing},
                       tb, options);
}

struct RegretReport {
  std::vector<double> current_utility;
  std::vector<double> best_utility;
  std::vector<double> regret;
  std::vector<Bid> best_deviation;
  double max_regret = 0.0;

  bool equilibrium(double eps = 0.0) const { return max_regret <= eps + kRegretTolerance; }
};

/// Unilateral regret of every bidder in `profile`.
inline RegretReport is_pure_nash(const BidProfile& profile, const AuctionInstance& instance,
                                 const BidGrid& grid, const DeviationOptions& options = {}) {
  if (profile.bidders() != instance.bidders()) {
    throw InvalidInput("profile and instance disagree on the number of bidders");
  }
  RegretReport report;
  for (int i = 0; i < profile.bidders(); ++i) {
    const auto& val = instance.valuations[static_cast<std::size_t>(i)];
    detail::DeviationEvaluator eval(profile, i, val, instance.tie_break, instance.rules());
    const double current = eval(profile.marginal_bids(i));
    const BestResponse br =
        best_response(i, val, profile, grid, instance.rules(), instance.tie_break, options);
    const double regret = std::max(0.0, br.utility - current);
    report.current_utility.push_back(current);
    report.best_utility.push_back(std::max(current, br.utility));
    report.regret.push_back(regret);
    report.best_deviation.push_back(br.utility > current ? br.bid : profile.submitted(i));
    report.max_regret = std::max(report.max_regret, regret);
  }
  return report;
}

inline bool is_epsilon_equilibrium(const BidProfile& profile, const AuctionInstance& instance,
                                   const BidGrid& grid, double eps,
                                   const DeviationOptions& options = {}) {
  return is_pure_nash(profile, instance, grid, options).equilibrium(eps);
}

enum class SearchMode { exhaustive, best_response_dynamics };

struct SearchOptions {
  SearchMode mode = SearchMode::exhaustive;
  long profile_cap = 100'000'000;
  int starts = 16;
  int max_rounds = 200;
  std::uint64_t seed = 1;
  int threads = 1;
  DeviationOptions deviations;
};

struct SearchResult {
  std::vector<BidProfile> equilibria;
  bool exhaustive = false;
  long profiles_evaluated = 0;
};

namespace detail {

inline BidProfile profile_from_bids(int k, const std::vector<Bid>& bids, BidInterface interface) {
  if (interface == BidInterface::uniform) {
    std::vector<UniformBid> ub;
    for (const auto& b : bids) ub.push_back(std::get<UniformBid>(b));
    return BidProfile(k, std::move(ub));
  }
  std::vector<StandardBid> sb;
  for (const auto& b : bids) sb.push_back(std::get<StandardBid>(b));
  return BidProfile(k, std::move(sb));
}

inline SearchResult exhaustive_search(const AuctionInstance& instance, const BidGrid& grid,
                                      const SearchOptions& options) {
  const int n = instance.bidders();
  const int k = instance.units();
  std::vector<std::vector<Bid>> spaces;
  std::vector<std::vector<StandardBid>> expanded;
  long total = 1;
  for (const auto& val : instance.valuations) {
    spaces.push_back(strategy_space(val, grid, options.profile_cap));
    std::vector<StandardBid> e;
    for (const auto& b : spaces.back()) e.push_back(as_standard(b, k));
    expanded.push_back(std::move(e));
    const long size = static_cast<long>(spaces.back().size());
    if (total > options.profile_cap / size) {
      throw CapExceeded("profile space exceeds the exhaustive-search cap");
    }
    total *= size;
  }

  // Profile index = sum_j s_j * stride_j.
  std::vector<long> stride(static_cast<std::size_t>(n), 1);
  for (int j = 1; j < n; ++j) {
    stride[static_cast<std::size_t>(j)] =
        stride[static_cast<std::size_t>(j - 1)] * static_cast<long>(spaces[static_cast<std::size_t>(j - 1)].size());
  }
  std::vector<std::uint8_t> stable(static_cast<std::size_t>(total), 1);

  for (int i = 0; i < n; ++i) {
    const auto I = static_cast<std::size_t>(i);
    const long own = static_cast<long>(spaces[I].size());
    const long configs = total / own;
    parallel_for(
        configs,
        [&](long config) {
          // Decode opponents' strategy indices from `config`.
          std::vector<const StandardBid*> ptrs(static_cast<std::size_t>(n), nullptr);
          long rest = config;
          long base = 0;
          for (int j = 0; j < n; ++j) {
            if (j == i) continue;
            const auto J = static_cast<std::size_t>(j);
            const long size = static_cast<long>(spaces[J].size());
            const long s = rest % size;
            rest /= size;
            ptrs[J] = &expanded[J][static_cast<std::size_t>(s)];
            base += s * stride[J];
          }
          ptrs[I] = &expanded[I][0];
          DeviationEvaluator eval(ptrs, i, instance.valuations[I], instance.tie_break,
                                  instance.rules());
          std::vector<double> u(static_cast<std::size_t>(own));
          double best = -std::numeric_limits<double>::infinity();
          for (long s = 0; s < own; ++s) {
            u[static_cast<std::size_t>(s)] = eval(expanded[I][static_cast<std::size_t>(s)]);
            best = std::max(best, u[static_cast<std::size_t>(s)]);
          }
          for (long s = 0; s < own; ++s) {
            if (u[static_cast<std::size_t>(s)] < best - kRegretTolerance) {
              stable[static_cast<std::size_t>(base + s * stride[I])] = 0;
            }
          }
        },
        options.threads);
  }

  SearchResult result;
  result.exhaustive = true;
  result.profiles_evaluated = total;
  for (long idx = 0; idx < total; ++idx) {
    if (!stable[static_cast<std::size_t>(idx)]) continue;
    std::vector<Bid> bids;
    for (int j = 0; j < n; ++j) {
      const auto J = static_cast<std::size_t>(j);
      const long s = (idx / stride[J]) % static_cast<long>(spaces[J].size());
      bids.push_back(spaces[J][static_cast<std::size_t>(s)]);
    }
    result.equilibria.push_back(profile_from_bids(k, bids, grid.interface()));
  }
  return result;
}

inline SearchResult dynamics_search(const AuctionInstance& instance, const BidGrid& grid,
                                    const SearchOptions& options) {
  const int n = instance.bidders();
  const int k = instance.units();
  std::mt19937_64 rng(options.seed);
  SearchResult result;

  for (int start = 0; start < options.starts; ++start) {
    std::vector<Bid> bids;
    for (const auto& val : instance.valuations) {
      // Random affordable uniform bid as the starting point.
      std::uniform_int_distribution<int> qd(0, k);
      const int q = qd(rng);
      const double cap = q == 0 ? 0.0 : std::min(max_affordable_level(val, q), grid.max_bid());
      const long top = static_cast<long>(std::floor(cap / grid.tick() + 1e-9));
      std::uniform_int_distribution<long> ld(0, std::max(0L, top));
      const ConstantCandidate c{grid.level(ld(rng)), q};
      bids.push_back(c.level > 0.0 ? make_bid(c, k, grid.interface())
                                   : zero_bid(k, grid.interface()));
    }
    BidProfile profile = profile_from_bids(k, bids, grid.interface());

    bool converged = false;
    for (int round = 0; round < options.max_rounds && !converged; ++round) {
      converged = true;
      for (int i = 0; i < n; ++i) {
        const auto& val = instance.valuations[static_cast<std::size_t>(i)];
        DeviationEvaluator eval(profile, i, val, instance.tie_break, instance.rules());
        const double current = eval(profile.marginal_bids(i));
        const BestResponse br = best_response(i, val, profile, grid, instance.rules(),
                                              instance.tie_break, options.deviations);
        ++result.profiles_evaluated;
        if (br.utility > current + kRegretTolerance) {
          profile = profile.with_bid(i, br.bid);
          converged = false;
        }
      }
    }
    if (converged &&
        std::find(result.equilibria.begin(), result.equilibria.end(), profile) ==
            result.equilibria.end()) {
      result.equilibria.push_back(profile);
    }
  }
  return result;
}

}  // namespace detail

/// Pure equilibria of the grid game. Exhaustive mode returns every profile
/// (in index order) where no bidder gains over its whole strategy space;
/// dynamics mode returns distinct fixed points of round-robin best responses
/// from seeded random starts and may miss equilibria.
inline SearchResult find_pure_nash(const AuctionInstance& instance, const BidGrid& grid,
                                   const SearchOptions& options = {}) {
  if (instance.bidders() < 1) throw InvalidInput("find_pure_nash: no bidders");
  return options.mode == SearchMode::exhaustive ? detail::exhaustive_search(instance, grid, options)
                                                : detail::dynamics_search(instance, grid, options);
}

// ---------------------------------------------------------------------------
// Bayesian games

/// Finite distribution over bids.
struct MixedBid {
  std::vector<Bid> bids;
  std::vector<double> probs;

  static MixedBid pure(Bid bid) { return MixedBid{{std::move(bid)}, {1.0}}; }
};

/// strategy[i][t]: what bidder i plays when its type is t.
using Strategy = std::vector<std::vector<MixedBid>>;

struct BayesianGame {
  int k = 1;
  std::vector<std::vector<Valuation>> types;
  std::vector<std::vector<double>> priors;
  BidGrid grid{0.001, 1.0};
  TieBreakRule tie_break = TieBreakRule::lexicographic();
  Pricing pricing = Pricing::discriminatory;

  int bidders() const { return static_cast<int>(types.size()); }

  void validate() const {
    if (types.size() != priors.size() || types.empty()) {
      throw InvalidInput("bayesian game: types and priors must cover the same bidders");
    }
    for (std::size_t i = 0; i < types.size(); ++i) {
      if (types[i].empty() || types[i].size() != priors[i].size()) {
        throw InvalidInput("bayesian game: every bidder needs one prior entry per type");
      }
      double sum = 0.0;
      for (double p : priors[i]) {
        if (!(p >= 0.0)) throw InvalidInput("bayesian game: priors must be non-negative");
        sum += p;
      }
      if (std::abs(sum - 1.0) > 1e-9) throw InvalidInput("bayesian game: priors must sum to 1");
      for (const auto& v : types[i]) {
        if (v.units() != k) throw InvalidInput("bayesian game: type valuations must have k units");
      }
    }
  }
};

inline void validate_strategy(const BayesianGame& game, const Strategy& strat) {
  game.validate();
  if (strat.size() != game.types.size()) throw InvalidInput("strategy: wrong number of bidders");
  for (std::size_t i = 0; i < strat.size(); ++i) {
    if (strat[i].size() != game.types[i].size()) {
      throw InvalidInput("strategy: one mixed bid per type required");
    }
    for (std::size_t t = 0; t < strat[i].size(); ++t) {
      const auto& mb = strat[i][t];
      if (mb.bids.empty() || mb.bids.size() != mb.probs.size()) {
        throw InvalidInput("strategy: malformed mixed bid");
      }
      double sum = 0.0;
      for (std::size_t s = 0; s < mb.bids.size(); ++s) {
        if (!(mb.probs[s] >= 0.0)) throw InvalidInput("strategy: negative probability");
        sum += mb.probs[s];
        const StandardBid b = as_standard(mb.bids[s], game.k);
        for (double x : b.values()) {
          if (!game.grid.contains(x)) throw InvalidInput("strategy: bid off the grid");
        }
        if (game.grid.no_overbidding() && !check_no_overbidding(game.types[i][t], b)) {
          throw InvalidInput("strategy: support point overbids");
        }
      }
      if (std::abs(sum - 1.0) > 1e-9) throw InvalidInput("strategy: probabilities must sum to 1");
    }
  }
}

struct BayesRegretReport {
  std::vector<std::vector<double>> expected_utility;  // [bidder][type]
  std::vector<std::vector<double>> best_utility;
  std::vector<std::vector<double>> regret;
  std::vector<std::vector<Bid>> best_deviation;
  double max_regret = 0.0;

  bool equilibrium(double tolerance = kRegretTolerance) const { return max_regret <= tolerance; }
};

namespace detail {

// One joint realisation of the opponents: their expanded bids and its
// probability.
struct Scenario {
  double prob;
  std::vector<StandardBid> bids;  // entry i is a placeholder
};

inline std::vector<Scenario> opposing_scenarios(const BayesianGame& game, const Strategy& strat,
                                                int i) {
  const int n = game.bidders();
  std::vector<Scenario> out{Scenario{1.0, std::vector<StandardBid>(static_cast<std::size_t>(n),
                                                                   StandardBid::zero(game.k))}};
  for (int j = 0; j < n; ++j) {
    if (j == i) continue;
    const auto J = static_cast<std::size_t>(j);
    std::vector<Scenario> next;
    for (const auto& sc : out) {
      for (std::size_t t = 0; t < game.types[J].size(); ++t) {
        const auto& mb = strat[J][t];
        for (std::size_t s = 0; s < mb.bids.size(); ++s) {
          const double p = sc.prob * game.priors[J][t] * mb.probs[s];
          if (p == 0.0) continue;
          Scenario ext = sc;
          ext.prob = p;
          ext.bids[J] = as_standard(mb.bids[s], game.k);
          next.push_back(std::move(ext));
        }
      }
    }
    out = std::move(next);
  }
  return out;
}

inline double expected_utility(const BayesianGame& game, std::vector<Scenario>& scenarios, int i,
                               const Valuation& val, const StandardBid& bid) {
  const AuctionRules rules{game.pricing, UniformPriceRule::highest_losing};
  double eu = 0.0;
  for (auto& sc : scenarios) {
    std::vector<const StandardBid*> ptrs;
    for (const auto& b : sc.bids) ptrs.push_back(&b);
    DeviationEvaluator eval(std::move(ptrs), i, val, game.tie_break, rules);
    eu += sc.prob * eval(bid);
  }
  return eu;
}

}  // namespace detail

/// Exact interim regret of every (bidder, type) against all pure grid
/// deviations in the deviation family, with expectations over opposing
/// types and mixed supports enumerated.
inline BayesRegretReport is_bayes_nash(const BayesianGame& game, const Strategy& strat,
                                       const DeviationOptions& options = {}) {
  validate_strategy(game, strat);
  BayesRegretReport report;
  const int n = game.bidders();
  for (int i = 0; i < n; ++i) {
    const auto I = static_cast<std::size_t>(i);
    auto scenarios = detail::opposing_scenarios(game, strat, i);
    report.expected_utility.emplace_back();
    report.best_utility.emplace_back();
    report.regret.emplace_back();
    report.best_deviation.emplace_back();
    for (std::size_t t = 0; t < game.types[I].size(); ++t) {
      const auto& val = game.types[I][t];
      const auto& mb = strat[I][t];
      double current = 0.0;
      for (std::size_t s = 0; s < mb.bids.size(); ++s) {
        current += mb.probs[s] *
                   detail::expected_utility(game, scenarios, i, val, as_standard(mb.bids[s], game.k));
      }

      std::set<detail::ConstantCandidate> cands;
      const AuctionRules rules{game.pricing, UniformPriceRule::highest_losing};
      for (auto& sc : scenarios) {
        std::vector<const StandardBid*> ptrs;
        for (const auto& b : sc.bids) ptrs.push_back(&b);
        detail::DeviationEvaluator eval(std::move(ptrs), i, val, game.tie_break, rules);
        detail::threshold_candidates(eval.opposing_winning_bids(), val, game.grid, game.pricing,
                                     cands);
      }
      if (options.enumerate_uniform_grid &&
          static_cast<double>(game.k) * static_cast<double>(game.grid.levels()) <=
              static_cast<double>(options.enumeration_cap)) {
        detail::grid_candidates(game.k, game.grid, cands);
      }

      double best = detail::expected_utility(game, scenarios, i, val, StandardBid::zero(game.k));
      Bid best_bid = detail::zero_bid(game.k, game.grid.interface());
      for (const auto& c : cands) {
        if (!detail::admissible(c, val, game.grid)) continue;
        const double u = detail::expected_utility(
            game, scenarios, i, val, StandardBid::constant(c.level, c.quantity, game.k));
        if (u > best) {
          best = u;
          best_bid = detail::make_bid(c, game.k, game.grid.interface());
        }
      }
      if (detail::full_enumeration_enabled(options, game.grid, game.k)) {
        for (const auto& b : enumerate_standard_bids(val, game.grid)) {
          const double u = detail::expected_utility(game, scenarios, i, val, b);
          if (u > best) {
            best = u;
            best_bid = b;
          }
        }
      }
      const double regret = std::max(0.0, best - current);
      report.expected_utility.back().push_back(current);
      report.best_utility.back().push_back(std::max(best, current));
      report.regret.back().push_back(regret);
      report.best_deviation.back().push_back(best_bid);
      report.max_regret = std::max(report.max_regret, regret);
    }
  }
  return report;
}

struct BayesianWelfare {
  double expected_optimum = 0.0;
  double expected_equilibrium = 0.0;
};

/// Expected optimal and equilibrium welfare, enumerating every type tuple
/// and every joint realisation of the mixed bids.
inline BayesianWelfare bayesian_welfare(const BayesianGame& game, const Strategy& strat) {
  validate_strategy(game, strat);
  const int n = game.bidders();
  BayesianWelfare out;
  std::vector<std::size_t> type(static_cast<std::size_t>(n), 0);
  while (true) {
    double p_types = 1.0;
    std::vector<Valuation> vals;
    for (int i = 0; i < n; ++i) {
      const auto I = static_cast<std::size_t>(i);
      p_types *= game.priors[I][type[I]];
      vals.push_back(game.types[I][type[I]]);
    }
    if (p_types > 0.0) {
      out.expected_optimum += p_types * optimal_allocation(vals).value;
      // Joint realisations of the mixed bids under this type tuple.
      std::vector<std::size_t> pick(static_cast<std::size_t>(n), 0);
      while (true) {
        double p = p_types;
        std::vector<StandardBid> bids;
        for (int i = 0; i < n; ++i) {
          const auto I = static_cast<std::size_t>(i);
          const auto& mb = strat[I][type[I]];
          p *= mb.probs[pick[I]];
          bids.push_back(as_standard(mb.bids[pick[I]], game.k));
        }
        if (p > 0.0) {
          const Outcome o = allocate(BidProfile(game.k, std::move(bids)), game.tie_break);
          out.expected_equilibrium += p * social_welfare(vals, o.allocation);
        }
        int pos = 0;
        while (pos < n) {
          const auto P = static_cast<std::size_t>(pos);
          if (++pick[P] < strat[P][type[P]].bids.size()) break;
          pick[P] = 0;
          ++pos;
        }
        if (pos == n) break;
      }
    }
    int pos = 0;
    while (pos < n) {
      const auto P = static_cast<std::size_t>(pos);
      if (++type[P] < game.types[P].size()) break;
      type[P] = 0;
      ++pos;
    }
    if (pos == n) break;
  }
  return out;
}

inline double bayesian_poa(const BayesianGame& game, const Strategy& strat) {
  const BayesianWelfare w = bayesian_welfare(game, strat);
  return poa_ratio(w.expected_optimum, w.expected_equilibrium);
}

// ---------------------------------------------------------------------------
// Structure of pure equilibria

/// Under uniform pricing with submodular v, a marginal bid above the
/// marginal value, or a first bid other than v(1), is weakly dominated.
inline bool is_undominated_upa(const Valuation& val, const StandardBid& bid) {
  if (!is_submodular(val)) throw InvalidInput("undominated check needs a submodular valuation");
  if (bid.units() != val.units()) throw InvalidInput("valuation and bid disagree on k");
  const auto m = marginals(val);
  for (int j = 1; j <= bid.units(); ++j) {
    if (bid(j) > m[static_cast<std::size_t>(j - 1)] + kEqualityTolerance) return false;
  }
  return std::abs(bid(1) - val(1)) <= kEqualityTolerance;
}

struct UniformConversion {
  BidProfile uniform;
  Outcome standard_outcome;
  Outcome uniform_outcome;
  double standard_welfare = 0.0;
  double uniform_welfare = 0.0;
  bool allocation_preserved = false;
  bool price_preserved = false;
  bool welfare_preserved = false;
};

/// Maps a uniform-price equilibrium in canonical undominated form (winners
/// bid their first x_i marginals then 0; losers bid (m_i(1), 0, ..., 0)) to
/// the uniform-interface profile: winners (v_i(x_i)/x_i, x_i), losers
/// (m_i(1), 1). The returned record carries the preservation checks.
inline UniformConversion pne_standard_to_uniform(const BidProfile& profile,
                                                 const AuctionInstance& instance) {
  if (profile.bidders() != instance.bidders()) {
    throw InvalidInput("profile and instance disagree on the number of bidders");
  }
  const int k = profile.units();
  UniformConversion out;
  out.standard_outcome = run_auction(profile, instance.tie_break, instance.rules());
  std::vector<UniformBid> ub;
  for (int i = 0; i < profile.bidders(); ++i) {
    const auto& val = instance.valuations[static_cast<std::size_t>(i)];
    if (!is_submodular(val)) throw InvalidInput("conversion needs submodular valuations");
    const auto m = marginals(val);
    const int x = out.standard_outcome.allocation[static_cast<std::size_t>(i)];
    const StandardBid& b = profile.marginal_bids(i);
    for (int j = 1; j <= k; ++j) {
      double expect = 0.0;
      if (x >= 1 && j <= x) expect = m[static_cast<std::size_t>(j - 1)];
      if (x == 0 && j == 1) expect = m[0];
      if (std::abs(b(j) - expect) > kEqualityTolerance) {
        throw InvalidInput("profile is not in canonical undominated form");
      }
    }
    ub.push_back(x >= 1 ? UniformBid{val(x) / x, x} : UniformBid{m[0], 1});
  }
  out.uniform = BidProfile(k, std::move(ub));
  out.uniform_outcome = run_auction(out.uniform, instance.tie_break, instance.rules());
  out.standard_welfare = social_welfare(instance.valuations, out.standard_outcome.allocation);
  out.uniform_welfare = social_welfare(instance.valuations, out.uniform_outcome.allocation);
  out.allocation_preserved = out.standard_outcome.allocation == out.uniform_outcome.allocation;
  out.price_preserved = std::abs(out.standard_outcome.uniform_price -
                                 out.uniform_outcome.uniform_price) <= kEqualityTolerance;
  out.welfare_preserved = std::abs(out.standard_welfare - out.uniform_welfare) <= kEqualityTolerance;
  return out;
}

/// Structural facts every discriminatory pure equilibrium satisfies, with
/// d the highest losing marginal bid:
///  (i)   every winning marginal bid equals d;
///  (ii)  l * d <= the last l marginal values a winner holds, for every l;
///  (iii) the next l marginal values beyond x_i sum to at most l * d.
struct PneStructure {
  double d = 0.0;
  bool winning_bids_equal = true;
  bool winners_blocks = true;
  bool losers_blocks = true;

  bool holds() const { return winning_bids_equal && winners_blocks && losers_blocks; }
};

inline PneStructure pne_structure(const BidProfile& profile, const AuctionInstance& instance) {
  const int k = profile.units();
  const Outcome out = allocate(profile, instance.tie_break);
  PneStructure s;
  for (int i = 0; i < profile.bidders(); ++i) {
    const int x = out.allocation[static_cast<std::size_t>(i)];
    for (int j = x + 1; j <= k; ++j) s.d = std::max(s.d, profile.marginal_bids(i)(j));
  }
  const double tol = kEqualityTolerance * std::max(1.0, s.d) * 8;
  for (int i = 0; i < profile.bidders(); ++i) {
    const auto& val = instance.valuations[static_cast<std::size_t>(i)];
    const auto& b = profile.marginal_bids(i);
    const int x = out.allocation[static_cast<std::size_t>(i)];
    for (int j = 1; j <= x; ++j) {
      if (std::abs(b(j) - s.d) > tol) s.winning_bids_equal = false;
    }
    for (int l = 1; l <= x; ++l) {
      if (l * s.d > val(x) - val(x - l) + tol) s.winners_blocks = false;
    }
    for (int l = 1; l <= k - x; ++l) {
      if (val(x + l) - val(x) > l * s.d + tol) s.losers_blocks = false;
    }
  }
  return s;
}

}  // namespace poa
