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

// Canned constructions: lower-bound instances, template witnesses, and
// equilibrium builders for the discriminatory auction.

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "poa/common.hpp"
#include "poa/equilibria.hpp"
#include "poa/mechanism.hpp"
#include "poa/valuation.hpp"
#include "poa/welfare.hpp"

namespace poa {

struct Expectation {
  double value = 0.0;
  double tolerance = 1e-9;
  // "formula" for exact closed forms, "limit" when the value is only
  // approached as k grows or eps shrinks.
  std::string kind = "formula";
};

struct TaggedProfile {
  std::string role;  // "equilibrium" or "witness"
  BidProfile profile;
};

struct NamedInstance {
  std::string id;
  std::string description;
  AuctionInstance auction;
  BidInterface interface = BidInterface::standard;
  std::vector<TaggedProfile> profiles;
  std::map<std::string, Expectation> expected;
  std::optional<BidGrid> grid;  // deviation grid used to verify the profiles
  std::string notes;

  int bidders() const { return auction.bidders(); }
  int units() const { return auction.units(); }

  const BidProfile& profile(const std::string& role) const {
    for (const auto& p : profiles) {
      if (p.role == role) return p.profile;
    }
    throw InvalidInput("instance " + id + " has no " + role + " profile");
  }
};

// ---------------------------------------------------------------------------
// Uniform pricing, subadditive bidders: PoA at least 2k/(k+1)

/// n = k bidders. Bidder 0 values any 1..k-1 units at 1 and all k at 2,
/// bidder 1 values any positive amount at 1/k, the rest at eps. In the
/// equilibrium everyone wins one unit at price 0.
inline NamedInstance subadditive_upa_lower_bound(int k = 10, double eps = 1e-6,
                                                 BidInterface interface = BidInterface::uniform) {
  if (k < 3) throw InvalidInput("lower-bound instance needs k >= 3");
  if (!(eps > 0.0) || eps >= 1.0 / k) throw InvalidInput("eps must lie in (0, 1/k)");
  NamedInstance ni;
  ni.id = "upa-subadditive-lower-bound";
  ni.description = "uniform pricing, subadditive bidders, equilibrium welfare (k+1)/k of OPT 2";
  ni.interface = interface;
  ni.auction.pricing = Pricing::uniform;
  ni.auction.tie_break = TieBreakRule::lexicographic();

  std::vector<double> v1(static_cast<std::size_t>(k) + 1, 1.0);
  v1[0] = 0.0;
  v1[static_cast<std::size_t>(k)] = 2.0;
  ni.auction.valuations.emplace_back(v1);
  ni.auction.valuations.push_back(Valuation::single_minded_flat(k, 1.0 / k));
  for (int i = 2; i < k; ++i) ni.auction.valuations.push_back(Valuation::single_minded_flat(k, eps));

  std::vector<double> first{1.0, 1.0 / k};
  for (int i = 2; i < k; ++i) first.push_back(eps);
  if (interface == BidInterface::uniform) {
    std::vector<UniformBid> bids;
    for (double f : first) bids.push_back({f, 1});
    ni.profiles.push_back({"equilibrium", BidProfile(k, std::move(bids))});
  } else {
    std::vector<StandardBid> bids;
    for (double f : first) bids.push_back(StandardBid::constant(f, 1, k));
    ni.profiles.push_back({"equilibrium", BidProfile(k, std::move(bids))});
  }

  const double eq = 1.0 + 1.0 / k + (k - 2) * eps;
  ni.expected["optimum"] = {2.0};
  ni.expected["equilibrium_welfare"] = {eq};
  ni.expected["uniform_price"] = {0.0};
  ni.expected["max_regret"] = {0.0, kRegretTolerance};
  ni.expected["poa"] = {2.0 / eq};
  ni.expected["poa_limit"] = {2.0 * k / (k + 1.0), 1e-4, "limit"};
  ni.grid = BidGrid(1e-6, 2.0, interface, true);
  ni.notes = "deviations restricted to non-overbidding bids";
  return ni;
}

// ---------------------------------------------------------------------------
// Template witnesses

/// b_2(j) = 1 - k / (e^{1/mu} (k - j + 1)) for 1 <= j <= J, 0 beyond, where
/// J = floor(k (1 - e^{-1/mu}) + 1).
inline std::vector<double> frontier_opponent_bids(int k, double mu) {
  const double scale = std::exp(1.0 / mu);
  const int last = static_cast<int>(std::floor(k * -std::expm1(-1.0 / mu) + 1.0));
  std::vector<double> b(static_cast<std::size_t>(k), 0.0);
  for (int j = 1; j <= std::min(last, k); ++j) {
    b[static_cast<std::size_t>(j - 1)] = std::max(0.0, 1.0 - k / (scale * (k - j + 1)));
  }
  return b;
}

/// Discriminatory pricing, bidder 0 additive with value 1 per unit, bidder
/// 1 worthless, bidding the staircase above; ties go to bidder 0. Not an
/// equilibrium: it witnesses that no per-bidder template certificate with
/// this mu can beat mu (1 - e^{-1/mu}) in the limit.
inline NamedInstance da_template_frontier(int k = 50, double mu = 1.0) {
  if (k < 2) throw InvalidInput("frontier instance needs k >= 2");
  if (!(mu > 0.0)) throw InvalidInput("mu must be > 0");
  NamedInstance ni;
  ni.id = "da-template-frontier";
  ni.description = "discriminatory pricing, staircase opponent, template limit";
  ni.auction.pricing = Pricing::discriminatory;
  ni.auction.tie_break = TieBreakRule::favor_bidder(0);
  ni.auction.valuations = {Valuation::additive(k, 1.0), Valuation::single_minded_flat(k, 0.0)};
  ni.profiles.push_back(
      {"witness", BidProfile(k, std::vector<StandardBid>{StandardBid::zero(k),
                                                         StandardBid(frontier_opponent_bids(k, mu))})});
  ni.expected["optimum"] = {static_cast<double>(k)};
  ni.expected["template_bound"] = {
      mu * (-std::expm1(-1.0 / mu) + (1.0 / k) * -std::expm1(-1.0)) * k, 1e-6};
  return ni;
}

/// One unit, values 1 and 1/2, both bid 1/2, ties go to bidder 1.
inline NamedInstance upa_template_frontier(BidInterface interface = BidInterface::uniform) {
  NamedInstance ni;
  ni.id = "upa-template-frontier";
  ni.description = "uniform pricing, single unit, template lambda <= (1 + mu)/2";
  ni.interface = interface;
  ni.auction.pricing = Pricing::uniform;
  ni.auction.tie_break = TieBreakRule::favor_bidder(1);
  ni.auction.valuations = {Valuation({0.0, 1.0}), Valuation({0.0, 0.5})};
  if (interface == BidInterface::uniform) {
    ni.profiles.push_back(
        {"witness", BidProfile(1, std::vector<UniformBid>{{0.5, 1}, {0.5, 1}})});
  } else {
    ni.profiles.push_back(
        {"witness", BidProfile(1, std::vector<StandardBid>{StandardBid({0.5}), StandardBid({0.5})})});
  }
  ni.expected["optimum"] = {1.0};
  ni.expected["profile_welfare"] = {0.5};
  ni.expected["sup_utility_0"] = {0.5};
  ni.expected["sup_utility_1"] = {0.0};
  ni.expected["sup_utility_sum"] = {0.5};
  ni.grid = BidGrid(1e-3, 1.0, interface, true);
  return ni;
}

// ---------------------------------------------------------------------------
// Discretized Bayesian discriminatory auction with an inefficient BNE

struct BayesianInstance {
  std::string id;
  std::string description;
  BayesianGame game;
  Strategy strategy;
  std::map<std::string, Expectation> expected;
};

/// One unit. Bidder 0 has value 1; bidder 1 has value 0.667 with
/// probability alpha, else 0.333. Bids are multiples of `tick`, ties go to
/// bidder 0. Bidder 0 bids 0.333; bidder 1 bids 0.334 when high, 0.333 when
/// low. Bidder 0 prefers the gamble to bidding 0.334 while
/// 0.667 (1 - alpha) >= 0.666.
inline BayesianInstance discretized_bayesian_da(double alpha = 0.0014, double tick = 0.001) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw InvalidInput("alpha must lie in [0, 1]");
  BayesianInstance bi;
  bi.id = "da-discrete-bayesian";
  bi.description = "discriminatory pricing, two types, inefficient Bayes-Nash equilibrium";
  bi.game.k = 1;
  bi.game.types = {{Valuation({0.0, 1.0})}, {Valuation({0.0, 0.667}), Valuation({0.0, 0.333})}};
  bi.game.priors = {{1.0}, {alpha, 1.0 - alpha}};
  bi.game.grid = BidGrid(tick, 1.0, BidInterface::standard, true);
  bi.game.tie_break = TieBreakRule::favor_bidder(0);
  bi.game.pricing = Pricing::discriminatory;
  bi.strategy = {{MixedBid::pure(StandardBid({0.333}))},
                 {MixedBid::pure(StandardBid({0.334})), MixedBid::pure(StandardBid({0.333}))}};
  bi.expected["expected_utility_0"] = {0.667 * (1.0 - alpha)};
  bi.expected["expected_optimum"] = {1.0};
  bi.expected["expected_welfare"] = {1.0 - 0.333 * alpha};
  bi.expected["bayesian_poa"] = {1.0 / (1.0 - 0.333 * alpha)};
  bi.expected["max_regret"] = {0.0, 1e-12};
  return bi;
}

// ---------------------------------------------------------------------------
// Pure equilibria of the discriminatory auction

struct PneConstruction {
  BidProfile profile;
  TieBreakRule tie_break = TieBreakRule::lexicographic();
  std::vector<int> allocation;
  double level = 0.0;  // d, the common bid
};

namespace detail {

// k-th largest of all n k marginal values.
inline double kth_largest_marginal(std::span<const Valuation> vals) {
  std::vector<double> all;
  for (const auto& v : vals) {
    const auto m = marginals(v);
    all.insert(all.end(), m.begin(), m.end());
  }
  const int k = vals.front().units();
  std::nth_element(all.begin(), all.begin() + (k - 1), all.end(), std::greater<>());
  return all[static_cast<std::size_t>(k - 1)];
}

// Winners can pay d for each held unit: l d <= v(x) - v(x - l); nobody
// gains from extra units at d: v(x + l) - v(x) <= l d.
inline bool supports_level(const Valuation& v, int x, double d) {
  const int k = v.units();
  const double tol = kEqualityTolerance * std::max(1.0, d) * 8;
  for (int l = 1; l <= x; ++l) {
    if (l * d > v(x) - v(x - l) + tol) return false;
  }
  for (int l = 1; l <= k - x; ++l) {
    if (v(x + l) - v(x) > l * d + tol) return false;
  }
  return true;
}

inline bool search_allocation(std::span<const Valuation> vals, double d, std::size_t i, int left,
                              std::vector<int>& x) {
  if (i + 1 == vals.size()) {
    x[i] = left;
    return supports_level(vals[i], left, d);
  }
  for (int xi = left; xi >= 0; --xi) {
    if (!supports_level(vals[i], xi, d)) continue;
    x[i] = xi;
    if (search_allocation(vals, d, i + 1, left - xi, x)) return true;
  }
  return false;
}

}  // namespace detail

/// Everyone bids d = the k-th largest marginal value on every slot; a
/// slot-rank tie-break hands the units out according to an allocation x
/// under which holders value each held unit at least d and nobody values
/// extra units above d. Such an x always exists for submodular bidders;
/// for others the search may fail, which raises InvalidInput.
inline PneConstruction da_tie_break_pne(const AuctionInstance& instance) {
  const auto& vals = instance.valuations;
  if (vals.size() < 2) throw InvalidInput("construction needs at least two bidders");
  const int k = instance.units();
  PneConstruction out;
  out.level = detail::kth_largest_marginal(vals);
  if (!(out.level > 0.0)) {
    throw InvalidInput("common bid level is 0; zero bids never win, so no such equilibrium");
  }
  out.allocation.assign(vals.size(), 0);
  if (!detail::search_allocation(vals, out.level, 0, k, out.allocation)) {
    throw InvalidInput("no allocation supports the common bid level");
  }

  // Held slots first (bidder order), then all remaining slots.
  const int n = static_cast<int>(vals.size());
  std::vector<std::vector<int>> ranks(static_cast<std::size_t>(n), std::vector<int>(static_cast<std::size_t>(k)));
  int next = 0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < out.allocation[static_cast<std::size_t>(i)]; ++j) {
      ranks[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = next++;
    }
  }
  for (int i = 0; i < n; ++i) {
    for (int j = out.allocation[static_cast<std::size_t>(i)]; j < k; ++j) {
      ranks[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = next++;
    }
  }
  out.tie_break = TieBreakRule::from_slot_ranks(std::move(ranks));

  std::vector<StandardBid> bids(vals.size(), StandardBid::constant(out.level, k, k));
  out.profile = BidProfile(k, std::move(bids));
  return out;
}

/// The tie-free perturbation: every bidder adds eps/k to its held slots.
/// No ties remain, so the allocation is the same under any tie-break and
/// each bidder pays at most eps more than in the exact construction.
inline BidProfile da_epsilon_pne(const AuctionInstance& instance, double eps) {
  if (!(eps > 0.0)) throw InvalidInput("eps must be > 0");
  const PneConstruction base = da_tie_break_pne(instance);
  const int k = instance.units();
  std::vector<StandardBid> bids;
  for (int i = 0; i < instance.bidders(); ++i) {
    std::vector<double> b(static_cast<std::size_t>(k), base.level);
    for (int j = 0; j < base.allocation[static_cast<std::size_t>(i)]; ++j) {
      b[static_cast<std::size_t>(j)] += eps / k;
    }
    bids.emplace_back(std::move(b));
  }
  return BidProfile(k, std::move(bids));
}

/// Uniform-price profile in canonical undominated form for allocation x:
/// holders bid their first x_i marginal values then 0, others bid
/// (m_i(1), 0, ..., 0).
inline BidProfile canonical_upa_profile(std::span<const Valuation> vals, const std::vector<int>& x) {
  if (vals.size() != x.size()) throw InvalidInput("allocation size mismatch");
  const int k = vals.front().units();
  std::vector<StandardBid> bids;
  for (std::size_t i = 0; i < vals.size(); ++i) {
    const auto m = marginals(vals[i]);
    std::vector<double> b(static_cast<std::size_t>(k), 0.0);
    if (x[i] == 0) {
      b[0] = m[0];
    } else {
      std::copy_n(m.begin(), x[i], b.begin());
    }
    bids.emplace_back(std::move(b));
  }
  return BidProfile(k, std::move(bids));
}

// ---------------------------------------------------------------------------
// Registry

struct InstanceParams {
  std::optional<int> k;
  std::optional<double> eps;
  std::optional<double> mu;
  std::optional<double> alpha;
  std::optional<double> tick;
};

/// Small two-bidder discriminatory example: additive values 3 and 2 per
/// unit, two units. The common bid is 3 and bidder 0 takes both units.
inline NamedInstance da_tie_break_example(std::optional<double> eps = std::nullopt) {
  NamedInstance ni;
  ni.id = eps ? "da-epsilon-pne" : "da-tie-break-pne";
  ni.description = eps ? "discriminatory pricing, tie-free eps-equilibrium"
                       : "discriminatory pricing, equilibrium induced by slot ranks";
  ni.auction.pricing = Pricing::discriminatory;
  ni.auction.valuations = {Valuation({0.0, 3.0, 6.0}), Valuation({0.0, 2.0, 4.0})};
  const PneConstruction c = da_tie_break_pne(ni.auction);
  if (eps) {
    ni.profiles.push_back({"equilibrium", da_epsilon_pne(ni.auction, *eps)});
    ni.expected["max_regret_at_most"] = {*eps};
  } else {
    ni.auction.tie_break = c.tie_break;
    ni.profiles.push_back({"equilibrium", c.profile});
    ni.expected["max_regret"] = {0.0, kRegretTolerance};
  }
  ni.expected["level"] = {c.level};
  ni.expected["optimum"] = {6.0};
  ni.grid = BidGrid(1e-6, 6.0, BidInterface::standard, false);
  return ni;
}

struct RegistryEntry {
  std::string id;
  std::string description;
  bool bayesian = false;
};

inline std::vector<RegistryEntry> list_instances() {
  return {
      {"upa-subadditive-lower-bound", "uniform pricing, subadditive bidders, PoA >= 2k/(k+1) (k, eps)"},
      {"da-template-frontier", "discriminatory template limit witness (k, mu)"},
      {"upa-template-frontier", "uniform-price single-unit template witness (tick)"},
      {"da-discrete-bayesian", "discretized Bayesian discriminatory auction (alpha, tick)", true},
      {"da-tie-break-pne", "discriminatory equilibrium under induced slot ranks"},
      {"da-epsilon-pne", "discriminatory tie-free eps-equilibrium (eps)"},
  };
}

inline NamedInstance make_instance(const std::string& id, const InstanceParams& p = {}) {
  if (id == "upa-subadditive-lower-bound") {
    NamedInstance ni = subadditive_upa_lower_bound(p.k.value_or(10), p.eps.value_or(1e-6));
    if (p.tick) ni.grid = BidGrid(*p.tick, ni.grid->max_bid(), ni.interface, true);
    return ni;
  }
  if (id == "da-template-frontier") return da_template_frontier(p.k.value_or(50), p.mu.value_or(1.0));
  if (id == "upa-template-frontier") {
    NamedInstance ni = upa_template_frontier();
    if (p.tick) ni.grid = BidGrid(*p.tick, 1.0, ni.interface, true);
    return ni;
  }
  if (id == "da-tie-break-pne") return da_tie_break_example();
  if (id == "da-epsilon-pne") return da_tie_break_example(p.eps.value_or(0.1));
  if (id == "da-discrete-bayesian") {
    throw InvalidInput("da-discrete-bayesian is a Bayesian game; use make_bayesian_instance");
  }
  throw InvalidInput("unknown instance id: " + id);
}

inline BayesianInstance make_bayesian_instance(const std::string& id, const InstanceParams& p = {}) {
  if (id == "da-discrete-bayesian") {
    return discretized_bayesian_da(p.alpha.value_or(0.0014), p.tick.value_or(0.001));
  }
  throw InvalidInput("unknown Bayesian instance id: " + id);
}

}  // namespace poa
