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

// The standard multi-unit auction: k identical units go to the k highest
// marginal bids; discriminatory (pay-as-bid) or uniform (highest losing bid)
// pricing.

#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "poa/common.hpp"
#include "poa/valuation.hpp"

namespace poa {

/// k non-negative, non-increasing marginal bids b(1..k).
class StandardBid {
 public:
  StandardBid() = default;

  explicit StandardBid(std::vector<double> bids) : bids_(std::move(bids)) {
    for (std::size_t j = 0; j < bids_.size(); ++j) {
      if (!std::isfinite(bids_[j]) || bids_[j] < 0.0) {
        throw InvalidInput("marginal bids must be finite and non-negative");
      }
      if (j > 0 && bids_[j] > bids_[j - 1] + kEqualityTolerance) {
        throw InvalidInput("marginal bids must be non-increasing");
      }
    }
  }

  static StandardBid zero(int k) {
    return StandardBid(std::vector<double>(static_cast<std::size_t>(k), 0.0));
  }

  /// `level` on the first `quantity` slots, zero after.
  static StandardBid constant(double level, int quantity, int k) {
    std::vector<double> b(static_cast<std::size_t>(k), 0.0);
    std::fill_n(b.begin(), std::clamp(quantity, 0, k), level);
    return StandardBid(std::move(b));
  }

  int units() const { return static_cast<int>(bids_.size()); }

  /// b(j), 1-based.
  double operator()(int j) const { return bids_[static_cast<std::size_t>(j - 1)]; }

  std::span<const double> values() const { return bids_; }

  /// b(1) + ... + b(s).
  double prefix_sum(int s) const {
    return std::accumulate(bids_.begin(), bids_.begin() + s, 0.0);
  }

  bool operator==(const StandardBid&) const = default;

 private:
  std::vector<double> bids_;
};

/// Willing to pay at most `price` per unit for up to `quantity` units.
struct UniformBid {
  double price = 0.0;
  int quantity = 0;

  bool operator==(const UniformBid&) const = default;
};

inline StandardBid expand_uniform(const UniformBid& ub, int k) {
  if (ub.quantity < 0 || ub.quantity > k) {
    throw InvalidInput("uniform bid quantity must lie in [0, k]");
  }
  if (!std::isfinite(ub.price) || ub.price < 0.0) {
    throw InvalidInput("uniform bid price must be finite and non-negative");
  }
  return StandardBid::constant(ub.price, ub.quantity, k);
}

using Bid = std::variant<StandardBid, UniformBid>;

inline StandardBid as_standard(const Bid& bid, int k) {
  if (const auto* ub = std::get_if<UniformBid>(&bid)) return expand_uniform(*ub, k);
  return std::get<StandardBid>(bid);
}

/// One bid per bidder, all over the same k units.
///
/// Keeps the bids as submitted plus their expansion to marginal vectors;
/// uniform-interface profiles contain only UniformBid entries.
class BidProfile {
 public:
  BidProfile() = default;

  BidProfile(int k, std::vector<StandardBid> bids)
      : k_(k), interface_(BidInterface::standard) {
    for (auto& b : bids) {
      if (b.units() != k) throw InvalidInput("bid vector length must equal k");
      submitted_.emplace_back(b);
      expanded_.push_back(std::move(b));
    }
  }

  BidProfile(int k, std::vector<UniformBid> bids)
      : k_(k), interface_(BidInterface::uniform) {
    for (const auto& b : bids) {
      expanded_.push_back(expand_uniform(b, k));
      submitted_.emplace_back(b);
    }
  }

  int units() const { return k_; }
  int bidders() const { return static_cast<int>(expanded_.size()); }
  BidInterface interface() const { return interface_; }

  const StandardBid& marginal_bids(int i) const { return expanded_[static_cast<std::size_t>(i)]; }
  const Bid& submitted(int i) const { return submitted_[static_cast<std::size_t>(i)]; }
  std::span<const StandardBid> all_marginal_bids() const { return expanded_; }

  /// Copy with bidder i's bid replaced. A standard bid turns the profile
  /// into a standard-interface one.
  BidProfile with_bid(int i, const Bid& bid) const {
    BidProfile out = *this;
    out.expanded_[static_cast<std::size_t>(i)] = as_standard(bid, k_);
    out.submitted_[static_cast<std::size_t>(i)] = bid;
    if (std::holds_alternative<StandardBid>(bid)) out.interface_ = BidInterface::standard;
    return out;
  }

  bool operator==(const BidProfile&) const = default;

 private:
  int k_ = 0;
  BidInterface interface_ = BidInterface::standard;
  std::vector<Bid> submitted_;
  std::vector<StandardBid> expanded_;
};

/// Strict total order over (bidder, slot) pairs used to break equal bids.
/// Lower priority key wins.
class TieBreakRule {
 public:
  enum class Kind { lexicographic, favor_bidder, favor_last_bidder, explicit_ranks };

  /// Bidder 0 first, then 1, ...; within a bidder, earlier slots first.
  static TieBreakRule lexicographic() { return TieBreakRule(Kind::lexicographic); }

  /// Bidder `i` first, remaining bidders lexicographically.
  static TieBreakRule favor_bidder(int i) {
    TieBreakRule r(Kind::favor_bidder);
    r.favored_ = i;
    return r;
  }

  static TieBreakRule favor_last_bidder() { return TieBreakRule(Kind::favor_last_bidder); }

  /// ranks[i][j] is the priority of bidder i's slot j (0-based); the table
  /// must be a permutation of 0..n*k-1.
  static TieBreakRule from_slot_ranks(std::vector<std::vector<int>> ranks) {
    std::vector<int> seen;
    for (const auto& row : ranks) seen.insert(seen.end(), row.begin(), row.end());
    std::sort(seen.begin(), seen.end());
    for (std::size_t r = 0; r < seen.size(); ++r) {
      if (seen[r] != static_cast<int>(r)) {
        throw InvalidInput("slot ranks must be a permutation of 0..n*k-1");
      }
    }
    TieBreakRule rule(Kind::explicit_ranks);
    rule.ranks_ = std::move(ranks);
    return rule;
  }

  Kind kind() const { return kind_; }
  int favored_bidder() const { return favored_; }
  const std::vector<std::vector<int>>& slot_ranks() const { return ranks_; }

  /// Priority key of bidder i's slot j (0-based) in an n-bidder, k-unit auction.
  long priority(int bidder, int slot, int n, int k) const {
    switch (kind_) {
      case Kind::lexicographic:
        return static_cast<long>(bidder) * k + slot;
      case Kind::favor_bidder:
        return static_cast<long>(bidder == favored_ ? 0 : bidder + 1) * k + slot;
      case Kind::favor_last_bidder:
        return static_cast<long>(bidder == n - 1 ? 0 : bidder + 1) * k + slot;
      case Kind::explicit_ranks:
        if (bidder >= static_cast<int>(ranks_.size()) ||
            slot >= static_cast<int>(ranks_[static_cast<std::size_t>(bidder)].size())) {
          throw InvalidInput("slot-rank tie-break does not cover the auction");
        }
        return ranks_[static_cast<std::size_t>(bidder)][static_cast<std::size_t>(slot)];
    }
    return 0;
  }

  std::string name() const {
    switch (kind_) {
      case Kind::lexicographic: return "lexicographic";
      case Kind::favor_bidder: return "favor-bidder-" + std::to_string(favored_);
      case Kind::favor_last_bidder: return "favor-last-bidder";
      case Kind::explicit_ranks: return "slot-ranks";
    }
    return "";
  }

  bool operator==(const TieBreakRule&) const = default;

 private:
  explicit TieBreakRule(Kind kind) : kind_(kind) {}

  Kind kind_ = Kind::lexicographic;
  int favored_ = 0;
  std::vector<std::vector<int>> ranks_;
};

/// Every preset that is defined for any n: lexicographic, favor-last, and
/// favor-bidder(i) for each i.
inline std::vector<TieBreakRule> tie_break_presets(int n) {
  std::vector<TieBreakRule> out{TieBreakRule::lexicographic(),
                                TieBreakRule::favor_last_bidder()};
  for (int i = 0; i < n; ++i) out.push_back(TieBreakRule::favor_bidder(i));
  return out;
}

struct AuctionRules {
  Pricing pricing = Pricing::discriminatory;
  UniformPriceRule price_rule = UniformPriceRule::highest_losing;
};

struct Outcome {
  std::vector<int> allocation;       // x_i
  std::vector<double> winning_bids;  // beta_1 <= ... <= beta_k, zero-padded low end
  double uniform_price = 0.0;        // p
  std::vector<double> payments;      // P_i under `pricing`, empty until priced
  Pricing pricing = Pricing::discriminatory;

  int units_sold() const { return std::accumulate(allocation.begin(), allocation.end(), 0); }
};

namespace detail {

struct Slot {
  double value;
  long priority;
  int bidder;
};

// Core allocation over one marginal-bid vector per bidder. Bids within
// kEqualityTolerance of each other tie and are ordered by `tb`; a bid of
// exactly zero never wins a unit.
inline Outcome allocate_bids(std::span<const StandardBid* const> bids,
                             const TieBreakRule& tb, int k,
                             UniformPriceRule price_rule = UniformPriceRule::highest_losing) {
  const int n = static_cast<int>(bids.size());
  std::vector<Slot> slots;
  slots.reserve(static_cast<std::size_t>(n) * static_cast<std::size_t>(k));
  for (int i = 0; i < n; ++i) {
    const auto v = bids[static_cast<std::size_t>(i)]->values();
    for (int j = 0; j < k; ++j) slots.push_back({v[static_cast<std::size_t>(j)], tb.priority(i, j, n, k), i});
  }
  auto by_value = [](const Slot& a, const Slot& b) {
    if (a.value != b.value) return a.value > b.value;
    return a.priority < b.priority;
  };
  std::sort(slots.begin(), slots.end(), by_value);
  // Regroup near-equal runs so that the tie-break, not float noise, decides.
  for (std::size_t s = 0; s < slots.size();) {
    std::size_t e = s + 1;
    while (e < slots.size() && slots[s].value - slots[e].value <= kEqualityTolerance) ++e;
    if (e - s > 1) {
      std::sort(slots.begin() + static_cast<long>(s), slots.begin() + static_cast<long>(e),
                [](const Slot& a, const Slot& b) { return a.priority < b.priority; });
    }
    s = e;
  }

  Outcome out;
  out.allocation.assign(static_cast<std::size_t>(n), 0);
  std::vector<double> winners;
  winners.reserve(static_cast<std::size_t>(k));
  double highest_losing = 0.0;
  for (std::size_t s = 0; s < slots.size(); ++s) {
    const Slot& slot = slots[s];
    if (static_cast<int>(s) < k && slot.value > 0.0) {
      ++out.allocation[static_cast<std::size_t>(slot.bidder)];
      winners.push_back(slot.value);
    } else {
      highest_losing = std::max(highest_losing, slot.value);
    }
  }
  std::sort(winners.begin(), winners.end());
  out.winning_bids.assign(static_cast<std::size_t>(k) - winners.size(), 0.0);
  out.winning_bids.insert(out.winning_bids.end(), winners.begin(), winners.end());
  out.uniform_price = price_rule == UniformPriceRule::highest_losing
                          ? highest_losing
                          : (k > 0 ? out.winning_bids.front() : 0.0);
  return out;
}

inline std::vector<const StandardBid*> bid_pointers(const BidProfile& profile) {
  std::vector<const StandardBid*> ptrs;
  ptrs.reserve(static_cast<std::size_t>(profile.bidders()));
  for (const auto& b : profile.all_marginal_bids()) ptrs.push_back(&b);
  return ptrs;
}

}  // namespace detail

/// Allocation, sorted winning bids and uniform price (payments left empty).
inline Outcome allocate(const BidProfile& profile, const TieBreakRule& tb,
                        UniformPriceRule price_rule = UniformPriceRule::highest_losing) {
  const auto ptrs = detail::bid_pointers(profile);
  return detail::allocate_bids(ptrs, tb, profile.units(), price_rule);
}

/// P_i = b_i(1) + ... + b_i(x_i).
inline std::vector<double> price_discriminatory(const BidProfile& profile,
                                                const Outcome& outcome) {
  std::vector<double> pay(outcome.allocation.size(), 0.0);
  for (std::size_t i = 0; i < pay.size(); ++i) {
    pay[i] = profile.marginal_bids(static_cast<int>(i)).prefix_sum(outcome.allocation[i]);
  }
  return pay;
}

/// P_i = x_i * p.
inline std::vector<double> price_uniform(const BidProfile& /*profile*/, const Outcome& outcome) {
  std::vector<double> pay(outcome.allocation.size(), 0.0);
  for (std::size_t i = 0; i < pay.size(); ++i) pay[i] = outcome.allocation[i] * outcome.uniform_price;
  return pay;
}

inline std::vector<double> payments(const BidProfile& profile, const Outcome& outcome,
                                    Pricing pricing) {
  return pricing == Pricing::discriminatory ? price_discriminatory(profile, outcome)
                                            : price_uniform(profile, outcome);
}

/// allocate + price in one step.
inline Outcome run_auction(const BidProfile& profile, const TieBreakRule& tb,
                           const AuctionRules& rules) {
  Outcome out = allocate(profile, tb, rules.price_rule);
  out.pricing = rules.pricing;
  out.payments = payments(profile, out, rules.pricing);
  return out;
}

inline Outcome run_auction(const BidProfile& profile, const TieBreakRule& tb, Pricing pricing) {
  return run_auction(profile, tb, AuctionRules{pricing, UniformPriceRule::highest_losing});
}

/// u_i = v_i(x_i) - P_i.
inline double utility(const Valuation& val, const BidProfile& profile, int i, Pricing pricing,
                      const TieBreakRule& tb) {
  if (val.units() != profile.units()) throw InvalidInput("valuation and profile disagree on k");
  const Outcome out = run_auction(profile, tb, pricing);
  const auto idx = static_cast<std::size_t>(i);
  return val(out.allocation[idx]) - out.payments[idx];
}

/// Every prefix sum of the bid is at most the value of that many units.
inline bool check_no_overbidding(const Valuation& val, const StandardBid& bid) {
  if (val.units() != bid.units()) throw InvalidInput("valuation and bid disagree on k");
  double prefix = 0.0;
  for (int s = 1; s <= bid.units(); ++s) {
    prefix += bid(s);
    if (prefix > val(s) + kEqualityTolerance) return false;
  }
  return true;
}

/// Winning-bid vector of the auction among all bidders except i.
inline std::vector<double> beta_minus_i(const BidProfile& profile, int i, const TieBreakRule& tb) {
  const StandardBid zero = StandardBid::zero(profile.units());
  auto ptrs = detail::bid_pointers(profile);
  ptrs[static_cast<std::size_t>(i)] = &zero;
  return detail::allocate_bids(ptrs, tb, profile.units()).winning_bids;
}

/// Sum over bidders of v_i(x_i).
inline double social_welfare(std::span<const Valuation> vals, std::span<const int> allocation) {
  if (vals.size() != allocation.size()) throw InvalidInput("welfare: dimension mismatch");
  double sw = 0.0;
  for (std::size_t i = 0; i < vals.size(); ++i) sw += vals[i](allocation[i]);
  return sw;
}

/// Willingness to pay for x units under uniform pricing: x * b(x).
inline double willingness_to_pay(const StandardBid& bid, int x) {
  return x == 0 ? 0.0 : x * bid(x);
}

/// Each bidder bids its last winning bid c_i = b_i(x_i) on exactly x_i units
/// (zero bid if it won nothing). Preserves every x_i and x_i * b_i(x_i).
inline BidProfile uniformize_profile(const BidProfile& profile, const Outcome& outcome) {
  std::vector<UniformBid> out;
  out.reserve(static_cast<std::size_t>(profile.bidders()));
  for (int i = 0; i < profile.bidders(); ++i) {
    const int x = outcome.allocation[static_cast<std::size_t>(i)];
    out.push_back(x == 0 ? UniformBid{0.0, 0} : UniformBid{profile.marginal_bids(i)(x), x});
  }
  return BidProfile(profile.units(), std::move(out));
}

inline BidProfile uniformize_profile(const BidProfile& profile, const TieBreakRule& tb) {
  return uniformize_profile(profile, allocate(profile, tb));
}

}  // namespace poa
