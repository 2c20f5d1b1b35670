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

#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "poa/equilibria.hpp"
#include "poa/instances.hpp"
#include "test_support.hpp"

namespace poa {
namespace {

long binomial(long n, long r) {
  long out = 1;
  for (long i = 1; i <= r; ++i) out = out * (n - r + i) / i;
  return out;
}

TEST(BidGrid, DecimalLevelsAreExactLiterals) {
  const BidGrid g(0.001, 1.0);
  EXPECT_EQ(g.levels(), 1001);
  EXPECT_EQ(g.level(333), 0.333);
  EXPECT_EQ(g.level(334), 0.334);
  EXPECT_EQ(g.next_above(0.333), 0.334);
  EXPECT_EQ(g.floor_level(0.3339), 0.333);
  EXPECT_TRUE(g.contains(0.667));
  EXPECT_FALSE(g.contains(0.6675));
  EXPECT_FALSE(g.contains(1.001));
  EXPECT_THROW(BidGrid(0.0, 1.0), InvalidInput);
}

TEST(Enumeration, CountsMatchCombinatorics) {
  // Non-increasing k-vectors over L levels: C(L + k - 1, k).
  const BidGrid g(0.25, 1.0, BidInterface::standard, false);
  for (int k = 1; k <= 4; ++k) {
    const Valuation v = Valuation::additive(k, 10.0);
    EXPECT_EQ(static_cast<long>(enumerate_standard_bids(v, g).size()), binomial(5 + k - 1, k));
    EXPECT_EQ(static_cast<long>(enumerate_uniform_bids(v, g).size()), 1 + 4L * k);
  }
  EXPECT_THROW(enumerate_standard_bids(Valuation::additive(4, 10.0), g, 10), CapExceeded);
}

TEST(Enumeration, NoOverbiddingFilter) {
  const BidGrid g(0.5, 2.0);
  const Valuation v({0.0, 1.0, 1.5});
  for (const auto& b : enumerate_standard_bids(v, g)) EXPECT_TRUE(check_no_overbidding(v, b));
  // Brute force over all non-increasing pairs, then filter.
  int expected = 0;
  for (int a = 0; a <= 4; ++a) {
    for (int b = 0; b <= a; ++b) {
      if (a * 0.5 <= 1.0 && (a + b) * 0.5 <= 1.5) ++expected;
    }
  }
  EXPECT_EQ(static_cast<int>(enumerate_standard_bids(v, g).size()), expected);
}

// The closed-form family must reach the best utility over the whole grid
// strategy space (standard interface, no-overbidding).
TEST(BestResponse, FamilyMatchesFullGridScan) {
  std::mt19937_64 rng(21);
  const BidGrid g(0.125, 1.0);
  DeviationOptions family_only;
  family_only.enumerate_uniform_grid = false;
  for (int trial = 0; trial < 400; ++trial) {
    const int n = 2 + static_cast<int>(rng() % 2);
    const int k = 1 + static_cast<int>(rng() % 3);
    const auto pricing = trial % 2 ? Pricing::uniform : Pricing::discriminatory;
    std::vector<Valuation> vals;
    for (int i = 0; i < n; ++i) vals.push_back(testing::random_lattice_valuation(k, 4, 0.125, rng));
    std::vector<StandardBid> bids;
    for (int i = 0; i < n; ++i) bids.emplace_back(testing::random_grid_bid(k, 9, 0.125, rng));
    const BidProfile p(k, bids);
    const auto presets = tie_break_presets(n);
    const TieBreakRule tb = presets[rng() % presets.size()];
    for (int i = 0; i < n; ++i) {
      const BestResponse br = best_response(i, vals[i], p, g, pricing, tb, family_only);
      double brute = -1e9;
      for (const auto& b : enumerate_standard_bids(vals[i], g)) {
        brute = std::max(brute, utility(vals[i], p.with_bid(i, b), i, pricing, tb));
      }
      ASSERT_NEAR(br.utility, brute, 1e-12) << "trial " << trial << " bidder " << i;
    }
  }
}

TEST(Equilibrium, ExhaustiveSearchMatchesBruteForceCheck) {
  std::mt19937_64 rng(5);
  const BidGrid g(0.25, 1.0);
  for (int trial = 0; trial < 30; ++trial) {
    AuctionInstance inst;
    inst.pricing = trial % 2 ? Pricing::uniform : Pricing::discriminatory;
    const int k = 1 + static_cast<int>(rng() % 2);
    for (int i = 0; i < 2; ++i) inst.valuations.push_back(testing::random_lattice_valuation(k, 4, 0.25, rng));
    const SearchResult sr = find_pure_nash(inst, g);
    ASSERT_TRUE(sr.exhaustive);
    // Oracle: check every profile by scanning each bidder's full space.
    const auto s0 = enumerate_standard_bids(inst.valuations[0], g);
    const auto s1 = enumerate_standard_bids(inst.valuations[1], g);
    std::size_t count = 0;
    for (const auto& a : s0) {
      for (const auto& b : s1) {
        const BidProfile p(k, std::vector<StandardBid>{a, b});
        bool stable = true;
        for (int i = 0; i < 2 && stable; ++i) {
          const double cur = utility(inst.valuations[i], p, i, inst.pricing, inst.tie_break);
          for (const auto& d : (i == 0 ? s0 : s1)) {
            if (utility(inst.valuations[i], p.with_bid(i, d), i, inst.pricing, inst.tie_break) > cur + 1e-9) {
              stable = false;
              break;
            }
          }
        }
        if (stable) {
          ++count;
          ASSERT_NE(std::find(sr.equilibria.begin(), sr.equilibria.end(), p), sr.equilibria.end());
        }
      }
    }
    ASSERT_EQ(sr.equilibria.size(), count);
  }
}

TEST(Equilibrium, ParallelExhaustiveSearchIsDeterministic) {
  AuctionInstance inst;
  inst.valuations = {Valuation({0.0, 1.0, 1.5}), Valuation({0.0, 0.75, 1.0})};
  const BidGrid g(0.125, 1.0);
  SearchOptions serial;
  SearchOptions parallel;
  parallel.threads = 4;
  EXPECT_EQ(find_pure_nash(inst, g, serial).equilibria, find_pure_nash(inst, g, parallel).equilibria);
}

TEST(Equilibrium, DynamicsFixedPointsAreEquilibria) {
  AuctionInstance inst;
  inst.valuations = {Valuation({0.0, 1.0, 1.5}), Valuation({0.0, 0.75, 1.0})};
  const BidGrid g(0.125, 1.0);
  SearchOptions o;
  o.mode = SearchMode::best_response_dynamics;
  o.starts = 8;
  o.seed = 3;
  DeviationOptions full;
  full.full_standard_enumeration = true;
  for (const auto& p : find_pure_nash(inst, g, o).equilibria) {
    EXPECT_TRUE(is_pure_nash(p, inst, g, full).equilibrium());
  }
}

TEST(Equilibrium, SearchCapRaises) {
  AuctionInstance inst;
  inst.valuations = {Valuation::additive(3, 1.0), Valuation::additive(3, 1.0)};
  SearchOptions o;
  o.profile_cap = 100;
  EXPECT_THROW(find_pure_nash(inst, BidGrid(0.125, 1.0), o), CapExceeded);
}

// Efficiency holds for arbitrary valuations when bids are unrestricted; with
// no-overbidding a bidder whose v(1) is below the tick cannot bid at all.
TEST(Equilibrium, DiscriminatoryEquilibriaAreNearlyEfficient) {
  std::mt19937_64 rng(8);
  const BidGrid g(0.125, 1.0, BidInterface::standard, false);
  for (int trial = 0; trial < 20; ++trial) {
    AuctionInstance inst;
    const int k = 1 + static_cast<int>(rng() % 2);
    for (int i = 0; i < 2; ++i) inst.valuations.push_back(random_valuation(ValuationClass::general, k, 1.0, rng()));
    const double opt = optimal_allocation(inst.valuations).value;
    for (const auto& p : find_pure_nash(inst, g).equilibria) {
      const Outcome o = allocate(p, inst.tie_break);
      EXPECT_GE(social_welfare(inst.valuations, o.allocation), opt - 2 * k * g.tick() - 1e-9);
    }
  }
}

TEST(Bayesian, RegretMatchesBruteForceOverGrid) {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 40; ++trial) {
    BayesianGame game;
    game.k = 1 + static_cast<int>(rng() % 2);
    game.grid = BidGrid(0.25, 1.0);
    game.pricing = trial % 2 ? Pricing::uniform : Pricing::discriminatory;
    Strategy strat;
    for (int i = 0; i < 2; ++i) {
      game.types.emplace_back();
      game.priors.push_back({0.3, 0.7});
      strat.emplace_back();
      for (int t = 0; t < 2; ++t) {
        const Valuation v = testing::random_lattice_valuation(game.k, 2, 0.25, rng);
        game.types.back().push_back(v);
        const auto space = enumerate_standard_bids(v, game.grid);
        strat.back().push_back(MixedBid{{space[rng() % space.size()], space[rng() % space.size()]}, {0.5, 0.5}});
      }
    }
    DeviationOptions full;
    full.full_standard_enumeration = true;
    const BayesRegretReport rep = is_bayes_nash(game, strat, full);
    // Oracle: enumerate type tuples and supports directly.
    for (int i = 0; i < 2; ++i) {
      const int j = 1 - i;
      for (int t = 0; t < 2; ++t) {
        const Valuation& v = game.types[i][t];
        auto eu = [&](const StandardBid& b) {
          double acc = 0.0;
          for (int tj = 0; tj < 2; ++tj) {
            const auto& mb = strat[j][tj];
            for (std::size_t s = 0; s < mb.bids.size(); ++s) {
              std::vector<StandardBid> bids(2);
              bids[i] = b;
              bids[j] = std::get<StandardBid>(mb.bids[s]);
              acc += game.priors[j][tj] * mb.probs[s] *
                     utility(v, BidProfile(game.k, bids), i, game.pricing, game.tie_break);
            }
          }
          return acc;
        };
        double current = 0.0;
        for (std::size_t s = 0; s < 2; ++s) current += 0.5 * eu(std::get<StandardBid>(strat[i][t].bids[s]));
        double best = -1e9;
        for (const auto& b : enumerate_standard_bids(v, game.grid)) best = std::max(best, eu(b));
        ASSERT_NEAR(rep.expected_utility[i][t], current, 1e-12);
        ASSERT_NEAR(rep.regret[i][t], std::max(0.0, best - current), 1e-12);
      }
    }
  }
}

TEST(Bayesian, ValidationRejectsMalformedStrategies) {
  BayesianInstance bi = discretized_bayesian_da();
  Strategy bad = bi.strategy;
  bad[0][0] = MixedBid::pure(StandardBid({0.3335}));
  EXPECT_THROW(is_bayes_nash(bi.game, bad), InvalidInput);
  bad = bi.strategy;
  bad[1].pop_back();
  EXPECT_THROW(is_bayes_nash(bi.game, bad), InvalidInput);
  bad = bi.strategy;
  bad[1][1] = MixedBid::pure(StandardBid({0.5}));  // overbids value 0.333
  EXPECT_THROW(is_bayes_nash(bi.game, bad), InvalidInput);
}

TEST(Bayesian, CompleteInformationReducesToPureNash) {
  // One type per bidder: BNE regret equals complete-information regret.
  AuctionInstance inst;
  inst.valuations = {Valuation({0.0, 1.0, 1.5}), Valuation({0.0, 0.75, 1.0})};
  const BidGrid g(0.125, 1.0);
  for (const auto& p : find_pure_nash(inst, g).equilibria) {
    BayesianGame game;
    game.k = 2;
    game.types = {{inst.valuations[0]}, {inst.valuations[1]}};
    game.priors = {{1.0}, {1.0}};
    game.grid = g;
    const Strategy s{{MixedBid::pure(p.submitted(0))}, {MixedBid::pure(p.submitted(1))}};
    EXPECT_LE(is_bayes_nash(game, s).max_regret, 1e-12);
  }
}

TEST(Undominated, UniformPriceMarginalBids) {
  const Valuation v({0.0, 3.0, 5.0, 6.0});
  EXPECT_TRUE(is_undominated_upa(v, StandardBid({3.0, 2.0, 0.5})));
  EXPECT_FALSE(is_undominated_upa(v, StandardBid({2.5, 2.0, 0.5})));
  EXPECT_FALSE(is_undominated_upa(v, StandardBid({3.0, 2.5, 0.5})));
  EXPECT_THROW(is_undominated_upa(Valuation({0.0, 1.0, 3.0}), StandardBid({1.0, 1.0})), InvalidInput);
}

TEST(Conversion, CanonicalProfilesOnly) {
  AuctionInstance inst;
  inst.pricing = Pricing::uniform;
  inst.valuations = {Valuation({0.0, 3.0, 5.0}), Valuation({0.0, 1.0, 1.5})};
  const BidProfile canon = canonical_upa_profile(inst.valuations, {2, 0});
  const UniformConversion c = pne_standard_to_uniform(canon, inst);
  EXPECT_TRUE(c.allocation_preserved);
  EXPECT_TRUE(c.price_preserved);
  EXPECT_TRUE(c.welfare_preserved);
  EXPECT_EQ(c.uniform.submitted(0), Bid(UniformBid{2.5, 2}));
  EXPECT_EQ(c.uniform.submitted(1), Bid(UniformBid{1.0, 1}));
  const BidProfile off(2, std::vector<StandardBid>{StandardBid({3.0, 1.0}), StandardBid({1.0, 0.0})});
  EXPECT_THROW(pne_standard_to_uniform(off, inst), InvalidInput);
}

}  // namespace
}  // namespace poa
