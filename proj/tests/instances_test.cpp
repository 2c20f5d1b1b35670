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

#include "poa/instances.hpp"
#include "poa/serialization.hpp"
#include "test_support.hpp"

namespace poa {
namespace {

using testing::brute_force_optimum;
using testing::oracle_allocate;

// Submodular valuation with marginals on a lattice of `unit`.
Valuation lattice_submodular(int k, int steps, double unit, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> d(1, steps);
  std::vector<double> m(static_cast<std::size_t>(k));
  for (auto& x : m) x = d(rng) * unit;
  std::sort(m.begin(), m.end(), std::greater<>());
  return Valuation::from_marginals(m);
}

// Every non-increasing vector of k multiples of tick in [0, max_bid].
void for_each_grid_bid(int k, int levels, double tick, const std::function<void(const std::vector<double>&)>& f) {
  std::vector<int> idx(static_cast<std::size_t>(k), 0);
  std::function<void(int, int)> rec = [&](int pos, int cap) {
    if (pos == k) {
      std::vector<double> b;
      for (int l : idx) b.push_back(l * tick);
      f(b);
      return;
    }
    for (int l = cap; l >= 0; --l) {
      idx[static_cast<std::size_t>(pos)] = l;
      rec(pos + 1, l);
    }
  };
  rec(0, levels - 1);
}

// Pay-as-bid utility from the selection oracle: bidder i pays its top x_i
// bids.
double oracle_da_utility(const std::vector<Valuation>& vals, const std::vector<std::vector<double>>& bids, int i,
                         const TieBreakRule& tb) {
  const auto out = oracle_allocate(bids, tb);
  const int x = out.allocation[static_cast<std::size_t>(i)];
  double paid = 0.0;
  for (int j = 0; j < x; ++j) paid += bids[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  return vals[static_cast<std::size_t>(i)](x) - paid;
}

double oracle_da_regret(const std::vector<Valuation>& vals, const BidProfile& p, const TieBreakRule& tb, double tick,
                        int levels) {
  std::vector<std::vector<double>> bids;
  for (int i = 0; i < p.bidders(); ++i) {
    const auto v = p.marginal_bids(i).values();
    bids.emplace_back(v.begin(), v.end());
  }
  double worst = 0.0;
  for (int i = 0; i < p.bidders(); ++i) {
    const double cur = oracle_da_utility(vals, bids, i, tb);
    auto trial = bids;
    for_each_grid_bid(p.units(), levels, tick, [&](const std::vector<double>& b) {
      trial[static_cast<std::size_t>(i)] = b;
      worst = std::max(worst, oracle_da_utility(vals, trial, i, tb) - cur);
    });
  }
  return worst;
}

TEST(LowerBoundInstance, ExpectedValues) {
  for (int k : {3, 5, 10}) {
    const NamedInstance ni = subadditive_upa_lower_bound(k, 1e-6);
    ASSERT_EQ(ni.bidders(), k);
    for (const auto& v : ni.auction.valuations) EXPECT_TRUE(is_subadditive(v));
    EXPECT_FALSE(is_submodular(ni.auction.valuations[0]));
    const auto& p = ni.profile("equilibrium");
    const Outcome out = run_auction(p, ni.auction.tie_break, ni.auction.rules());
    EXPECT_EQ(out.allocation, std::vector<int>(static_cast<std::size_t>(k), 1));
    EXPECT_EQ(out.uniform_price, 0.0);
    const double eq = social_welfare(ni.auction.valuations, out.allocation);
    EXPECT_NEAR(eq, ni.expected.at("equilibrium_welfare").value, 1e-12);
    EXPECT_NEAR(brute_force_optimum(ni.auction.valuations), ni.expected.at("optimum").value, 1e-12);
    EXPECT_NEAR(2.0 / eq, ni.expected.at("poa").value, 1e-12);
    EXPECT_NEAR(ni.expected.at("poa").value, 2.0 * k / (k + 1.0), 1e-4);
  }
  EXPECT_THROW(subadditive_upa_lower_bound(2), InvalidInput);
  EXPECT_THROW(subadditive_upa_lower_bound(4, 0.5), InvalidInput);
}

TEST(LowerBoundInstance, EquilibriumHasNoProfitableDeviation) {
  for (auto iface : {BidInterface::uniform, BidInterface::standard}) {
    const NamedInstance ni = subadditive_upa_lower_bound(4, 1e-3, iface);
    const BidGrid grid(1e-3, 2.0, iface, true);
    const auto rep = is_pure_nash(ni.profile("equilibrium"), ni.auction, grid);
    EXPECT_LE(rep.max_regret, kRegretTolerance) << to_string(iface);
  }
}

TEST(FrontierInstance, StaircaseFormula) {
  for (double mu : {0.5, 1.0, 2.0}) {
    const int k = 40;
    const auto b = frontier_opponent_bids(k, mu);
    const int last = static_cast<int>(std::floor(k * (1.0 - std::exp(-1.0 / mu)) + 1.0));
    for (int j = 1; j <= k; ++j) {
      const double expect = j <= last ? std::max(0.0, 1.0 - k / (std::exp(1.0 / mu) * (k - j + 1))) : 0.0;
      EXPECT_NEAR(b[static_cast<std::size_t>(j - 1)], expect, 1e-15);
    }
    EXPECT_TRUE(std::is_sorted(b.begin(), b.end(), std::greater<>()));
    EXPECT_NEAR(b[0], 1.0 - std::exp(-1.0 / mu), 1e-12);
  }
  const NamedInstance ni = da_template_frontier(50, 1.0);
  EXPECT_EQ(ni.expected.at("optimum").value, 50.0);
  EXPECT_NEAR(ni.expected.at("template_bound").value, 50.0 * (1.0 - 1.0 / std::exp(1.0)) * 1.02, 1e-12);
}

TEST(FrontierInstance, UniformPriceWitness) {
  const NamedInstance ni = upa_template_frontier();
  const auto& p = ni.profile("witness");
  const Outcome out = run_auction(p, ni.auction.tie_break, ni.auction.rules());
  EXPECT_EQ(out.allocation, (std::vector<int>{0, 1}));
  EXPECT_EQ(social_welfare(ni.auction.valuations, out.allocation), ni.expected.at("profile_welfare").value);
}

TEST(BayesianInstance, ExpectationsAndThreshold) {
  const BayesianInstance bi = discretized_bayesian_da();
  const BayesianWelfare w = bayesian_welfare(bi.game, bi.strategy);
  EXPECT_NEAR(w.expected_optimum, bi.expected.at("expected_optimum").value, 1e-12);
  EXPECT_NEAR(w.expected_equilibrium, bi.expected.at("expected_welfare").value, 1e-12);
  EXPECT_NEAR(bayesian_poa(bi.game, bi.strategy), bi.expected.at("bayesian_poa").value, 1e-12);
  const auto rep = is_bayes_nash(bi.game, bi.strategy);
  EXPECT_LE(rep.max_regret, 1e-12);
  // Above alpha = 1 - 0.666/0.667 bidder 0 prefers to outbid the high type.
  const BayesianInstance bad = discretized_bayesian_da(0.01);
  EXPECT_GT(is_bayes_nash(bad.game, bad.strategy).max_regret, 1e-3);
}

TEST(TieBreakPne, ExactEquilibriumOnRandomSubmodularInstances) {
  std::mt19937_64 rng(2024);
  int built = 0;
  for (int trial = 0; trial < 60; ++trial) {
    const int n = 2 + static_cast<int>(rng() % 2);
    const int k = 1 + static_cast<int>(rng() % 3);
    AuctionInstance inst;
    for (int i = 0; i < n; ++i) inst.valuations.push_back(lattice_submodular(k, 6, 0.25, rng));
    const PneConstruction c = da_tie_break_pne(inst);
    ++built;
    inst.tie_break = c.tie_break;
    const Outcome out = allocate(c.profile, inst.tie_break);
    EXPECT_EQ(out.allocation, c.allocation);
    EXPECT_NEAR(social_welfare(inst.valuations, c.allocation), brute_force_optimum(inst.valuations), 1e-12);
    ASSERT_LE(oracle_da_regret(inst.valuations, c.profile, inst.tie_break, 0.25, 9), 1e-12) << "trial " << trial;
    const BidGrid grid(0.25, 2.0, BidInterface::standard, false);
    EXPECT_LE(is_pure_nash(c.profile, inst, grid).max_regret, kRegretTolerance);
    EXPECT_TRUE(pne_structure(c.profile, inst).holds());
  }
  EXPECT_EQ(built, 60);
}

TEST(TieBreakPne, EpsilonVariantUnderEveryPreset) {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 30; ++trial) {
    const int n = 2 + static_cast<int>(rng() % 2);
    const int k = 1 + static_cast<int>(rng() % 3);
    AuctionInstance inst;
    for (int i = 0; i < n; ++i) inst.valuations.push_back(lattice_submodular(k, 6, 0.25, rng));
    for (double eps : {0.1, 0.01}) {
      const BidProfile p = da_epsilon_pne(inst, eps);
      std::vector<TieBreakRule> rules{TieBreakRule::lexicographic(), TieBreakRule::favor_last_bidder()};
      for (int i = 0; i < n; ++i) rules.push_back(TieBreakRule::favor_bidder(i));
      for (const auto& tb : rules) {
        AuctionInstance with = inst;
        with.tie_break = tb;
        const BidGrid grid(0.25, 2.0, BidInterface::standard, false);
        EXPECT_LE(is_pure_nash(p, with, grid).max_regret, eps + kRegretTolerance);
        EXPECT_LE(oracle_da_regret(inst.valuations, p, tb, 0.25, 9), eps + 1e-12);
      }
    }
  }
  EXPECT_THROW(da_epsilon_pne(AuctionInstance{{Valuation({0.0, 1.0}), Valuation({0.0, 1.0})}}, 0.0), InvalidInput);
}

TEST(TieBreakPne, ZeroLevelIsRejected) {
  // One unit, only bidder 0 values it: the k-th largest marginal is 1 but
  // with two units the second largest is 0.
  AuctionInstance inst{{Valuation({0.0, 1.0, 1.0}), Valuation({0.0, 0.0, 0.0})}};
  EXPECT_THROW(da_tie_break_pne(inst), InvalidInput);
}

TEST(CanonicalUpa, ConvertedEquilibriaKeepAllocationPriceAndWelfare) {
  std::mt19937_64 rng(5);
  int converted = 0;
  for (int trial = 0; trial < 150 && converted < 30; ++trial) {
    const int n = 2;
    const int k = 1 + static_cast<int>(rng() % 3);
    AuctionInstance inst;
    inst.pricing = Pricing::uniform;
    for (int i = 0; i < n; ++i) inst.valuations.push_back(lattice_submodular(k, 6, 0.25, rng));
    for (int x0 = 0; x0 <= k; ++x0) {
      const std::vector<int> x{x0, k - x0};
      const BidProfile p = canonical_upa_profile(inst.valuations, x);
      if (allocate(p, inst.tie_break).allocation != x) continue;
      DeviationOptions opt;
      opt.full_standard_enumeration = true;
      if (!is_pure_nash(p, inst, BidGrid(0.25, 2.0, BidInterface::standard, true), opt).equilibrium()) continue;
      for (int i = 0; i < n; ++i) EXPECT_TRUE(is_undominated_upa(inst.valuations[i], p.marginal_bids(i)));
      const UniformConversion c = pne_standard_to_uniform(p, inst);
      EXPECT_TRUE(c.allocation_preserved);
      EXPECT_TRUE(c.price_preserved);
      EXPECT_TRUE(c.welfare_preserved);
      // The uniform-interface profile is an equilibrium against both uniform
      // and standard no-overbidding deviations.
      EXPECT_TRUE(is_pure_nash(c.uniform, inst, BidGrid(0.25, 2.0, BidInterface::uniform, true)).equilibrium());
      EXPECT_TRUE(is_pure_nash(c.uniform, inst, BidGrid(0.25, 2.0, BidInterface::standard, true), opt).equilibrium());
      ++converted;
    }
  }
  EXPECT_GE(converted, 30);
}

TEST(Registry, ListsAndBuildsEveryInstance) {
  const auto entries = list_instances();
  ASSERT_EQ(entries.size(), 6u);
  for (const auto& e : entries) {
    if (e.bayesian) {
      EXPECT_NO_THROW(make_bayesian_instance(e.id));
      EXPECT_THROW(make_instance(e.id), InvalidInput);
    } else {
      EXPECT_EQ(make_instance(e.id).id, e.id);
    }
  }
  EXPECT_THROW(make_instance("no-such-instance"), InvalidInput);
  InstanceParams p;
  p.k = 6;
  p.eps = 1e-4;
  EXPECT_EQ(make_instance("upa-subadditive-lower-bound", p).bidders(), 6);
}

TEST(Serialization, InstancesRoundTrip) {
  for (const auto& e : list_instances()) {
    if (e.bayesian) continue;
    const NamedInstance ni = make_instance(e.id);
    const Json j = to_json(ni);
    const NamedInstance back = instance_from_json(Json::parse(j.dump()));
    EXPECT_EQ(to_json(back), j) << e.id;
    EXPECT_EQ(back.auction.tie_break, ni.auction.tie_break);
    EXPECT_EQ(back.auction.valuations, ni.auction.valuations);
  }
}

TEST(Serialization, RejectsMalformedInstances) {
  Json j = to_json(upa_template_frontier());
  j["surprise"] = 1;
  EXPECT_THROW(instance_from_json(j), InvalidInput);
  j = to_json(upa_template_frontier());
  j["schema"] = "other";
  EXPECT_THROW(instance_from_json(j), InvalidInput);
  j = to_json(upa_template_frontier());
  j["valuations"][0] = Json::array({0.0, 1.0, 0.5});
  EXPECT_THROW(instance_from_json(j), InvalidInput);
  EXPECT_THROW(tie_break_from_json("random"), InvalidInput);
}

}  // namespace
}  // namespace poa
