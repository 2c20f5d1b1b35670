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

#include <boost/math/special_functions/lambert_w.hpp>
#include <gtest/gtest.h>

#include "poa/instances.hpp"
#include "poa/smoothness.hpp"
#include "poa/sweep.hpp"

namespace poa {
namespace {

const double kE = std::exp(1.0);

TEST(LambertW, MatchesBoostOnTheLowerBranch) {
  const double branch = -1.0 / kE;
  for (int s = 1; s < 2000; ++s) {
    const double x = branch * (1.0 - s / 2000.0);
    const double ours = lambert_w_minus1(x);
    const double ref = boost::math::lambert_wm1(x);
    ASSERT_NEAR(ours, ref, 1e-10 * std::abs(ref)) << "x = " << x;
    ASSERT_LE(ours, -1.0);
  }
  for (double x : {-1e-3, -1e-6, -1e-10}) {
    EXPECT_NEAR(lambert_w_minus1(x), boost::math::lambert_wm1(x), 1e-10 * std::abs(lambert_w_minus1(x)));
  }
  EXPECT_DOUBLE_EQ(lambert_w_minus1(branch), -1.0);
  EXPECT_THROW(lambert_w_minus1(0.0), InvalidInput);
  EXPECT_THROW(lambert_w_minus1(-0.5), InvalidInput);
}

TEST(Bounds, ClosedFormConstants) {
  EXPECT_NEAR(upa_submodular_bound(), 3.1461932206205825, 1e-12);
  EXPECT_NEAR(optimal_alpha(Pricing::uniform), 0.8724532496000725, 1e-12);
  EXPECT_DOUBLE_EQ(optimal_alpha(Pricing::discriminatory), 1.0);
  EXPECT_NEAR(smooth_poa_bound(scaled_lambda(1.0), 1.0), kE / (kE - 1.0), 1e-12);
  const double a = optimal_alpha(Pricing::uniform);
  // (mu + 1)/lambda at the optimal alpha is |W_{-1}(-1/e^2)|.
  EXPECT_NEAR(template_poa_bound(Pricing::uniform, scaled_lambda(a), a), upa_submodular_bound(), 1e-12);
  EXPECT_NEAR(weak_smooth_poa_bound(scaled_lambda(a), 0.0, a), upa_submodular_bound(), 1e-12);
}

TEST(Bounds, OptimalAlphaMinimisesTheBound) {
  auto upa = [](double a) { return (a + 1.0) / scaled_lambda(a); };
  const double a = optimal_alpha(Pricing::uniform);
  for (double d : {-0.05, -0.01, 0.01, 0.05}) EXPECT_GT(upa(a + d), upa(a));
  auto da = [](double a) { return std::max(1.0, a) / scaled_lambda(a); };
  for (double d : {-0.05, -0.01, 0.01, 0.05}) EXPECT_GT(da(1.0 + d), da(1.0));
}

TEST(Bounds, TableRows) {
  const auto rows = bound_table();
  ASSERT_EQ(rows.size(), 14u);
  const double da = kE / (kE - 1.0);
  const double w = 3.1461932206205825;
  EXPECT_NEAR(rows[0].bound, da, 1e-4);
  EXPECT_NEAR(rows[1].bound, w, 1e-4);
  EXPECT_NEAR(rows[2].bound, 2.0, 1e-12);
  EXPECT_NEAR(rows[3].bound, 2.0 * da, 1e-4);
  EXPECT_NEAR(rows[4].bound, 4.0, 1e-12);
  EXPECT_NEAR(rows[5].bound, 2.0 * w, 1e-4);
  for (const auto& r : rows) {
    if (r.table != "composition") continue;
    const bool seq = r.composition == Composition::sequential;
    const bool sub = r.cls == ValuationClass::submodular;
    const double expect = r.pricing == Pricing::discriminatory ? (sub ? da : 2 * da) * (seq ? 2 : 1)
                                                               : (sub ? w : 2 * w);
    EXPECT_NEAR(r.bound, expect, 1e-4);
  }
  const std::string csv = bound_table_csv(rows);
  EXPECT_EQ(csv.substr(0, csv.find('\n')),
            "table,pricing,valuations,interface,composition,certificate,alpha,lambda,mu1,mu2,bound");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 15);
}

TEST(ScaledUniform, DensityIntegratesToOne) {
  const Valuation v({0.0, 2.0, 3.0});
  for (double alpha : {0.5, 1.0, 2.0}) {
    const ScaledUniformDeviation d(v, 2, alpha);
    EXPECT_NEAR(d.mass(0.0, d.upper()), 1.0, 1e-14);
    // E[t] by midpoint quadrature of t f(t).
    const int n = 200000;
    double m = 0.0;
    for (int s = 0; s < n; ++s) {
      const double t = (s + 0.5) * d.upper() / n;
      m += t * d.density(t) * d.upper() / n;
    }
    EXPECT_NEAR(d.first_moment(0.0, d.upper()), m, 1e-8);
    EXPECT_EQ(d.tau_index(), 2);
    EXPECT_DOUBLE_EQ(d.rate(), 1.5);
  }
}

TEST(ScaledUniform, SamplerStaysInSupport) {
  const ScaledUniformDeviation d(Valuation({0.0, 1.0}), 1, 0.7);
  std::mt19937_64 rng(1);
  for (int s = 0; s < 10000; ++s) {
    const double t = d.sample_t(rng);
    ASSERT_GE(t, 0.0);
    ASSERT_LE(t, d.upper());
  }
}

// Independent oracle: E[u] = integral over u in (0,1) of the utility at the
// inverse-CDF point, by the midpoint rule.
double quadrature_expectation(const ScaledUniformDeviation& d, const Valuation& v, const BidProfile& p, int i,
                              Pricing pricing, const TieBreakRule& tb, int n) {
  double acc = 0.0;
  for (int s = 0; s < n; ++s) {
    const double u = (s + 0.5) / n;
    const double t = -std::expm1(-u / d.alpha());
    acc += utility(v, p.with_bid(i, d.bid_at(t)), i, pricing, tb);
  }
  return acc / n;
}

TEST(ScaledUniform, ExactExpectationMatchesQuadrature) {
  for (std::uint64_t s = 0; s < 24; ++s) {
    const auto cls = s % 2 ? ValuationClass::subadditive : ValuationClass::submodular;
    const RandomCase rc = random_case(cls, 4, 5, mix_seed(77, s));
    const auto opt = optimal_allocation(rc.valuations);
    for (auto pricing : {Pricing::discriminatory, Pricing::uniform}) {
      for (int i = 0; i < rc.bidders(); ++i) {
        const ScaledUniformDeviation d(rc.valuations[i], opt.allocation[i], s % 3 ? 1.0 : 0.5);
        const double exact = expected_deviation_utility_exact(
            d, rc.valuations[i], rc.profile, i, AuctionRules{pricing}, TieBreakRule::lexicographic());
        const double quad = quadrature_expectation(d, rc.valuations[i], rc.profile, i, pricing,
                                                   TieBreakRule::lexicographic(), 40000);
        ASSERT_NEAR(exact, quad, 2e-4 * (1.0 + rc.valuations[i](rc.units()))) << "seed " << s;
      }
    }
  }
}

TEST(ScaledUniform, MonteCarloAgreesWithinThreeStandardErrors) {
  int agree = 0;
  int total = 0;
  for (std::uint64_t s = 0; s < 40; ++s) {
    const RandomCase rc = random_case(ValuationClass::submodular, 3, 4, mix_seed(5, s));
    const auto opt = optimal_allocation(rc.valuations);
    const int i = 0;
    if (opt.allocation[i] == 0) continue;
    const ScaledUniformDeviation d(rc.valuations[i], opt.allocation[i], 1.0);
    const double exact = expected_deviation_utility_exact(d, rc.valuations[i], rc.profile, i,
                                                          AuctionRules{Pricing::uniform},
                                                          TieBreakRule::lexicographic());
    const auto mc = expected_deviation_utility_mc(d, rc.valuations[i], rc.profile, i, AuctionRules{Pricing::uniform},
                                                  TieBreakRule::lexicographic(), 20000, 1000 + s);
    ++total;
    if (std::abs(mc.mean - exact) <= 3.0 * mc.std_error + 1e-12) ++agree;
  }
  ASSERT_GT(total, 10);
  // 3 sigma: a miss or two is expected noise, more is a bug.
  EXPECT_GE(agree, total - 2);
}

TEST(KeyInequality, HoldsOnRandomCases) {
  for (auto cls : {ValuationClass::submodular, ValuationClass::subadditive}) {
    for (std::uint64_t s = 0; s < 150; ++s) {
      const RandomCase rc = random_case(cls, 5, 6, mix_seed(99, s));
      for (auto pricing : {Pricing::discriminatory, Pricing::uniform}) {
        AuctionInstance inst{rc.valuations, pricing};
        for (double alpha : {0.5, 1.0, 2.0}) {
          for (const auto& c : verify_key_lemma(inst, rc.profile, alpha, cls)) {
            ASSERT_GE(c.margin, -1e-9);
            ASSERT_GE(c.template_margin, -1e-9);
            ASSERT_LE(c.tau, std::max(1, c.x_opt));
          }
        }
      }
    }
  }
}

TEST(KeyInequality, RejectsValuationsOutsideTheClass) {
  AuctionInstance inst{{Valuation({0.0, 1.0, 3.0}), Valuation({0.0, 1.0, 1.0})}};
  const BidProfile p(2, std::vector<StandardBid>{StandardBid::zero(2), StandardBid::zero(2)});
  EXPECT_THROW(verify_key_lemma(inst, p, 1.0, ValuationClass::subadditive), InvalidInput);
}

TEST(Smoothness, DiscriminatoryCertificateHolds) {
  for (auto cls : {ValuationClass::submodular, ValuationClass::subadditive}) {
    std::vector<SmoothnessCase> cases;
    for (std::uint64_t s = 0; s < 200; ++s) {
      const RandomCase rc = random_case(cls, 4, 6, mix_seed(3, s));
      cases.push_back({AuctionInstance{rc.valuations, Pricing::discriminatory}, rc.profile});
    }
    const auto cert = verify_smoothness(cases, Pricing::discriminatory, cls, 1.0);
    EXPECT_TRUE(cert.verified) << cert.margin;
    EXPECT_EQ(cert.cases, 200);
  }
}

TEST(Smoothness, UniformPriceWeakCertificateHoldsOnUniformInterfaceProfiles) {
  for (auto cls : {ValuationClass::submodular, ValuationClass::subadditive}) {
    std::vector<SmoothnessCase> cases;
    for (std::uint64_t s = 0; s < 200; ++s) {
      const RandomCase rc = random_case(cls, 4, 6, mix_seed(4, s), BidInterface::uniform);
      cases.push_back({AuctionInstance{rc.valuations, Pricing::uniform}, rc.profile});
    }
    const auto cert = verify_smoothness(cases, Pricing::uniform, cls, optimal_alpha(Pricing::uniform));
    EXPECT_TRUE(cert.verified) << cert.margin;
  }
}

// Two units. Bidder 1 wants both (1.1 each) but bids nothing; bidder 2 wins
// both with (1, eps). Bidder 1's scaled-uniform deviation must clear the
// opposing bid of 1 to win a unit, yet the willingness-to-pay term only
// charges 2 eps, so the weak inequality fails for standard-format bids.
TEST(Smoothness, UniformPriceWeakCertificateFailsOnThisStandardProfile) {
  const double eps = 1e-3;
  AuctionInstance inst{{Valuation({0.0, 1.1, 2.2}), Valuation({0.0, 1.0, 1.0 + eps})}, Pricing::uniform};
  const BidProfile p(2, std::vector<StandardBid>{StandardBid::zero(2), StandardBid({1.0, eps})});
  const double alpha = optimal_alpha(Pricing::uniform);
  const auto cert = claimed_certificate(Pricing::uniform, ValuationClass::submodular, alpha);
  const double margin = smoothness_margin(cert, inst, p);
  // Bidder 0 bids t * 1.1 on two units and wins one unit iff t * 1.1 > eps,
  // both iff t * 1.1 > 1. With one unit its own losing bid sets the price.
  const double B = -std::expm1(-1.0 / alpha);
  const double lhs_oracle = [&] {
    const ScaledUniformDeviation d(inst.valuations[0], 2, alpha);
    const double g1 = std::min(eps / 1.1, B);
    const double g2 = std::min(1.0 / 1.1, B);
    double u = 1.1 * d.mass(g1, g2) - 1.1 * d.first_moment(g1, g2);
    if (B > g2) u += (2.2 - 2.0) * d.mass(g2, B);
    return u;
  }();
  // Willingness to pay of the winner is 2 * eps.
  const double rhs = scaled_lambda(alpha) * 2.2 - alpha * 2 * eps;
  EXPECT_NEAR(margin, lhs_oracle - rhs, 1e-12);
  EXPECT_LT(margin, -0.5);
  // The same allocation and payments in uniform format satisfy it.
  const BidProfile u(2, std::vector<UniformBid>{{0.0, 0}, {0.5 * (1.0 + eps), 2}});
  EXPECT_GE(smoothness_margin(cert, inst, u), 0.0);
}

TEST(SampledOpponent, DeviationShape) {
  const Valuation v({0.0, 1.0, 1.0, 2.0});
  // Keep beta_1..beta_2 = (0.2, 0.9) of beta = (0.2, 0.9, 1.5).
  EXPECT_EQ(sampled_opponent_deviation({0.2, 0.9, 1.5}, 2, Pricing::discriminatory, v), StandardBid({0.9, 0.2, 0.0}));
  // Uniform pricing: 0.9 + 0.2 = 1.1 > v(2) = 1, so both go.
  EXPECT_EQ(sampled_opponent_deviation({0.2, 0.9, 1.5}, 2, Pricing::uniform, v), StandardBid::zero(3));
  // 0.5 + 0.2 <= v(2) and 0.5 <= v(1): nothing is dropped.
  EXPECT_EQ(sampled_opponent_deviation({0.2, 0.5, 1.5}, 2, Pricing::uniform, v), StandardBid({0.5, 0.2, 0.0}));
  const StandardBid shifted = sampled_opponent_deviation({0.2, 0.5, 1.5}, 2, Pricing::discriminatory, v, 0.01);
  EXPECT_DOUBLE_EQ(shifted(1), 0.5 + 0.01);
  EXPECT_DOUBLE_EQ(shifted(2), 0.2 + 0.01);
  EXPECT_EQ(shifted(3), 0.0);
  // Zeroed entries among the first x still get the tick.
  const StandardBid dropped = sampled_opponent_deviation({0.2, 0.9, 1.5}, 2, Pricing::uniform, v, 0.01);
  EXPECT_EQ(dropped(1), 0.01);
  EXPECT_EQ(dropped(2), 0.01);
  EXPECT_EQ(dropped(3), 0.0);
}

TEST(SampledOpponent, HalfValueInequalityHoldsOnRandomDistributions) {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 300; ++trial) {
    const int k = 1 + static_cast<int>(rng() % 5);
    const int n = 2 + static_cast<int>(rng() % 3);
    const Valuation v = random_valuation(ValuationClass::subadditive, k, 1.0, rng());
    std::vector<WeightedProfile> dist;
    const int support = 1 + static_cast<int>(rng() % 3);
    for (int s = 0; s < support; ++s) {
      const RandomCase rc = random_case(ValuationClass::subadditive, n, k, rng());
      // Force n and k by rebuilding when the random draw differs.
      std::vector<StandardBid> bids;
      for (int j = 0; j < n; ++j) {
        const int src = j % rc.bidders();
        std::vector<double> b(rc.profile.marginal_bids(src).values().begin(),
                              rc.profile.marginal_bids(src).values().end());
        b.resize(static_cast<std::size_t>(k), 0.0);
        std::sort(b.begin(), b.end(), std::greater<>());
        bids.emplace_back(b);
      }
      dist.push_back({1.0 / support, BidProfile(k, bids)});
    }
    for (auto pricing : {Pricing::discriminatory, Pricing::uniform}) {
      for (int x = 0; x <= k; ++x) {
        const auto chk = sampled_opponent_check(0, v, x, dist, pricing);
        ASSERT_GE(chk.margin, -(x * 1e-9 + 1e-9)) << "trial " << trial << " x " << x;
      }
    }
  }
}

TEST(Frontier, DiscriminatoryStaircase) {
  const NamedInstance ni = da_template_frontier(50, 1.0);
  const auto& b2 = ni.profile("witness").marginal_bids(1);
  EXPECT_NEAR(b2(1), 1.0 - 1.0 / kE, 1e-12);
  EXPECT_GT(b2(32), 0.0);
  EXPECT_EQ(b2(33), 0.0);
  const DaFrontierReport r = da_frontier_check(ni.auction, ni.profile("witness"), 1.0);
  // Oracle: to win j units bidder 0 must top the (k - j + 1)-th opposing
  // bid, paying it per unit in the limit.
  double best = 0.0;
  for (int j = 1; j <= 50; ++j) {
    const double price = b2(50 - j + 1);  // must beat the (50 - j + 1)-th opposing bid
    best = std::max(best, j * (1.0 - price));
  }
  EXPECT_NEAR(r.sup[0].utility, best, 1e-9);
  EXPECT_NEAR(r.sup[0].utility, 50.0 / kE, 2e-3);
  EXPECT_NEAR(r.bound, (1.0 - 1.0 / kE + (1.0 / 50) * (1.0 - 1.0 / kE)) * 50, 1e-12);
  EXPECT_TRUE(r.holds);
  EXPECT_LE(r.lhs, r.bound + 1e-6);
}

TEST(Frontier, UniformPriceSingleItem) {
  const NamedInstance ni = upa_template_frontier();
  const UpaFrontierReport r = upa_frontier_check(ni.auction, ni.profile("witness"), *ni.grid);
  EXPECT_EQ(r.sup_utility[0], 0.5);
  EXPECT_EQ(r.sup_utility[1], 0.0);
  EXPECT_EQ(r.utility_sum, 0.5);
  for (double mu : {0.0, 0.5, 1.0, 2.0}) EXPECT_NEAR(r.lambda_limit(mu), (1.0 + mu) / 2.0, 1e-12);
}

}  // namespace
}  // namespace poa
