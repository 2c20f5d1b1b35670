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

// Seeded random (valuation, bid profile) cases and the deviation sweeps
// run over them.

#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

#include "poa/common.hpp"
#include "poa/equilibria.hpp"
#include "poa/mechanism.hpp"
#include "poa/parallel.hpp"
#include "poa/smoothness.hpp"
#include "poa/valuation.hpp"

namespace poa {

/// splitmix64 finaliser; derives independent per-case seeds from one root.
inline std::uint64_t mix_seed(std::uint64_t root, std::uint64_t index) {
  std::uint64_t z = root + 0x9e3779b97f4a7c15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

struct RandomCase {
  std::uint64_t seed = 0;
  std::vector<Valuation> valuations;
  BidProfile profile;

  int bidders() const { return static_cast<int>(valuations.size()); }
  int units() const { return profile.units(); }
};

namespace detail {

// Non-increasing bid that never overbids: random shape, then scaled down
// until every prefix sum is at most v(s).
inline StandardBid random_standard_bid(const Valuation& v, std::mt19937_64& rng) {
  const int k = v.units();
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> b(static_cast<std::size_t>(k), 0.0);
  switch (rng() % 4) {
    case 0:  // marginal values, possibly shaded
      {
        const double shade = unit(rng);
        const auto m = marginals(v);
        for (int j = 0; j < k; ++j) b[static_cast<std::size_t>(j)] = shade * m[static_cast<std::size_t>(j)];
      }
      break;
    case 1:  // all zero
      break;
    default:
      for (auto& x : b) x = unit(rng) * v(1);
      break;
  }
  std::sort(b.begin(), b.end(), std::greater<>());
  const int q = static_cast<int>(rng() % static_cast<unsigned>(k + 1));
  if (rng() % 2 == 0) {
    for (int j = q; j < k; ++j) b[static_cast<std::size_t>(j)] = 0.0;
  }
  double scale = 1.0;
  double prefix = 0.0;
  for (int s = 1; s <= k; ++s) {
    prefix += b[static_cast<std::size_t>(s - 1)];
    if (prefix > 0.0) scale = std::min(scale, v(s) / prefix);
  }
  for (auto& x : b) x *= scale;
  return StandardBid(std::move(b));
}

inline UniformBid random_uniform_bid(const Valuation& v, std::mt19937_64& rng) {
  const int k = v.units();
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const int q = static_cast<int>(rng() % static_cast<unsigned>(k + 1));
  if (q == 0) return {0.0, 0};
  return {unit(rng) * max_affordable_level(v, q), q};
}

}  // namespace detail

/// One case: n in [2, max_bidders], k in [1, max_units], valuations of
/// class `cls` with v(1) scale 1, and a random non-overbidding profile in
/// the given interface.
inline RandomCase random_case(ValuationClass cls, int max_bidders, int max_units, std::uint64_t seed,
                              BidInterface interface = BidInterface::standard) {
  if (max_bidders < 2 || max_units < 1) throw InvalidInput("random case needs n >= 2 and k >= 1");
  std::mt19937_64 rng(seed);
  RandomCase c;
  c.seed = seed;
  const int n = 2 + static_cast<int>(rng() % static_cast<unsigned>(max_bidders - 1));
  const int k = 1 + static_cast<int>(rng() % static_cast<unsigned>(max_units));
  for (int i = 0; i < n; ++i) c.valuations.push_back(random_valuation(cls, k, 1.0, rng()));
  if (interface == BidInterface::uniform) {
    std::vector<UniformBid> bids;
    for (const auto& v : c.valuations) bids.push_back(detail::random_uniform_bid(v, rng));
    c.profile = BidProfile(k, std::move(bids));
  } else {
    std::vector<StandardBid> bids;
    for (const auto& v : c.valuations) bids.push_back(detail::random_standard_bid(v, rng));
    c.profile = BidProfile(k, std::move(bids));
  }
  return c;
}

struct SweepOptions {
  ValuationClass cls = ValuationClass::submodular;
  long cases = 1000;
  int max_bidders = 5;
  int max_units = 8;
  std::vector<double> alphas{0.5, optimal_alpha(Pricing::uniform), 1.0, 2.0};
  std::vector<Pricing> pricings{Pricing::discriminatory, Pricing::uniform};
  BidInterface interface = BidInterface::standard;
  std::uint64_t seed = 1;
  int threads = 1;
};

/// Minimum margins over all cases for one (pricing, alpha) pair.
struct SweepCell {
  Pricing pricing = Pricing::discriminatory;
  double alpha = 1.0;
  SmoothnessCertificate certificate;
  double key_margin = std::numeric_limits<double>::infinity();       // scaled-uniform inequality
  double template_margin = std::numeric_limits<double>::infinity();  // lambda v(x) form
  std::uint64_t worst_key_seed = 0;
  std::uint64_t worst_smooth_seed = 0;
  long cases = 0;
  long key_violations = 0;
  long smooth_violations = 0;
};

struct SweepResult {
  SweepOptions options;
  std::vector<SweepCell> cells;

  double min_key_margin() const {
    double m = std::numeric_limits<double>::infinity();
    for (const auto& c : cells) m = std::min({m, c.key_margin, c.template_margin});
    return m;
  }
};

/// Runs the scaled-uniform deviation checks and the claimed smoothness
/// certificate over `options.cases` random cases. Cases are independent and
/// written by index, so results do not depend on the thread count.
inline SweepResult run_sweep(const SweepOptions& options, double tolerance = kRegretTolerance) {
  const std::size_t P = options.pricings.size();
  const std::size_t A = options.alphas.size();
  struct PerCase {
    std::vector<double> key, tmpl, smooth;
  };
  std::vector<PerCase> per(static_cast<std::size_t>(std::max(0L, options.cases)));

  parallel_for(
      options.cases,
      [&](long idx) {
        const RandomCase rc = random_case(options.cls, options.max_bidders, options.max_units,
                                          mix_seed(options.seed, static_cast<std::uint64_t>(idx)),
                                          options.interface);
        PerCase& out = per[static_cast<std::size_t>(idx)];
        for (std::size_t p = 0; p < P; ++p) {
          AuctionInstance inst;
          inst.valuations = rc.valuations;
          inst.pricing = options.pricings[p];
          for (std::size_t a = 0; a < A; ++a) {
            const double alpha = options.alphas[a];
            double km = std::numeric_limits<double>::infinity();
            double tm = km;
            for (const auto& chk : verify_key_lemma(inst, rc.profile, alpha, options.cls)) {
              km = std::min(km, chk.margin);
              tm = std::min(tm, chk.template_margin);
            }
            out.key.push_back(km);
            out.tmpl.push_back(tm);
            out.smooth.push_back(smoothness_margin(
                claimed_certificate(inst.pricing, options.cls, alpha), inst, rc.profile));
          }
        }
      },
      options.threads);

  SweepResult res;
  res.options = options;
  for (std::size_t p = 0; p < P; ++p) {
    for (std::size_t a = 0; a < A; ++a) {
      SweepCell cell;
      cell.pricing = options.pricings[p];
      cell.alpha = options.alphas[a];
      cell.certificate = claimed_certificate(cell.pricing, options.cls, cell.alpha);
      const std::size_t slot = p * A + a;
      double worst_key = std::numeric_limits<double>::infinity();
      for (long idx = 0; idx < options.cases; ++idx) {
        const auto& pc = per[static_cast<std::size_t>(idx)];
        const std::uint64_t s = mix_seed(options.seed, static_cast<std::uint64_t>(idx));
        const double km = std::min(pc.key[slot], pc.tmpl[slot]);
        if (km < worst_key) {
          worst_key = km;
          cell.worst_key_seed = s;
        }
        cell.key_margin = std::min(cell.key_margin, pc.key[slot]);
        cell.template_margin = std::min(cell.template_margin, pc.tmpl[slot]);
        if (km < -tolerance) ++cell.key_violations;
        if (pc.smooth[slot] < cell.certificate.margin) cell.worst_smooth_seed = s;
        cell.certificate.margin = std::min(cell.certificate.margin, pc.smooth[slot]);
        if (pc.smooth[slot] < -tolerance) ++cell.smooth_violations;
        ++cell.cases;
      }
      cell.certificate.cases = cell.cases;
      cell.certificate.verified = cell.certificate.margin >= -tolerance;
      res.cells.push_back(cell);
    }
  }
  return res;
}

}  // namespace poa
