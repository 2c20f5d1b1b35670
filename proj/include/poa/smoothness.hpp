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

// Randomized deviations, (weak) smoothness certificates, bound constants.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "poa/common.hpp"
#include "poa/equilibria.hpp"
#include "poa/mechanism.hpp"
#include "poa/valuation.hpp"
#include "poa/welfare.hpp"

namespace poa {

// ---------------------------------------------------------------------------
// Lambert W, lower branch

/// W_{-1}(x) for x in [-1/e, 0): the root w <= -1 of w e^w = x.
inline double lambert_w_minus1(double x) {
  const double branch = -std::exp(-1.0);
  if (!(x >= branch - 1e-15) || !(x < 0.0)) {
    throw InvalidInput("lambert_w_minus1: argument outside [-1/e, 0)");
  }
  if (x <= branch) return -1.0;

  double w;
  if (x < -0.25) {
    // Branch-point series in p = -sqrt(2(1 + e x)).
    const double p = -std::sqrt(2.0 * (1.0 + std::exp(1.0) * x));
    w = -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p * p * p;
  } else {
    const double l1 = std::log(-x);
    w = l1 - std::log(-l1);
  }
  // Halley iteration.
  for (int it = 0; it < 50; ++it) {
    const double ew = std::exp(w);
    const double f = w * ew - x;
    const double wp1 = w + 1.0;
    if (f == 0.0 || wp1 == 0.0) break;
    const double step = f / (ew * wp1 - (w + 2.0) * f / (2.0 * wp1));
    const double next = std::min(w - step, -1.0);
    if (std::abs(next - w) <= 1e-16 * std::abs(w)) {
      w = next;
      break;
    }
    w = next;
  }
  if (std::abs(w * std::exp(w) - x) > 1e-12) {
    throw std::runtime_error("lambert_w_minus1: no convergence");
  }
  return w;
}

// ---------------------------------------------------------------------------
// Bound constants

/// alpha (1 - e^{-1/alpha}).
inline double scaled_lambda(double alpha) {
  if (!(alpha > 0.0)) throw InvalidInput("alpha must be > 0");
  return alpha * (-std::expm1(-1.0 / alpha));
}

/// lambda for the scaled-uniform deviation; halved for subadditive bidders,
/// which lose up to a factor 2 when approximated by a per-unit value.
inline double smoothness_lambda(double alpha, ValuationClass cls) {
  const double l = scaled_lambda(alpha);
  return cls == ValuationClass::submodular ? l : 0.5 * l;
}

/// |W_{-1}(-1/e^2)|, the uniform-price submodular bound.
inline double upa_submodular_bound() { return -lambert_w_minus1(-std::exp(-2.0)); }

/// alpha minimising the implied bound: 1 under discriminatory pricing,
/// -1/(W_{-1}(-1/e^2) + 2) under uniform pricing.
inline double optimal_alpha(Pricing pricing) {
  if (pricing == Pricing::discriminatory) return 1.0;
  return -1.0 / (lambert_w_minus1(-std::exp(-2.0)) + 2.0);
}

/// (lambda, mu)-smooth: PoA <= max{1, mu} / lambda.
inline double smooth_poa_bound(double lambda, double mu) {
  if (!(lambda > 0.0)) throw InvalidInput("lambda must be > 0");
  return std::max(1.0, mu) / lambda;
}

/// Weakly (lambda, mu1, mu2)-smooth: PoA <= (mu2 + max{1, mu1}) / lambda.
inline double weak_smooth_poa_bound(double lambda, double mu1, double mu2) {
  if (!(lambda > 0.0)) throw InvalidInput("lambda must be > 0");
  return (mu2 + std::max(1.0, mu1)) / lambda;
}

/// Per-bidder template with constants (lambda, mu): max{1, mu}/lambda for
/// discriminatory pricing, (mu + 1)/lambda for uniform pricing.
inline double template_poa_bound(Pricing pricing, double lambda, double mu) {
  if (!(lambda > 0.0)) throw InvalidInput("lambda must be > 0");
  return pricing == Pricing::discriminatory ? std::max(1.0, mu) / lambda : (mu + 1.0) / lambda;
}

enum class Composition { none, simultaneous, sequential };

inline std::string_view to_string(Composition c) {
  switch (c) {
    case Composition::none: return "single";
    case Composition::simultaneous: return "simultaneous";
    case Composition::sequential: return "sequential";
  }
  return "single";
}

struct BoundRow {
  std::string table;           // "single-auction" or "composition"
  Pricing pricing;
  ValuationClass cls;
  std::string interface;       // "standard", "uniform" or "both"
  Composition composition;
  std::string certificate;     // "template", "smooth" or "weak"
  double alpha = 0.0;
  double lambda = 0.0;
  double mu1 = 0.0;            // mu for template / smooth rows
  double mu2 = 0.0;            // weak rows only
  double bound = 0.0;
};

/// Every upper bound of the single-auction and composition tables, each
/// recomputed from its (lambda, mu) constants. Sequential composition adds
/// one to mu (smooth) or mu1 (weak).
inline std::vector<BoundRow> bound_table() {
  std::vector<BoundRow> rows;
  const double a_da = optimal_alpha(Pricing::discriminatory);
  const double a_upa = optimal_alpha(Pricing::uniform);
  const auto D = Pricing::discriminatory;
  const auto U = Pricing::uniform;
  const auto SM = ValuationClass::submodular;
  const auto SA = ValuationClass::subadditive;

  auto tmpl = [&](Pricing p, ValuationClass c, std::string iface, double alpha, double lambda,
                  double mu) {
    rows.push_back({"single-auction", p, c, std::move(iface), Composition::none, "template", alpha,
                    lambda, mu, 0.0, template_poa_bound(p, lambda, mu)});
  };
  tmpl(D, SM, "both", a_da, smoothness_lambda(a_da, SM), a_da);
  tmpl(U, SM, "both", a_upa, smoothness_lambda(a_upa, SM), a_upa);
  tmpl(D, SA, "standard", 0.0, 0.5, 1.0);
  tmpl(D, SA, "uniform", a_da, smoothness_lambda(a_da, SA), a_da);
  tmpl(U, SA, "standard", 0.0, 0.5, 1.0);
  tmpl(U, SA, "uniform", a_upa, smoothness_lambda(a_upa, SA), a_upa);

  for (auto cls : {SM, SA}) {
    for (auto comp : {Composition::simultaneous, Composition::sequential}) {
      const double bump = comp == Composition::sequential ? 1.0 : 0.0;
      const double l_da = smoothness_lambda(a_da, cls);
      rows.push_back({"composition", D, cls, "both", comp, "smooth", a_da, l_da, a_da + bump, 0.0,
                      smooth_poa_bound(l_da, a_da + bump)});
      const double l_upa = smoothness_lambda(a_upa, cls);
      rows.push_back({"composition", U, cls, "both", comp, "weak", a_upa, l_upa, bump, a_upa,
                      weak_smooth_poa_bound(l_upa, bump, a_upa)});
    }
  }
  return rows;
}

inline std::string bound_table_csv(const std::vector<BoundRow>& rows) {
  std::ostringstream os;
  os.precision(10);
  os << "table,pricing,valuations,interface,composition,certificate,alpha,lambda,mu1,mu2,bound\n";
  for (const auto& r : rows) {
    os << r.table << ',' << to_string(r.pricing) << ',' << to_string(r.cls) << ',' << r.interface
       << ',' << to_string(r.composition) << ',' << r.certificate << ',' << r.alpha << ','
       << r.lambda << ',' << r.mu1 << ',' << r.mu2 << ',' << r.bound << '\n';
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// Scaled-uniform deviation

/// Bidder i bids t * v(tau)/tau on its first x units, t drawn from density
/// alpha/(1 - t) on [0, B], B = 1 - e^{-1/alpha}.
class ScaledUniformDeviation {
 public:
  ScaledUniformDeviation(const Valuation& val, int x, double alpha)
      : k_(val.units()), x_(x), alpha_(alpha) {
    if (!(alpha > 0.0)) throw InvalidInput("alpha must be > 0");
    if (x < 0 || x > k_) throw InvalidInput("deviation unit count outside [0, k]");
    bound_ = -std::expm1(-1.0 / alpha);
    if (x >= 1) {
      tau_ = tau(val, x);
      rate_ = val(tau_) / tau_;
    }
  }

  int units() const { return k_; }
  int quantity() const { return x_; }
  int tau_index() const { return tau_; }
  double alpha() const { return alpha_; }
  double upper() const { return bound_; }  // B
  double rate() const { return rate_; }    // v(tau)/tau

  double density(double t) const { return (t >= 0.0 && t <= bound_) ? alpha_ / (1.0 - t) : 0.0; }

  /// Probability mass of [a, b] within [0, B].
  double mass(double a, double b) const { return alpha_ * (std::log1p(-a) - std::log1p(-b)); }

  /// Integral of t f(t) over [a, b].
  double first_moment(double a, double b) const {
    return alpha_ * ((std::log1p(-a) - std::log1p(-b)) - (b - a));
  }

  StandardBid bid_at(double t) const { return StandardBid::constant(t * rate_, x_, k_); }

  /// Inverse-CDF draw of t.
  template <typename Rng>
  double sample_t(Rng& rng) const {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    return -std::expm1(-u(rng) / alpha_);
  }

  template <typename Rng>
  StandardBid sample(Rng& rng) const {
    return bid_at(sample_t(rng));
  }

 private:
  int k_;
  int x_;
  double alpha_;
  double bound_ = 0.0;
  int tau_ = 1;
  double rate_ = 0.0;
};

/// Exact E[u_i] of the scaled-uniform deviation against the other bids in
/// `profile`. The number of units won is constant between consecutive
/// breakpoints gamma_l = clamp(beta_l(b_{-i}) / rate, 0, B); on each piece
/// the payment is either t * rate per unit (own losing bid sets the uniform
/// price, or pay-as-bid) or a constant per-unit price, so both integrals
/// have closed forms.
inline double expected_deviation_utility_exact(const ScaledUniformDeviation& dev,
                                               const Valuation& val, const BidProfile& profile,
                                               int i, AuctionRules rules, const TieBreakRule& tb) {
  const int x = dev.quantity();
  if (x == 0 || !(dev.rate() > 0.0)) return 0.0;
  detail::DeviationEvaluator eval(profile, i, val, tb, rules);
  const auto beta = eval.opposing_winning_bids();
  const double B = dev.upper();
  const double r = dev.rate();

  std::vector<double> cuts{0.0};
  for (int l = 1; l <= x; ++l) cuts.push_back(std::clamp(beta[static_cast<std::size_t>(l - 1)] / r, 0.0, B));
  cuts.push_back(B);
  std::sort(cuts.begin(), cuts.end());

  const int k = val.units();
  double total = 0.0;
  for (std::size_t s = 0; s + 1 < cuts.size(); ++s) {
    const double a = cuts[s];
    const double b = cuts[s + 1];
    if (!(b > a)) continue;
    const double mid = 0.5 * (a + b);
    const StandardBid bid = dev.bid_at(mid);
    std::vector<const StandardBid*> ptrs = detail::bid_pointers(profile);
    ptrs[static_cast<std::size_t>(i)] = &bid;
    const Outcome out = detail::allocate_bids(ptrs, tb, k, rules.price_rule);
    const int j = out.allocation[static_cast<std::size_t>(i)];
    if (j == 0) continue;
    const double f1 = dev.mass(a, b);
    const double ft = dev.first_moment(a, b);
    const bool linear =
        rules.pricing == Pricing::discriminatory ||
        std::abs(out.uniform_price - mid * r) <= kEqualityTolerance * std::max(1.0, r);
    total += linear ? val(j) * f1 - j * r * ft : (val(j) - j * out.uniform_price) * f1;
  }
  return total;
}

struct MonteCarloEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  long samples = 0;
};

/// Seeded sampling estimate of the same expectation, for cross-checking.
inline MonteCarloEstimate expected_deviation_utility_mc(const ScaledUniformDeviation& dev,
                                                        const Valuation& val,
                                                        const BidProfile& profile, int i,
                                                        AuctionRules rules, const TieBreakRule& tb,
                                                        long samples, std::uint64_t seed) {
  if (samples < 2) throw InvalidInput("monte carlo needs at least 2 samples");
  detail::DeviationEvaluator eval(profile, i, val, tb, rules);
  std::mt19937_64 rng(seed);
  double mean = 0.0;
  double m2 = 0.0;
  for (long s = 1; s <= samples; ++s) {
    const double u = dev.quantity() == 0 ? 0.0 : eval(dev.sample(rng));
    const double delta = u - mean;
    mean += delta / static_cast<double>(s);
    m2 += delta * (u - mean);
  }
  const double var = m2 / static_cast<double>(samples - 1);
  return {mean, std::sqrt(var / static_cast<double>(samples)), samples};
}

// ---------------------------------------------------------------------------
// Per-bidder template checks

struct KeyLemmaCheck {
  int bidder = 0;
  int x_opt = 0;
  int tau = 1;
  double lhs = 0.0;             // exact E[u_i(b'_i, b_{-i})]
  double rhs = 0.0;             // alpha B x v(tau)/tau - alpha sum_{j<=x} beta_j(b_{-i})
  double template_rhs = 0.0;    // lambda v(x) - alpha sum_{j<=x} beta_j(b_{-i})
  double margin = 0.0;          // lhs - rhs
  double template_margin = 0.0; // lhs - template_rhs
};

/// Checks the scaled-uniform deviation inequality for every bidder of
/// `instance` against the fixed profile b, with x^v from the welfare DP.
/// `cls` selects lambda for the template side (halved for subadditive).
inline std::vector<KeyLemmaCheck> verify_key_lemma(const AuctionInstance& instance,
                                                   const BidProfile& profile, double alpha,
                                                   ValuationClass cls) {
  const auto opt = optimal_allocation(instance.valuations);
  const double lambda = smoothness_lambda(alpha, cls);
  std::vector<KeyLemmaCheck> out;
  for (int i = 0; i < instance.bidders(); ++i) {
    const auto& val = instance.valuations[static_cast<std::size_t>(i)];
    if (!satisfies_class(val, cls)) throw InvalidInput("valuation outside the declared class");
    KeyLemmaCheck c;
    c.bidder = i;
    c.x_opt = opt.allocation[static_cast<std::size_t>(i)];
    const ScaledUniformDeviation dev(val, c.x_opt, alpha);
    c.tau = dev.tau_index();
    c.lhs = expected_deviation_utility_exact(dev, val, profile, i, instance.rules(),
                                             instance.tie_break);
    const auto beta = beta_minus_i(profile, i, instance.tie_break);
    double beta_sum = 0.0;
    for (int j = 0; j < c.x_opt; ++j) beta_sum += beta[static_cast<std::size_t>(j)];
    c.rhs = alpha * dev.upper() * c.x_opt * dev.rate() - alpha * beta_sum;
    c.template_rhs = lambda * val(c.x_opt) - alpha * beta_sum;
    c.margin = c.lhs - c.rhs;
    c.template_margin = c.lhs - c.template_rhs;
    out.push_back(c);
  }
  return out;
}

/// lhs - (lambda v(x) - mu E[sum_{j<=x} beta_j]).
inline double template_margin(double expected_utility, double lambda, double value_at_opt,
                              double mu, double expected_beta_sum) {
  return expected_utility - (lambda * value_at_opt - mu * expected_beta_sum);
}

// ---------------------------------------------------------------------------
// Smoothness certificates

enum class SmoothnessKind { smooth, weakly_smooth };

struct SmoothnessCertificate {
  SmoothnessKind kind = SmoothnessKind::smooth;
  Pricing pricing = Pricing::discriminatory;
  ValuationClass cls = ValuationClass::submodular;
  double alpha = 1.0;
  double lambda = 0.0;
  double mu = 0.0;   // smooth
  double mu1 = 0.0;  // weak
  double mu2 = 0.0;  // weak
  double margin = std::numeric_limits<double>::infinity();
  long cases = 0;
  bool verified = false;

  double implied_poa() const {
    return kind == SmoothnessKind::smooth ? smooth_poa_bound(lambda, mu)
                                          : weak_smooth_poa_bound(lambda, mu1, mu2);
  }
};

struct SmoothnessCase {
  AuctionInstance instance;
  BidProfile profile;
};

/// sum_i E[u_i(b'_i, b_{-i})] minus the right-hand side of the smoothness
/// inequality for one (v, b), with b'_i the scaled-uniform deviation.
/// Smooth: lambda OPT - mu sum_i P_i(b). Weak: lambda OPT - mu1 sum_i P_i(b)
/// - mu2 sum_i x_i(b) b_i(x_i(b)).
inline double smoothness_margin(const SmoothnessCertificate& cert, const AuctionInstance& instance,
                                const BidProfile& profile) {
  const auto opt = optimal_allocation(instance.valuations);
  double lhs = 0.0;
  for (int i = 0; i < instance.bidders(); ++i) {
    const auto& val = instance.valuations[static_cast<std::size_t>(i)];
    const ScaledUniformDeviation dev(val, opt.allocation[static_cast<std::size_t>(i)], cert.alpha);
    lhs += expected_deviation_utility_exact(dev, val, profile, i, instance.rules(),
                                            instance.tie_break);
  }
  const Outcome out = run_auction(profile, instance.tie_break, instance.rules());
  double paid = 0.0;
  double wtp = 0.0;
  for (int i = 0; i < instance.bidders(); ++i) {
    paid += out.payments[static_cast<std::size_t>(i)];
    wtp += willingness_to_pay(profile.marginal_bids(i), out.allocation[static_cast<std::size_t>(i)]);
  }
  const double rhs = cert.kind == SmoothnessKind::smooth
                         ? cert.lambda * opt.value - cert.mu * paid
                         : cert.lambda * opt.value - cert.mu1 * paid - cert.mu2 * wtp;
  return lhs - rhs;
}

/// The certificate the scaled-uniform deviation yields: discriminatory
/// pricing is (lambda, alpha)-smooth, uniform pricing weakly
/// (lambda, 0, alpha)-smooth, lambda per `smoothness_lambda`.
inline SmoothnessCertificate claimed_certificate(Pricing pricing, ValuationClass cls, double alpha) {
  SmoothnessCertificate c;
  c.pricing = pricing;
  c.cls = cls;
  c.alpha = alpha;
  c.lambda = smoothness_lambda(alpha, cls);
  if (pricing == Pricing::discriminatory) {
    c.kind = SmoothnessKind::smooth;
    c.mu = alpha;
  } else {
    c.kind = SmoothnessKind::weakly_smooth;
    c.mu1 = 0.0;
    c.mu2 = alpha;
  }
  return c;
}

/// Checks the claimed certificate on every case; `margin` is the minimum
/// over cases and `verified` means margin >= -tolerance.
inline SmoothnessCertificate verify_smoothness(const std::vector<SmoothnessCase>& cases,
                                               Pricing pricing, ValuationClass cls, double alpha,
                                               double tolerance = kRegretTolerance) {
  SmoothnessCertificate cert = claimed_certificate(pricing, cls, alpha);
  for (const auto& c : cases) {
    if (c.instance.pricing != pricing) throw InvalidInput("case pricing does not match certificate");
    for (const auto& v : c.instance.valuations) {
      if (!satisfies_class(v, cls)) throw InvalidInput("valuation outside the declared class");
    }
    cert.margin = std::min(cert.margin, smoothness_margin(cert, c.instance, c.profile));
    ++cert.cases;
  }
  cert.verified = cert.margin >= -tolerance;
  return cert;
}

// ---------------------------------------------------------------------------
// Sampled-opponent deviation

/// Builds bidder i's bid from a sampled opposing top-k vector beta
/// (ascending): keep beta_1..beta_x, zero the k - x highest. Under uniform
/// pricing also zero T_beta, the t largest kept entries for the largest t
/// whose sum exceeds v(t); what remains never overbids when v is
/// subadditive. `tick` is added to each of the first x entries so that the
/// bid strictly beats the entries it copies (zero bids never win).
inline StandardBid sampled_opponent_deviation(const std::vector<double>& beta, int x,
                                              Pricing pricing, const Valuation& val,
                                              double tick = 0.0) {
  const int k = val.units();
  if (static_cast<int>(beta.size()) != k) throw InvalidInput("beta must have k entries");
  if (x < 0 || x > k) throw InvalidInput("unit count outside [0, k]");
  std::vector<double> kept(beta.begin(), beta.begin() + x);  // ascending
  if (pricing == Pricing::uniform) {
    for (int t = x; t >= 1; --t) {
      double top = 0.0;
      for (int s = 0; s < t; ++s) top += kept[static_cast<std::size_t>(x - 1 - s)];
      if (top > val(t) + kEqualityTolerance) {
        kept.resize(static_cast<std::size_t>(x - t));
        break;
      }
    }
  }
  std::vector<double> bid(static_cast<std::size_t>(k), 0.0);
  std::sort(kept.begin(), kept.end(), std::greater<>());
  for (std::size_t s = 0; s < kept.size(); ++s) bid[s] = kept[s];
  for (int s = 0; s < x; ++s) bid[static_cast<std::size_t>(s)] += tick;
  return StandardBid(std::move(bid));
}

struct WeightedProfile {
  double prob = 1.0;
  BidProfile profile;
};

struct SampledOpponentCheck {
  double lhs = 0.0;        // E over (beta, b_{-i}) of u_i
  double beta_sum = 0.0;   // E[sum_{j<=x} beta_j(b_{-i})]
  double rhs = 0.0;        // v(x)/2 - beta_sum
  double margin = 0.0;
};

/// Exact expectation of the sampled-opponent deviation when b_{-i} follows
/// the finite distribution `dist`: the deviation copies the top-k vector of
/// one independent draw and is played against another, each of its first x
/// entries raised by `tick`. Ties go to bidder i. The margin therefore
/// carries a slack of at most x * tick.
inline SampledOpponentCheck sampled_opponent_check(int i, const Valuation& val, int x,
                                                   const std::vector<WeightedProfile>& dist,
                                                   Pricing pricing, double tick = 1e-9) {
  if (!(tick > 0.0)) throw InvalidInput("tick must be > 0");
  if (dist.empty()) throw InvalidInput("opponent distribution is empty");
  double total = 0.0;
  for (const auto& w : dist) {
    if (!(w.prob >= 0.0)) throw InvalidInput("negative probability");
    total += w.prob;
  }
  if (std::abs(total - 1.0) > 1e-9) throw InvalidInput("probabilities must sum to 1");

  const TieBreakRule tb = TieBreakRule::favor_bidder(i);
  const AuctionRules rules{pricing, UniformPriceRule::highest_losing};
  std::vector<std::vector<double>> betas;
  for (const auto& w : dist) betas.push_back(beta_minus_i(w.profile, i, tb));

  SampledOpponentCheck out;
  for (std::size_t a = 0; a < dist.size(); ++a) {
    const StandardBid dev = sampled_opponent_deviation(betas[a], x, pricing, val, tick);
    for (std::size_t b = 0; b < dist.size(); ++b) {
      detail::DeviationEvaluator eval(dist[b].profile, i, val, tb, rules);
      out.lhs += dist[a].prob * dist[b].prob * eval(dev);
    }
    double s = 0.0;
    for (int j = 0; j < x; ++j) s += betas[a][static_cast<std::size_t>(j)];
    out.beta_sum += dist[a].prob * s;
  }
  out.rhs = 0.5 * val(x) - out.beta_sum;
  out.margin = out.lhs - out.rhs;
  return out;
}

// ---------------------------------------------------------------------------
// Limits of the per-bidder template

struct ConstantDeviationSup {
  double utility = 0.0;
  double level = 0.0;
  int quantity = 0;
  bool limit = false;  // reached only as the level decreases to `level`
};

/// Supremum of bidder i's utility over constant bids c on the first q
/// slots (any c >= 0, q in [1, k]) against the fixed b_{-i}. Utility only
/// changes where c crosses an opposing bid, so it suffices to evaluate each
/// opposing bid value exactly and in the limit from above.
inline ConstantDeviationSup constant_deviation_sup(int i, const Valuation& val,
                                                   const BidProfile& profile, AuctionRules rules,
                                                   const TieBreakRule& tb) {
  detail::DeviationEvaluator eval(profile, i, val, tb, rules);
  const int k = profile.units();
  std::vector<double> levels{0.0};
  for (int j = 0; j < profile.bidders(); ++j) {
    if (j == i) continue;
    for (double b : profile.marginal_bids(j).values()) levels.push_back(b);
  }
  std::sort(levels.begin(), levels.end());
  levels.erase(std::unique(levels.begin(), levels.end()), levels.end());

  ConstantDeviationSup best;
  best.utility = eval(StandardBid::zero(k));
  for (std::size_t l = 0; l < levels.size(); ++l) {
    const double w = levels[l];
    const double gap = l + 1 < levels.size() ? levels[l + 1] - w : 1.0;
    const double above = w + std::min(1e-9 * std::max(1.0, w), 0.25 * gap);
    for (int q = 1; q <= k; ++q) {
      if (w > 0.0) {
        const double u = eval(StandardBid::constant(w, q, k));
        if (u > best.utility) best = {u, w, q, false};
      }
      // Limit c -> w from above: same units as at `above`, priced at w.
      const StandardBid bid = StandardBid::constant(above, q, k);
      std::vector<const StandardBid*> ptrs = detail::bid_pointers(profile);
      ptrs[static_cast<std::size_t>(i)] = &bid;
      const Outcome out = detail::allocate_bids(ptrs, tb, k, rules.price_rule);
      const int x = out.allocation[static_cast<std::size_t>(i)];
      double price = w;
      if (rules.pricing == Pricing::uniform && std::abs(out.uniform_price - above) > kEqualityTolerance) {
        price = out.uniform_price;
      }
      const double u = val(x) - x * price;
      if (u > best.utility) best = {u, w, q, true};
    }
  }
  return best;
}

struct DaFrontierReport {
  int k = 0;
  double mu = 1.0;
  std::vector<ConstantDeviationSup> sup;  // per bidder
  double utility_sum = 0.0;
  double beta_sum = 0.0;  // sum_j beta_j(b)
  double optimum = 0.0;
  double lhs = 0.0;       // utility_sum + mu beta_sum
  double bound = 0.0;     // mu (1 - e^{-1/mu} + (1/k)(1 - 1/e)) OPT
  bool holds = false;
};

/// Best constant-vector deviations of every bidder against the witness
/// profile never reach the template's right-hand side beyond
/// mu (1 - e^{-1/mu} + (1 - 1/e)/k) OPT.
inline DaFrontierReport da_frontier_check(const AuctionInstance& instance, const BidProfile& profile,
                                          double mu, double tolerance = 1e-6) {
  DaFrontierReport r;
  r.k = profile.units();
  r.mu = mu;
  for (int i = 0; i < instance.bidders(); ++i) {
    r.sup.push_back(constant_deviation_sup(i, instance.valuations[static_cast<std::size_t>(i)],
                                           profile, instance.rules(), instance.tie_break));
    r.utility_sum += r.sup.back().utility;
  }
  const Outcome out = allocate(profile, instance.tie_break);
  for (double b : out.winning_bids) r.beta_sum += b;
  r.optimum = optimal_allocation(instance.valuations).value;
  r.lhs = r.utility_sum + mu * r.beta_sum;
  r.bound = mu * (-std::expm1(-1.0 / mu) + (1.0 / r.k) * (-std::expm1(-1.0))) * r.optimum;
  r.holds = r.lhs <= r.bound + tolerance;
  return r;
}

struct UpaFrontierReport {
  std::vector<double> sup_utility;  // per bidder, over the whole grid
  double utility_sum = 0.0;
  double optimum = 0.0;
  double beta_sum = 0.0;  // sum_i sum_{j <= x^v_i} beta_j(b_{-i})

  /// Largest lambda any template certificate with this mu can claim here.
  double lambda_limit(double mu) const { return (utility_sum + mu * beta_sum) / optimum; }
};

/// Scans every grid strategy of every bidder against the fixed profile.
inline UpaFrontierReport upa_frontier_check(const AuctionInstance& instance,
                                            const BidProfile& profile, const BidGrid& grid) {
  UpaFrontierReport r;
  const auto opt = optimal_allocation(instance.valuations);
  r.optimum = opt.value;
  const int k = profile.units();
  for (int i = 0; i < instance.bidders(); ++i) {
    const auto& val = instance.valuations[static_cast<std::size_t>(i)];
    detail::DeviationEvaluator eval(profile, i, val, instance.tie_break, instance.rules());
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& b : strategy_space(val, grid)) best = std::max(best, eval(as_standard(b, k)));
    r.sup_utility.push_back(best);
    r.utility_sum += best;
    const auto beta = beta_minus_i(profile, i, instance.tie_break);
    for (int j = 0; j < opt.allocation[static_cast<std::size_t>(i)]; ++j) {
      r.beta_sum += beta[static_cast<std::size_t>(j)];
    }
  }
  return r;
}

}  // namespace poa
