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

// JSON encoding of valuations, bids, tie-breaks and named instances.
//
//   valuation    [v(0), v(1), ..., v(k)]
//   standard bid [b(1), ..., b(k)]
//   uniform bid  {"price": p, "quantity": q}
//   tie-break    "lexicographic" | "favor-last-bidder" | {"favor_bidder": i}
//                | {"slot_ranks": [[...], ...]}

#pragma once

#include <initializer_list>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "poa/common.hpp"
#include "poa/equilibria.hpp"
#include "poa/instances.hpp"
#include "poa/mechanism.hpp"
#include "poa/valuation.hpp"

namespace poa {

using Json = nlohmann::ordered_json;

inline constexpr const char* kInstanceSchema = "poa-lab/instance/1";

/// Throws InvalidInput naming the first key of `obj` outside `allowed`.
inline void reject_unknown_keys(const Json& obj, std::initializer_list<const char*> allowed,
                                const std::string& where) {
  if (!obj.is_object()) throw InvalidInput(where + ": expected an object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, _] : obj.items()) {
    if (!ok.count(key)) throw InvalidInput(where + ": unknown key '" + key + "'");
  }
}

template <typename T>
T json_get(const Json& obj, const char* key, const std::string& where) {
  if (!obj.contains(key)) throw InvalidInput(where + ": missing key '" + std::string(key) + "'");
  try {
    return obj.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput(where + "." + key + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------

inline Json to_json(const Valuation& v) {
  return Json(std::vector<double>(v.values().begin(), v.values().end()));
}

inline Valuation valuation_from_json(const Json& j) {
  if (!j.is_array()) throw InvalidInput("valuation must be an array [v(0), ..., v(k)]");
  return Valuation(j.get<std::vector<double>>());
}

inline Json to_json(const Bid& bid) {
  if (const auto* u = std::get_if<UniformBid>(&bid)) return Json{{"price", u->price}, {"quantity", u->quantity}};
  const auto vals = std::get<StandardBid>(bid).values();
  return Json(std::vector<double>(vals.begin(), vals.end()));
}

inline Json to_json(const BidProfile& profile) {
  Json bids = Json::array();
  for (int i = 0; i < profile.bidders(); ++i) bids.push_back(to_json(profile.submitted(i)));
  return Json{{"interface", std::string(to_string(profile.interface()))}, {"bids", bids}};
}

inline BidProfile profile_from_json(const Json& j, int k) {
  reject_unknown_keys(j, {"interface", "bids", "role"}, "profile");
  const BidInterface iface = parse_interface(json_get<std::string>(j, "interface", "profile"));
  const Json& bids = j.at("bids");
  if (!bids.is_array()) throw InvalidInput("profile.bids must be an array");
  if (iface == BidInterface::uniform) {
    std::vector<UniformBid> out;
    for (const auto& b : bids) {
      reject_unknown_keys(b, {"price", "quantity"}, "uniform bid");
      out.push_back({json_get<double>(b, "price", "uniform bid"), json_get<int>(b, "quantity", "uniform bid")});
    }
    return BidProfile(k, std::move(out));
  }
  std::vector<StandardBid> out;
  for (const auto& b : bids) {
    if (!b.is_array()) throw InvalidInput("standard bid must be an array of k marginal bids");
    out.emplace_back(b.get<std::vector<double>>());
  }
  return BidProfile(k, std::move(out));
}

inline Json to_json(const TieBreakRule& tb) {
  switch (tb.kind()) {
    case TieBreakRule::Kind::lexicographic: return "lexicographic";
    case TieBreakRule::Kind::favor_last_bidder: return "favor-last-bidder";
    case TieBreakRule::Kind::favor_bidder: return Json{{"favor_bidder", tb.favored_bidder()}};
    case TieBreakRule::Kind::explicit_ranks: return Json{{"slot_ranks", tb.slot_ranks()}};
  }
  return "lexicographic";
}

inline TieBreakRule tie_break_from_json(const Json& j) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "lexicographic") return TieBreakRule::lexicographic();
    if (s == "favor-last-bidder") return TieBreakRule::favor_last_bidder();
    throw InvalidInput("unknown tie-break: " + s);
  }
  reject_unknown_keys(j, {"favor_bidder", "slot_ranks"}, "tie_break");
  if (j.contains("favor_bidder")) return TieBreakRule::favor_bidder(json_get<int>(j, "favor_bidder", "tie_break"));
  if (j.contains("slot_ranks")) {
    return TieBreakRule::from_slot_ranks(json_get<std::vector<std::vector<int>>>(j, "slot_ranks", "tie_break"));
  }
  throw InvalidInput("tie_break object needs favor_bidder or slot_ranks");
}

inline Json to_json(const BidGrid& g) {
  return Json{{"tick", g.tick()},
              {"max_bid", g.max_bid()},
              {"interface", std::string(to_string(g.interface()))},
              {"no_overbidding", g.no_overbidding()}};
}

inline BidGrid grid_from_json(const Json& j, BidInterface fallback = BidInterface::standard) {
  reject_unknown_keys(j, {"tick", "max_bid", "interface", "no_overbidding"}, "grid");
  const double tick = json_get<double>(j, "tick", "grid");
  const double max_bid = json_get<double>(j, "max_bid", "grid");
  const BidInterface iface =
      j.contains("interface") ? parse_interface(j.at("interface").get<std::string>()) : fallback;
  const bool nob = j.value("no_overbidding", true);
  return BidGrid(tick, max_bid, iface, nob);
}

// ---------------------------------------------------------------------------
// Named instances

inline Json to_json(const NamedInstance& ni) {
  Json vals = Json::array();
  for (const auto& v : ni.auction.valuations) vals.push_back(to_json(v));
  Json profiles = Json::array();
  for (const auto& p : ni.profiles) {
    Json pj = to_json(p.profile);
    pj["role"] = p.role;
    profiles.push_back(pj);
  }
  Json expected = Json::object();
  for (const auto& [name, e] : ni.expected) {
    expected[name] = Json{{"value", e.value}, {"tolerance", e.tolerance}, {"kind", e.kind}};
  }
  Json out{{"schema", kInstanceSchema},
           {"id", ni.id},
           {"description", ni.description},
           {"k", ni.units()},
           {"pricing", std::string(to_string(ni.auction.pricing))},
           {"interface", std::string(to_string(ni.interface))},
           {"tie_break", to_json(ni.auction.tie_break)},
           {"valuations", vals},
           {"profiles", profiles},
           {"expected", expected}};
  if (ni.grid) out["grid"] = to_json(*ni.grid);
  if (!ni.notes.empty()) out["notes"] = ni.notes;
  return out;
}

inline NamedInstance instance_from_json(const Json& j) {
  reject_unknown_keys(j, {"schema", "id", "description", "k", "pricing", "interface", "tie_break",
                          "valuations", "profiles", "expected", "grid", "notes"},
                      "instance");
  if (json_get<std::string>(j, "schema", "instance") != kInstanceSchema) {
    throw InvalidInput(std::string("instance schema must be ") + kInstanceSchema);
  }
  NamedInstance ni;
  ni.id = json_get<std::string>(j, "id", "instance");
  ni.description = j.value("description", "");
  ni.notes = j.value("notes", "");
  const int k = json_get<int>(j, "k", "instance");
  ni.auction.pricing = parse_pricing(json_get<std::string>(j, "pricing", "instance"));
  ni.interface = j.contains("interface") ? parse_interface(j.at("interface").get<std::string>())
                                         : BidInterface::standard;
  if (j.contains("tie_break")) ni.auction.tie_break = tie_break_from_json(j.at("tie_break"));
  const Json& vals = j.at("valuations");
  if (!vals.is_array() || vals.size() < 1) throw InvalidInput("instance.valuations must be a non-empty array");
  for (const auto& v : vals) {
    ni.auction.valuations.push_back(valuation_from_json(v));
    if (ni.auction.valuations.back().units() != k) throw InvalidInput("valuation length must be k + 1");
  }
  if (j.contains("profiles")) {
    for (const auto& p : j.at("profiles")) {
      ni.profiles.push_back({p.value("role", "equilibrium"), profile_from_json(p, k)});
      if (ni.profiles.back().profile.bidders() != ni.bidders()) {
        throw InvalidInput("profile has the wrong number of bidders");
      }
    }
  }
  if (j.contains("expected")) {
    for (const auto& [name, e] : j.at("expected").items()) {
      reject_unknown_keys(e, {"value", "tolerance", "kind"}, "expected." + name);
      ni.expected[name] = {json_get<double>(e, "value", "expected." + name), e.value("tolerance", 1e-9),
                           e.value("kind", "formula")};
    }
  }
  if (j.contains("grid")) ni.grid = grid_from_json(j.at("grid"), ni.interface);
  return ni;
}

}  // namespace poa
