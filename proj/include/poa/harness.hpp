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

// Experiment configs, dispatch and reports.
//
// A config is a JSON object with "schema": "poa-lab/config/1" and an
// "experiment" kind; unknown keys are rejected. Every run produces a JSON
// report (config echoed, result rows, failures, timings) and a CSV summary
// with fixed columns. Wall-clock data lives only in the report's
// "timestamp" block and the CSV runtime_ms column.

#pragma once

#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "poa/common.hpp"
#include "poa/equilibria.hpp"
#include "poa/instances.hpp"
#include "poa/mechanism.hpp"
#include "poa/parallel.hpp"
#include "poa/serialization.hpp"
#include "poa/smoothness.hpp"
#include "poa/sweep.hpp"
#include "poa/welfare.hpp"

namespace poa {

inline constexpr const char* kConfigSchema = "poa-lab/config/1";
inline constexpr const char* kReportSchema = "poa-lab/report/1";

enum ExitCode : int { kExitPass = 0, kExitAssertion = 1, kExitConfig = 2 };

/// Bad or unsupported configuration; maps to exit code 2.
class ConfigError : public InvalidInput {
 public:
  using InvalidInput::InvalidInput;
};

struct ExperimentConfig {
  std::string experiment;
  std::optional<std::string> instance_id;
  std::optional<std::string> instance_file;
  InstanceParams params;
  std::optional<BidGrid> grid;
  std::vector<double> alphas;
  std::vector<Pricing> pricings;
  BidInterface interface = BidInterface::standard;
  ValuationClass cls = ValuationClass::submodular;
  std::optional<std::uint64_t> seed;
  long cases = 0;
  int max_bidders = 5;
  int max_units = 8;
  int threads = 0;
  double tolerance = kRegretTolerance;
  SearchOptions search;
  std::string json_out;
  std::string csv_out;
  Json raw;
};

namespace detail {

inline const std::vector<std::string>& experiment_kinds() {
  static const std::vector<std::string> kinds{"verify-instance",    "sweep-key-lemma",
                                              "certify-smoothness", "find-pne",
                                              "verify-bne",         "bound-table",
                                              "template-frontier"};
  return kinds;
}

template <typename Fn>
auto config_field(const char* where, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const ConfigError&) {
    throw;
  } catch (const InvalidInput& e) {
    throw ConfigError(std::string(where) + ": " + e.what());
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string(where) + ": " + e.what());
  }
}

}  // namespace detail

/// Parses and validates a config. `base_dir` resolves relative paths.
inline ExperimentConfig parse_config(const Json& j, const std::filesystem::path& base_dir = {}) {
  ExperimentConfig c;
  c.raw = j;
  detail::config_field("config", [&] {
    reject_unknown_keys(j, {"schema", "experiment", "instance", "params", "grid", "alphas", "pricing",
                            "interface", "valuation_class", "cases", "max_bidders", "max_units",
                            "seed", "threads", "tolerance", "search", "output"},
                        "config");
  });
  if (!j.contains("schema") || j.at("schema") != kConfigSchema) {
    throw ConfigError(std::string("config: schema must be \"") + kConfigSchema + "\"");
  }
  c.experiment = detail::config_field("experiment", [&] { return json_get<std::string>(j, "experiment", "config"); });
  const auto& kinds = detail::experiment_kinds();
  if (std::find(kinds.begin(), kinds.end(), c.experiment) == kinds.end()) {
    throw ConfigError("config: unknown experiment kind '" + c.experiment + "'");
  }

  if (j.contains("instance")) {
    detail::config_field("instance", [&] {
      const Json& in = j.at("instance");
      if (in.is_string()) {
        c.instance_id = in.get<std::string>();
      } else {
        reject_unknown_keys(in, {"id", "file"}, "instance");
        if (in.contains("id")) c.instance_id = in.at("id").get<std::string>();
        if (in.contains("file")) {
          std::filesystem::path p = in.at("file").get<std::string>();
          if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
          c.instance_file = p.string();
        }
        if (c.instance_id.has_value() == c.instance_file.has_value()) {
          throw ConfigError("instance: give exactly one of id or file");
        }
      }
    });
  }
  if (j.contains("params")) {
    detail::config_field("params", [&] {
      const Json& p = j.at("params");
      reject_unknown_keys(p, {"k", "eps", "mu", "alpha", "tick"}, "params");
      if (p.contains("k")) c.params.k = p.at("k").get<int>();
      if (p.contains("eps")) c.params.eps = p.at("eps").get<double>();
      if (p.contains("mu")) c.params.mu = p.at("mu").get<double>();
      if (p.contains("alpha")) c.params.alpha = p.at("alpha").get<double>();
      if (p.contains("tick")) c.params.tick = p.at("tick").get<double>();
    });
  }
  if (j.contains("interface")) {
    c.interface = detail::config_field("interface", [&] { return parse_interface(j.at("interface").get<std::string>()); });
  }
  if (j.contains("grid")) {
    c.grid = detail::config_field("grid", [&] { return grid_from_json(j.at("grid"), c.interface); });
  }
  if (j.contains("alphas")) {
    c.alphas = detail::config_field("alphas", [&] { return j.at("alphas").get<std::vector<double>>(); });
    for (double a : c.alphas) {
      if (!(a > 0.0)) throw ConfigError("alphas: every alpha must be > 0");
    }
  }
  if (j.contains("pricing")) {
    detail::config_field("pricing", [&] {
      const Json& p = j.at("pricing");
      if (p.is_string()) {
        c.pricings.push_back(parse_pricing(p.get<std::string>()));
      } else {
        for (const auto& s : p) c.pricings.push_back(parse_pricing(s.get<std::string>()));
      }
    });
  }
  if (j.contains("valuation_class")) {
    c.cls = detail::config_field("valuation_class", [&] {
      return parse_valuation_class(j.at("valuation_class").get<std::string>());
    });
  }
  if (j.contains("seed")) c.seed = detail::config_field("seed", [&] { return j.at("seed").get<std::uint64_t>(); });
  if (j.contains("cases")) c.cases = detail::config_field("cases", [&] { return j.at("cases").get<long>(); });
  if (j.contains("max_bidders")) c.max_bidders = detail::config_field("max_bidders", [&] { return j.at("max_bidders").get<int>(); });
  if (j.contains("max_units")) c.max_units = detail::config_field("max_units", [&] { return j.at("max_units").get<int>(); });
  if (j.contains("threads")) c.threads = detail::config_field("threads", [&] { return j.at("threads").get<int>(); });
  if (j.contains("tolerance")) c.tolerance = detail::config_field("tolerance", [&] { return j.at("tolerance").get<double>(); });
  if (j.contains("search")) {
    detail::config_field("search", [&] {
      const Json& s = j.at("search");
      reject_unknown_keys(s, {"mode", "profile_cap", "starts", "max_rounds", "full_standard_enumeration"},
                          "search");
      if (s.contains("mode")) {
        const auto m = s.at("mode").get<std::string>();
        if (m == "exhaustive") {
          c.search.mode = SearchMode::exhaustive;
        } else if (m == "best-response-dynamics") {
          c.search.mode = SearchMode::best_response_dynamics;
        } else {
          throw ConfigError("search.mode must be exhaustive or best-response-dynamics");
        }
      }
      if (s.contains("profile_cap")) c.search.profile_cap = s.at("profile_cap").get<long>();
      if (s.contains("starts")) c.search.starts = s.at("starts").get<int>();
      if (s.contains("max_rounds")) c.search.max_rounds = s.at("max_rounds").get<int>();
      if (s.contains("full_standard_enumeration")) {
        c.search.deviations.full_standard_enumeration = s.at("full_standard_enumeration").get<bool>();
      }
    });
  }
  if (j.contains("output")) {
    detail::config_field("output", [&] {
      const Json& o = j.at("output");
      reject_unknown_keys(o, {"json", "csv"}, "output");
      auto resolve = [&](const std::string& s) {
        std::filesystem::path p = s;
        if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
        return p.string();
      };
      if (o.contains("json")) c.json_out = resolve(o.at("json").get<std::string>());
      if (o.contains("csv")) c.csv_out = resolve(o.at("csv").get<std::string>());
    });
  }

  // Per-kind requirements.
  const bool randomized = c.experiment == "sweep-key-lemma" || c.experiment == "certify-smoothness" ||
                          (c.experiment == "find-pne" && !c.instance_id && !c.instance_file);
  if (randomized) {
    if (!c.seed) throw ConfigError("config: seed is required for randomized experiments");
    if (c.cases < 1) throw ConfigError("config: cases must be >= 1");
    if (c.max_bidders < 2 || c.max_units < 1) throw ConfigError("config: need max_bidders >= 2, max_units >= 1");
  }
  if (c.experiment == "verify-instance" || c.experiment == "verify-bne") {
    if (!c.instance_id && !c.instance_file) throw ConfigError("config: " + c.experiment + " needs an instance");
  }
  if (c.experiment == "verify-bne" && c.instance_file) {
    throw ConfigError("config: verify-bne takes a named Bayesian instance id");
  }
  if (c.experiment == "find-pne" && !c.grid) throw ConfigError("config: find-pne needs a grid");
  if (c.alphas.empty()) {
    c.alphas = {0.5, optimal_alpha(Pricing::uniform), 1.0, 2.0};
  }
  if (c.pricings.empty()) {
    c.pricings = c.experiment == "find-pne" ? std::vector<Pricing>{Pricing::discriminatory}
                                            : std::vector<Pricing>{Pricing::discriminatory, Pricing::uniform};
  }
  if (!(c.tolerance >= 0.0)) throw ConfigError("config: tolerance must be >= 0");
  return c;
}

// ---------------------------------------------------------------------------
// Reports

struct ResultRow {
  std::string experiment;
  std::string instance;
  std::optional<std::uint64_t> seed;
  double tolerance = kRegretTolerance;
  int n = 0;
  int k = 0;
  std::string pricing;
  std::string interface;
  std::optional<double> alpha;
  std::optional<double> lambda;
  std::optional<double> mu;
  std::optional<double> margin;
  std::optional<double> poa;
  double runtime_ms = 0.0;
  bool passed = true;
  Json details = Json::object();
};

struct Failure {
  std::string instance;
  std::string check;
  double measured = 0.0;
  double expected = 0.0;
  std::string message;
};

struct ExperimentReport {
  std::string experiment;
  Json config;
  std::vector<ResultRow> rows;
  std::vector<Failure> failures;
  double runtime_ms = 0.0;

  bool passed() const { return failures.empty(); }
  int exit_code() const { return passed() ? kExitPass : kExitAssertion; }

  void fail(std::string instance, std::string check, double measured, double expected, std::string message) {
    failures.push_back({std::move(instance), std::move(check), measured, expected, std::move(message)});
  }
};

namespace detail {

inline Json number_or_null(const std::optional<double>& x) {
  if (!x || !std::isfinite(*x)) return nullptr;
  return *x;
}

inline std::string csv_number(const std::optional<double>& x) {
  if (!x) return "";
  if (!std::isfinite(*x)) return *x > 0 ? "inf" : (*x < 0 ? "-inf" : "nan");
  std::ostringstream os;
  os << std::setprecision(12) << (*x == 0.0 ? 0.0 : *x);  // no "-0"
  return os.str();
}

inline std::string utc_now() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

}  // namespace detail

inline Json to_json(const ExperimentReport& r) {
  Json rows = Json::array();
  Json row_times = Json::array();
  for (const auto& row : r.rows) {
    Json j{{"experiment", row.experiment},
           {"instance", row.instance},
           {"seed", row.seed ? Json(*row.seed) : Json(nullptr)},
           {"tolerance", row.tolerance},
           {"n", row.n},
           {"k", row.k},
           {"pricing", row.pricing},
           {"interface", row.interface},
           {"alpha", detail::number_or_null(row.alpha)},
           {"lambda", detail::number_or_null(row.lambda)},
           {"mu", detail::number_or_null(row.mu)},
           {"margin", detail::number_or_null(row.margin)},
           {"poa", detail::number_or_null(row.poa)},
           {"passed", row.passed},
           {"details", row.details}};
    rows.push_back(std::move(j));
    row_times.push_back(row.runtime_ms);
  }
  Json failures = Json::array();
  for (const auto& f : r.failures) {
    failures.push_back(Json{{"instance", f.instance},
                            {"check", f.check},
                            {"measured", std::isfinite(f.measured) ? Json(f.measured) : Json(nullptr)},
                            {"expected", std::isfinite(f.expected) ? Json(f.expected) : Json(nullptr)},
                            {"message", f.message}});
  }
  return Json{{"schema", kReportSchema},
              {"experiment", r.experiment},
              {"config", r.config},
              {"passed", r.passed()},
              {"rows", rows},
              {"failures", failures},
              {"timestamp",
               Json{{"generated_at", detail::utc_now()}, {"runtime_ms", r.runtime_ms}, {"row_runtime_ms", row_times}}}};
}

inline constexpr const char* kCsvHeader =
    "experiment,instance,n,k,pricing,interface,alpha,lambda,mu,margin,poa,runtime_ms";

inline std::string to_csv(const ExperimentReport& r) {
  std::ostringstream os;
  os << kCsvHeader << '\n';
  for (const auto& row : r.rows) {
    os << row.experiment << ',' << row.instance << ',' << row.n << ',' << row.k << ',' << row.pricing
       << ',' << row.interface << ',' << detail::csv_number(row.alpha) << ','
       << detail::csv_number(row.lambda) << ',' << detail::csv_number(row.mu) << ','
       << detail::csv_number(row.margin) << ',' << detail::csv_number(row.poa) << ','
       << detail::csv_number(row.runtime_ms) << '\n';
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// Experiments

namespace detail {

using Clock = std::chrono::steady_clock;

inline double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

inline NamedInstance load_instance(const ExperimentConfig& c) {
  if (c.instance_file) {
    std::ifstream in(*c.instance_file);
    if (!in) throw ConfigError("cannot open instance file " + *c.instance_file);
    Json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError("instance file " + *c.instance_file + ": " + e.what());
    }
    return config_field("instance file", [&] { return instance_from_json(j); });
  }
  return config_field("instance", [&] { return make_instance(*c.instance_id, c.params); });
}

inline bool is_bayesian_id(const std::string& id) {
  for (const auto& e : list_instances()) {
    if (e.id == id) return e.bayesian;
  }
  return false;
}

inline void check_expected(ExperimentReport& rep, const NamedInstance& ni, const std::string& key,
                           double measured, ResultRow& row) {
  row.details[key] = measured;
  const auto it = ni.expected.find(key);
  if (it == ni.expected.end()) return;
  const Expectation& e = it->second;
  const bool ok = std::abs(measured - e.value) <= e.tolerance;
  if (!ok) {
    row.passed = false;
    rep.fail(ni.id, key, measured, e.value, "differs from expected by more than " + csv_number(e.tolerance));
  }
}

inline void verify_bayesian(ExperimentReport& rep, const BayesianInstance& bi, double tolerance) {
  const auto t0 = Clock::now();
  ResultRow row;
  row.experiment = rep.experiment;
  row.instance = bi.id;
  row.tolerance = tolerance;
  row.n = bi.game.bidders();
  row.k = bi.game.k;
  row.pricing = std::string(to_string(bi.game.pricing));
  row.interface = std::string(to_string(bi.game.grid.interface()));
  const BayesRegretReport br = is_bayes_nash(bi.game, bi.strategy);
  const BayesianWelfare w = bayesian_welfare(bi.game, bi.strategy);
  row.poa = poa_ratio(w.expected_optimum, w.expected_equilibrium);
  row.margin = -br.max_regret;
  row.details["max_regret"] = br.max_regret;
  row.details["expected_optimum"] = w.expected_optimum;
  row.details["expected_welfare"] = w.expected_equilibrium;
  row.details["expected_utility_0"] = br.expected_utility[0][0];
  if (!(br.max_regret <= tolerance)) {
    row.passed = false;
    rep.fail(bi.id, "max_regret", br.max_regret, 0.0, "strategy is not a Bayes-Nash equilibrium");
  }
  auto expect = [&](const char* key, double measured) {
    const auto it = bi.expected.find(key);
    if (it == bi.expected.end()) return;
    if (std::abs(measured - it->second.value) > it->second.tolerance) {
      row.passed = false;
      rep.fail(bi.id, key, measured, it->second.value, "differs from expected");
    }
  };
  expect("expected_utility_0", br.expected_utility[0][0]);
  expect("expected_welfare", w.expected_equilibrium);
  expect("expected_optimum", w.expected_optimum);
  expect("bayesian_poa", *row.poa);
  row.runtime_ms = ms_since(t0);
  rep.rows.push_back(std::move(row));
}

inline ResultRow base_row(const ExperimentReport& rep, const NamedInstance& ni, double tolerance) {
  ResultRow row;
  row.experiment = rep.experiment;
  row.instance = ni.id;
  row.tolerance = tolerance;
  row.n = ni.bidders();
  row.k = ni.units();
  row.pricing = std::string(to_string(ni.auction.pricing));
  row.interface = std::string(to_string(ni.interface));
  return row;
}

// Checks every tagged profile of the instance against its expectations.
inline void verify_named(ExperimentReport& rep, const NamedInstance& ni, const ExperimentConfig& c) {
  const auto opt = optimal_allocation(ni.auction.valuations);
  std::optional<BidGrid> grid = c.grid ? c.grid : ni.grid;
  for (const auto& tp : ni.profiles) {
    const auto t0 = Clock::now();
    ResultRow row = base_row(rep, ni, c.tolerance);
    row.details["role"] = tp.role;
    check_expected(rep, ni, "optimum", opt.value, row);
    const Outcome out = run_auction(tp.profile, ni.auction.tie_break, ni.auction.rules());
    const double welfare = social_welfare(ni.auction.valuations, out.allocation);

    if (tp.role == "equilibrium") {
      if (!grid) throw ConfigError("instance " + ni.id + ": equilibrium checks need a deviation grid");
      check_expected(rep, ni, "equilibrium_welfare", welfare, row);
      if (ni.auction.pricing == Pricing::uniform) check_expected(rep, ni, "uniform_price", out.uniform_price, row);
      row.poa = poa_ratio(opt.value, welfare);
      check_expected(rep, ni, "poa", *row.poa, row);

      const auto bound = ni.expected.find("max_regret_at_most");
      double regret = 0.0;
      if (bound != ni.expected.end()) {
        // eps-equilibria must hold under every tie-break preset.
        for (const auto& tb : tie_break_presets(ni.bidders())) {
          AuctionInstance a = ni.auction;
          a.tie_break = tb;
          regret = std::max(regret, is_pure_nash(tp.profile, a, *grid, c.search.deviations).max_regret);
        }
        row.details["max_regret"] = regret;
        if (regret > bound->second.value + c.tolerance) {
          row.passed = false;
          rep.fail(ni.id, "max_regret_at_most", regret, bound->second.value, "regret above eps");
        }
      } else {
        regret = is_pure_nash(tp.profile, ni.auction, *grid, c.search.deviations).max_regret;
        row.details["max_regret"] = regret;
        if (regret > c.tolerance) {
          row.passed = false;
          rep.fail(ni.id, "max_regret", regret, 0.0, "profile is not a pure Nash equilibrium");
        }
      }
      row.margin = -regret;
      if (ni.auction.pricing == Pricing::discriminatory) {
        const PneStructure s = pne_structure(tp.profile, ni.auction);
        check_expected(rep, ni, "level", s.d, row);
        row.details["structure_holds"] = s.holds();
      }
      const auto lim = ni.expected.find("poa_limit");
      if (lim != ni.expected.end() && *row.poa < lim->second.value - lim->second.tolerance) {
        row.passed = false;
        rep.fail(ni.id, "poa_limit", *row.poa, lim->second.value, "PoA below the lower-bound limit");
      }
    } else {
      check_expected(rep, ni, "profile_welfare", welfare, row);
      if (ni.auction.pricing == Pricing::discriminatory) {
        const double mu = c.params.mu.value_or(1.0);
        const DaFrontierReport fr = da_frontier_check(ni.auction, tp.profile, mu);
        row.mu = mu;
        row.margin = fr.bound - fr.lhs;
        row.details["template_lhs"] = fr.lhs;
        check_expected(rep, ni, "template_bound", fr.bound, row);
        if (!fr.holds) {
          row.passed = false;
          rep.fail(ni.id, "template_frontier", fr.lhs, fr.bound, "constant deviations exceed the template limit");
        }
      } else {
        if (!grid) throw ConfigError("instance " + ni.id + ": witness scan needs a grid");
        const UpaFrontierReport fr = upa_frontier_check(ni.auction, tp.profile, *grid);
        for (std::size_t i = 0; i < fr.sup_utility.size(); ++i) {
          check_expected(rep, ni, "sup_utility_" + std::to_string(i), fr.sup_utility[i], row);
        }
        check_expected(rep, ni, "sup_utility_sum", fr.utility_sum, row);
        const double mu = c.params.mu.value_or(1.0);
        row.mu = mu;
        row.lambda = fr.lambda_limit(mu);
        row.details["lambda_limit"] = *row.lambda;
      }
    }
    row.runtime_ms = ms_since(t0);
    rep.rows.push_back(std::move(row));
  }
}

inline void run_sweep_experiment(ExperimentReport& rep, const ExperimentConfig& c, bool certify) {
  const auto t0 = Clock::now();
  SweepOptions o;
  o.cls = c.cls;
  o.cases = c.cases;
  o.max_bidders = c.max_bidders;
  o.max_units = c.max_units;
  o.alphas = c.alphas;
  o.pricings = c.pricings;
  o.interface = c.interface;
  o.seed = *c.seed;
  o.threads = thread_count(c.threads);
  const SweepResult res = run_sweep(o, c.tolerance);
  const double per_cell = ms_since(t0) / static_cast<double>(std::max<std::size_t>(1, res.cells.size()));
  for (const auto& cell : res.cells) {
    ResultRow row;
    row.experiment = rep.experiment;
    row.instance = std::string("random-") + std::string(to_string(c.cls));
    row.seed = c.seed;
    row.tolerance = c.tolerance;
    row.n = c.max_bidders;
    row.k = c.max_units;
    row.pricing = std::string(to_string(cell.pricing));
    row.interface = std::string(to_string(c.interface));
    row.alpha = cell.alpha;
    row.lambda = cell.certificate.lambda;
    row.runtime_ms = per_cell;
    row.details["cases"] = cell.cases;
    if (certify) {
      const auto& cert = cell.certificate;
      row.mu = cert.kind == SmoothnessKind::smooth ? cert.mu : cert.mu2;
      row.margin = cert.margin;
      row.poa = cert.implied_poa();
      row.details["kind"] = cert.kind == SmoothnessKind::smooth ? "smooth" : "weakly-smooth";
      row.details["mu1"] = cert.mu1;
      row.details["violations"] = cell.smooth_violations;
      row.details["worst_seed"] = cell.worst_smooth_seed;
      if (!cert.verified) {
        row.passed = false;
        rep.fail(row.instance, "smoothness", cert.margin, 0.0,
                 std::string(to_string(cell.pricing)) + " certificate violated at alpha " +
                     csv_number(cell.alpha) + " (case seed " + std::to_string(cell.worst_smooth_seed) + ")");
      }
    } else {
      row.mu = cell.alpha;
      row.margin = std::min(cell.key_margin, cell.template_margin);
      row.poa = template_poa_bound(cell.pricing, cell.certificate.lambda, cell.alpha);
      row.details["key_margin"] = cell.key_margin;
      row.details["template_margin"] = cell.template_margin;
      row.details["violations"] = cell.key_violations;
      row.details["worst_seed"] = cell.worst_key_seed;
      if (*row.margin < -c.tolerance) {
        row.passed = false;
        rep.fail(row.instance, "deviation_inequality", *row.margin, 0.0,
                 "margin below tolerance (case seed " + std::to_string(cell.worst_key_seed) + ")");
      }
    }
    rep.rows.push_back(std::move(row));
  }
}

// Reference values recomputed independently of the (lambda, mu) arithmetic.
inline double reference_bound(const BoundRow& r) {
  const double e = std::exp(1.0);
  const double da = e / (e - 1.0);
  const double w = upa_submodular_bound();
  const bool sub = r.cls == ValuationClass::submodular;
  if (r.table == "single-auction") {
    if (r.pricing == Pricing::discriminatory) {
      if (sub) return da;
      return r.interface == "standard" ? 2.0 : 2.0 * da;
    }
    if (sub) return w;
    return r.interface == "standard" ? 4.0 : 2.0 * w;
  }
  const double seq = r.composition == Composition::sequential ? 2.0 : 1.0;
  if (r.pricing == Pricing::discriminatory) return (sub ? da : 2.0 * da) * seq;
  return sub ? w : 2.0 * w;
}

inline void run_bound_table(ExperimentReport& rep, const ExperimentConfig& c) {
  for (const auto& r : bound_table()) {
    const auto t0 = Clock::now();
    ResultRow row;
    row.experiment = rep.experiment;
    row.instance = r.table + "/" + std::string(to_string(r.cls)) + "/" + std::string(to_string(r.composition));
    row.tolerance = 1e-4;
    row.pricing = std::string(to_string(r.pricing));
    row.interface = r.interface;
    row.alpha = r.alpha;
    row.lambda = r.lambda;
    row.mu = r.mu1;
    row.poa = r.bound;
    const double ref = reference_bound(r);
    row.margin = ref - r.bound;
    row.details["certificate"] = r.certificate;
    row.details["mu2"] = r.mu2;
    row.details["reference"] = ref;
    if (std::abs(r.bound - ref) > 1e-4) {
      row.passed = false;
      rep.fail(row.instance, "bound", r.bound, ref, "bound arithmetic disagrees with reference");
    }
    row.runtime_ms = ms_since(t0);
    rep.rows.push_back(std::move(row));
  }
  (void)c;
}

inline void run_find_pne(ExperimentReport& rep, const ExperimentConfig& c) {
  SearchOptions so = c.search;
  so.threads = thread_count(c.threads);
  if (c.seed) so.seed = *c.seed;
  const BidGrid& grid = *c.grid;

  auto one = [&](const std::string& id, const AuctionInstance& inst, std::optional<std::uint64_t> seed) {
    const auto t0 = Clock::now();
    ResultRow row;
    row.experiment = rep.experiment;
    row.instance = id;
    row.seed = seed;
    row.tolerance = c.tolerance;
    row.n = inst.bidders();
    row.k = inst.units();
    row.pricing = std::string(to_string(inst.pricing));
    row.interface = std::string(to_string(grid.interface()));
    const SearchResult sr = find_pure_nash(inst, grid, so);
    const double opt = optimal_allocation(inst.valuations).value;
    const double slack = inst.bidders() * inst.units() * grid.tick();
    double worst_welfare = std::numeric_limits<double>::infinity();
    for (const auto& p : sr.equilibria) {
      const Outcome o = allocate(p, inst.tie_break);
      worst_welfare = std::min(worst_welfare, social_welfare(inst.valuations, o.allocation));
    }
    row.details["equilibria"] = sr.equilibria.size();
    row.details["exhaustive"] = sr.exhaustive;
    row.details["profiles_evaluated"] = sr.profiles_evaluated;
    row.details["optimum"] = opt;
    if (!sr.equilibria.empty()) {
      row.details["worst_welfare"] = worst_welfare;
      row.margin = worst_welfare - (opt - slack);
      if (worst_welfare > 0.0) row.poa = opt / worst_welfare;
      if (inst.pricing == Pricing::discriminatory && *row.margin < -c.tolerance) {
        row.passed = false;
        rep.fail(id, "pne_welfare", worst_welfare, opt - slack, "equilibrium welfare below OPT - n k tick");
      }
    }
    row.runtime_ms = ms_since(t0);
    rep.rows.push_back(std::move(row));
  };

  if (c.instance_id || c.instance_file) {
    const NamedInstance ni = load_instance(c);
    one(ni.id, ni.auction, c.seed);
    return;
  }
  for (long idx = 0; idx < c.cases; ++idx) {
    const std::uint64_t s = mix_seed(*c.seed, static_cast<std::uint64_t>(idx));
    const RandomCase rc = random_case(c.cls, c.max_bidders, c.max_units, s);
    for (Pricing p : c.pricings) {
      AuctionInstance inst;
      inst.valuations = rc.valuations;
      inst.pricing = p;
      one("random-" + std::to_string(idx), inst, s);
    }
  }
}

inline void run_template_frontier(ExperimentReport& rep, const ExperimentConfig& c) {
  ExperimentConfig da = c;
  verify_named(rep, da_template_frontier(c.params.k.value_or(50), c.params.mu.value_or(1.0)), da);
  NamedInstance upa = upa_template_frontier();
  if (c.params.tick) upa.grid = BidGrid(*c.params.tick, 1.0, upa.interface, true);
  verify_named(rep, upa, c);
}

}  // namespace detail

/// Runs one experiment. Config problems raise ConfigError; everything else
/// is recorded in the report.
inline ExperimentReport run_experiment(const ExperimentConfig& c) {
  const auto t0 = detail::Clock::now();
  ExperimentReport rep;
  rep.experiment = c.experiment;
  rep.config = c.raw;
  try {
    if (c.experiment == "verify-instance") {
      if (c.instance_id && detail::is_bayesian_id(*c.instance_id)) {
        detail::verify_bayesian(rep, make_bayesian_instance(*c.instance_id, c.params), c.tolerance);
      } else {
        detail::verify_named(rep, detail::load_instance(c), c);
      }
    } else if (c.experiment == "verify-bne") {
      const auto bi = detail::config_field("instance", [&] { return make_bayesian_instance(*c.instance_id, c.params); });
      detail::verify_bayesian(rep, bi, c.tolerance);
    } else if (c.experiment == "sweep-key-lemma") {
      detail::run_sweep_experiment(rep, c, false);
    } else if (c.experiment == "certify-smoothness") {
      detail::run_sweep_experiment(rep, c, true);
    } else if (c.experiment == "bound-table") {
      detail::run_bound_table(rep, c);
    } else if (c.experiment == "find-pne") {
      detail::run_find_pne(rep, c);
    } else if (c.experiment == "template-frontier") {
      detail::run_template_frontier(rep, c);
    }
  } catch (const CapExceeded& e) {
    throw ConfigError(std::string("cap exceeded: ") + e.what());
  }
  rep.runtime_ms = detail::ms_since(t0);
  return rep;
}

inline void write_text(const std::string& path, const std::string& text) {
  if (path.empty()) return;
  const std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p);
  if (!out) throw ConfigError("cannot write " + path);
  out << text;
}

/// Loads, runs and persists a config file; returns the process exit code.
/// Config errors are reported on `err` with code 2.
inline int run_config_file(const std::string& path, std::ostream& log, std::ostream& err) {
  try {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config " + path);
    Json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    const ExperimentConfig c = parse_config(j, std::filesystem::path(path).parent_path());
    const ExperimentReport rep = run_experiment(c);
    write_text(c.json_out, to_json(rep).dump(2) + "\n");
    write_text(c.csv_out, to_csv(rep));
    log << c.experiment << ": " << rep.rows.size() << " rows, " << rep.failures.size() << " failures -> "
        << (rep.passed() ? "PASS" : "FAIL") << '\n';
    for (const auto& f : rep.failures) {
      log << "  " << f.instance << " " << f.check << ": " << f.message << '\n';
    }
    if (c.json_out.empty() && c.csv_out.empty()) log << to_csv(rep);
    return rep.exit_code();
  } catch (const InvalidInput& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  }
}

}  // namespace poa
