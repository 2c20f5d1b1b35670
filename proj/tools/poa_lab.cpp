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

// poa-lab: run experiment configs, list instances, print bound tables,
// verify named instances.

#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "poa/harness.hpp"

int main(int argc, char** argv) {
  CLI::App app{"poa-lab: multi-unit auction equilibrium and price-of-anarchy laboratory"};
  app.require_subcommand(1);

  std::string config_path;
  auto* run = app.add_subcommand("run", "run an experiment config");
  run->add_option("config", config_path, "config JSON file")->required();

  auto* list = app.add_subcommand("list-instances", "list named instances");

  std::string csv_path;
  auto* table = app.add_subcommand("bound-table", "print every upper bound with its (lambda, mu)");
  table->add_option("--csv", csv_path, "also write the table to this CSV file");

  std::string instance_id;
  std::optional<int> k;
  std::optional<double> eps;
  std::optional<double> tick;
  std::optional<double> mu;
  std::optional<double> alpha;
  std::string json_path;
  auto* verify = app.add_subcommand("verify", "verify a named instance");
  verify->add_option("instance-id", instance_id, "instance id (see list-instances)")->required();
  verify->add_option("--k", k, "number of units");
  verify->add_option("--eps", eps, "eps parameter");
  verify->add_option("--tick", tick, "deviation grid tick");
  verify->add_option("--mu", mu, "template mu");
  verify->add_option("--alpha", alpha, "type probability (Bayesian instance)");
  verify->add_option("--json", json_path, "write the report here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? poa::kExitPass : poa::kExitConfig;
  }

  try {
    if (*run) return poa::run_config_file(config_path, std::cout, std::cerr);

    if (*list) {
      for (const auto& e : poa::list_instances()) {
        std::cout << e.id << (e.bayesian ? "  [bayesian]" : "") << "\n    " << e.description << '\n';
      }
      return poa::kExitPass;
    }

    if (*table) {
      const std::string csv = poa::bound_table_csv(poa::bound_table());
      std::cout << csv;
      if (!csv_path.empty()) poa::write_text(csv_path, csv);
      return poa::kExitPass;
    }

    if (*verify) {
      poa::Json cfg{{"schema", poa::kConfigSchema}, {"experiment", "verify-instance"}, {"instance", instance_id}};
      poa::Json params = poa::Json::object();
      if (k) params["k"] = *k;
      if (eps) params["eps"] = *eps;
      if (tick) params["tick"] = *tick;
      if (mu) params["mu"] = *mu;
      if (alpha) params["alpha"] = *alpha;
      if (!params.empty()) cfg["params"] = params;
      const poa::ExperimentConfig c = poa::parse_config(cfg);
      const poa::ExperimentReport rep = poa::run_experiment(c);
      if (!json_path.empty()) poa::write_text(json_path, poa::to_json(rep).dump(2) + "\n");
      for (const auto& row : rep.rows) {
        std::cout << row.instance << " [" << row.details.value("role", std::string("bayesian")) << "] "
                  << row.details.dump() << '\n';
      }
      for (const auto& f : rep.failures) std::cout << "FAIL " << f.check << ": " << f.message << '\n';
      std::cout << (rep.passed() ? "PASS" : "FAIL") << '\n';
      return rep.exit_code();
    }
  } catch (const poa::InvalidInput& e) {
    std::cerr << "error: " << e.what() << '\n';
    return poa::kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return poa::kExitAssertion;
  }
  return poa::kExitConfig;
}
