/*
 * Copyright 2026 The rgrank Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// rgrank command-line front end.
//
//   rgrank prep   --config run.cfg                 ingest, k-core, split
//   rgrank train  --config run.cfg --lambda 0.1    train, log, checkpoint
//   rgrank eval   --snapshot best.model --test test.txt --train train.txt
//   rgrank verify [--suite taylor ...] [--fault gradient:rg2]
//   rgrank curve  --run als=als.log --run sgd=sgd.log --out curve.tsv
//   rgrank grid   --config run.cfg
//
// Exit status: 0 success, 1 usage error, 2 runtime error, 3 verification
// failure.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rgrank/config.hpp"
#include "rgrank/errors.hpp"
#include "rgrank/harness.hpp"
#include "rgrank/verify.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitRuntime = 2;
constexpr int kExitVerify = 3;

// Thrown for bad flags or config contents discovered after CLI parsing.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// --config plus one --<key> flag per schema key.
struct ConfigFlags {
  std::string config_path;
  std::map<std::string, std::string> overrides;

  void attach(CLI::App* cmd) {
    cmd->add_option("--config", config_path, "key = value configuration file");
    for (const auto& key : rgrank::config_schema()) {
      cmd->add_option_function<std::string>(
          "--" + key.name,
          [this, name = key.name](const std::string& v) { overrides[name] = v; },
          key.help + " (default: " +
              (key.default_value.empty() ? "unset" : key.default_value) + ")");
    }
  }

  rgrank::RunConfig resolve() const {
    try {
      rgrank::RunConfig cfg;
      if (!config_path.empty()) {
        std::ifstream in(config_path);
        if (!in) throw UsageError("cannot open config '" + config_path + "'");
        cfg = rgrank::parse_config(in);
      }
      for (const auto& [k, v] : overrides) cfg.set(k, v);
      return cfg;
    } catch (const rgrank::Error& e) {
      throw UsageError(e.what());
    }
  }
};

int cmd_prep(const ConfigFlags& flags) {
  const auto cfg = flags.resolve();
  if (cfg.get("raw").empty()) throw UsageError("prep needs --raw");
  std::filesystem::create_directories(cfg.get("out_dir"));
  const auto out = rgrank::run_prep(cfg);
  std::cout << "contexts=" << out.filtered.num_contexts()
            << " objects=" << out.filtered.num_objects()
            << " interactions=" << out.filtered.size()
            << " train=" << out.split.train.size()
            << " valid=" << out.split.valid.size()
            << " test=" << out.split.test.size()
            << " short_contexts=" << out.split.short_contexts << '\n';
  return kExitOk;
}

rgrank::RunConfig training_config(const ConfigFlags& flags) {
  const auto cfg = flags.resolve();
  if (cfg.get("train").empty()) throw UsageError("missing --train");
  try {
    rgrank::validate_run_config(cfg);
  } catch (const rgrank::InvalidArgument& e) {
    throw UsageError(e.what());
  }
  return cfg;
}

int cmd_train(const ConfigFlags& flags) {
  const auto cfg = training_config(flags);
  const auto out = rgrank::run_train(cfg);
  for (const auto& e : out.logs) std::cout << rgrank::format_epoch_log(e) << '\n';
  std::cout << "best_epoch=" << out.best_epoch << " best_value=" << out.best_value
            << " stopped_early=" << (out.stopped_early ? "true" : "false")
            << '\n';
  return kExitOk;
}

int cmd_eval(const ConfigFlags& flags) {
  const auto cfg = flags.resolve();
  if (cfg.get("snapshot").empty()) throw UsageError("eval needs --snapshot");
  if (cfg.get("test").empty()) throw UsageError("eval needs --test");
  if (cfg.get("train").empty()) throw UsageError("eval needs --train");
  const auto heldout = rgrank::read_set_file(cfg.get("test"));
  const auto train = rgrank::read_set_file(cfg.get("train"));
  const auto result = rgrank::run_eval(cfg.get("snapshot"), heldout, train,
                                       static_cast<int>(cfg.get_int("cutoff")));
  std::cout << rgrank::format_report(result)
            << " empty=" << (result.empty() ? "true" : "false") << '\n';
  return kExitOk;
}

int cmd_grid(const ConfigFlags& flags) {
  const auto cfg = training_config(flags);
  if (cfg.get("valid").empty()) throw UsageError("grid needs --valid");
  const auto data = rgrank::load_train_data(cfg);
  for (const auto& p : rgrank::run_grid(cfg, data)) {
    std::cout << p.param << '=' << p.value << " best=" << p.best_metric
              << " best_epoch=" << p.best_epoch << " epochs=" << p.epochs_run;
    if (!p.error.empty()) std::cout << " error=\"" << p.error << '"';
    std::cout << '\n';
  }
  return kExitOk;
}

int cmd_verify(const std::vector<std::string>& suites, const std::string& fault,
               std::uint64_t seed) {
  rgrank::VerifyOptions opt;
  opt.fault = fault;
  opt.seed = seed;
  std::vector<rgrank::SuiteResult> results;
  try {
    results = rgrank::run_verify(suites, opt);
  } catch (const rgrank::InvalidArgument& e) {
    throw UsageError(e.what());
  }
  std::cout << rgrank::format_verify_report(results);
  return rgrank::all_passed(results) ? kExitOk : kExitVerify;
}

int cmd_curve(const std::vector<std::string>& runs, const std::string& metric,
              const std::string& out_path) {
  if (runs.empty()) throw UsageError("curve needs at least one --run");
  std::vector<rgrank::CurveRun> curve;
  for (const auto& spec : runs) {
    const auto eq = spec.find('=');
    rgrank::CurveRun run;
    const std::string path = eq == std::string::npos ? spec : spec.substr(eq + 1);
    run.label = eq == std::string::npos
                    ? std::filesystem::path(spec).stem().string()
                    : spec.substr(0, eq);
    run.logs = rgrank::read_epoch_logs_file(path);
    curve.push_back(std::move(run));
  }
  if (out_path.empty() || out_path == "-") {
    rgrank::emit_convergence_curve(std::cout, curve, metric);
  } else {
    std::ofstream out(out_path);
    if (!out) throw rgrank::Error("cannot write '" + out_path + "'");
    rgrank::emit_convergence_curve(out, curve, metric);
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"rgrank: ranking-generalized factorization toolkit"};
  app.require_subcommand(1);

  ConfigFlags prep_flags, train_flags, eval_flags, grid_flags;
  auto* prep = app.add_subcommand("prep", "ingest raw data, k-core filter, split");
  prep_flags.attach(prep);
  auto* train = app.add_subcommand("train", "train a model with early stopping");
  train_flags.attach(train);
  auto* eval = app.add_subcommand("eval", "evaluate a persisted snapshot");
  eval_flags.attach(eval);
  auto* grid = app.add_subcommand("grid", "grid-search one hyperparameter");
  grid_flags.attach(grid);

  std::vector<std::string> suites;
  std::string fault;
  std::uint64_t verify_seed = 1;
  auto* verify = app.add_subcommand("verify", "run invariant suites");
  verify->add_option("--suite", suites, "suite to run (repeatable; default all)")
      ->check(CLI::IsMember(rgrank::verify_suite_names()));
  verify->add_option("--fault", fault, "inject a fault, e.g. gradient:rg2");
  verify->add_option("--seed", verify_seed, "random seed of the suites");

  std::vector<std::string> runs;
  std::string metric = "ndcg";
  std::string curve_out;
  auto* curve = app.add_subcommand("curve", "merge epoch logs into a curve file");
  curve->add_option("--run", runs, "label=epoch-log path (repeatable)");
  curve->add_option("--metric", metric, "ndcg, mrr, map or train_loss")
      ->check(CLI::IsMember({"ndcg", "mrr", "map", "train_loss"}));
  curve->add_option("--out", curve_out, "output path ('-' for stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (prep->parsed()) return cmd_prep(prep_flags);
    if (train->parsed()) return cmd_train(train_flags);
    if (eval->parsed()) return cmd_eval(eval_flags);
    if (grid->parsed()) return cmd_grid(grid_flags);
    if (verify->parsed()) return cmd_verify(suites, fault, verify_seed);
    if (curve->parsed()) return cmd_curve(runs, metric, curve_out);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const rgrank::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}
