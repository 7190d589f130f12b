// Copyright 2026 the tcmdp authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <CLI11.hpp>

#include "tcmdp/experiment.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Exact dynamic programming for time-constrained robust MDPs"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = "out";
  int workers = 1;
  bool verbose = false;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "experiment config file")
        ->required();
    cmd->add_option("--out", out_dir, "output directory");
    cmd->add_option("--workers", workers, "worker thread cap")
        ->check(CLI::PositiveNumber);
    cmd->add_flag("--verbose", verbose, "console progress output");
  };

  CLI::App* solve = app.add_subcommand(
      "solve", "fixed point and greedy policies of the configured operator");
  CLI::App* train = app.add_subcommand(
      "train", "alternating best-response training per observation class");
  CLI::App* eval = app.add_subcommand(
      "eval", "worst-case, static-grid and schedule evaluation protocols");
  CLI::App* check =
      app.add_subcommand("check", "operator and smoothness property sweeps");
  for (CLI::App* cmd : {solve, train, eval, check}) add_common(cmd);

  CLI11_PARSE(app, argc, argv);

  tcmdp::ExperimentConfig cfg;
  try {
    cfg = tcmdp::ExperimentConfig::load_file(config_path);
  } catch (const std::exception& err) {
    std::cerr << tcmdp::Json{{"error", err.what()}}.dump() << "\n";
    return 1;
  }

  std::filesystem::path out(out_dir);
  std::filesystem::create_directories(out);
  if (solve->parsed()) return tcmdp::cmd_solve(cfg, out, workers, verbose);
  if (train->parsed()) return tcmdp::cmd_train(cfg, out, workers, verbose);
  if (eval->parsed()) return tcmdp::cmd_eval(cfg, out, workers, verbose);
  return tcmdp::cmd_check(cfg, out, workers, verbose);
}
