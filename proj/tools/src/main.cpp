/* Copyright 2026 The Handoff Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include <iostream>

#include "CLI11.hpp"
#include "commands.hpp"
#include "handoff/errors.hpp"

namespace fs = std::filesystem;
using namespace handoff::cli;

int main(int argc, char** argv) {
  CLI::App app{"Cooperative small/large model decoding: runs, annotation, rewards, simulation"};
  app.require_subcommand(1);

  std::string config_path;
  Overrides overrides;
  std::string out, policy, mode;
  std::uint64_t seed = 0;
  std::size_t workers = 0;

  auto common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "Tool configuration (JSON)")->check(CLI::ExistingFile);
    cmd->add_option("--out", out, "Output directory");
    cmd->add_option("--seed", seed, "Base seed for stochastic policies");
    cmd->add_option("--policy", policy, "learned-tags | never-offload | random-offload:p=P,seed=S");
    cmd->add_option("--mode", mode, "pipelined | non-pipelined")
        ->check(CLI::IsMember({"pipelined", "non-pipelined", "overlapped", "sequential"}));
    cmd->add_option("--workers", workers, "Parallel workers")->check(CLI::PositiveNumber);
  };

  std::string questions, question;
  auto* run = app.add_subcommand("run", "Run cooperative generations");
  common(run);
  run->add_option("--questions", questions, "JSON-Lines file of {\"question\"}")
      ->check(CLI::ExistingFile);
  run->add_option("--question", question, "Single inline question");

  std::string corpus;
  auto* annotate = app.add_subcommand("annotate", "Annotate a trace corpus with offload spans");
  common(annotate);
  annotate->add_option("corpus", corpus, "JSON-Lines corpus")->required()->check(CLI::ExistingFile);

  std::string completions;
  auto* reward = app.add_subcommand("reward", "Score completions");
  common(reward);
  reward->add_option("completions", completions, "JSON-Lines of {completion, gold}")
      ->required()
      ->check(CLI::ExistingFile);

  std::string scenarios;
  auto* simulate = app.add_subcommand("simulate", "Simulate cooperative latency");
  common(simulate);
  simulate->add_option("scenarios", scenarios, "Scenario file (JSON)")
      ->required()
      ->check(CLI::ExistingFile);

  std::string runs;
  std::size_t bins = 20;
  auto* plot = app.add_subcommand("trace-plotdata", "Per-run offload raster CSV");
  common(plot);
  plot->add_option("runs", runs, "runs.jsonl from the run command")
      ->required()
      ->check(CLI::ExistingFile);
  plot->add_option("--bins", bins, "Position bins per run")->check(CLI::PositiveNumber);

  CLI11_PARSE(app, argc, argv);

  auto* active = app.get_subcommands().front();
  if (active->count("--out")) overrides.out = fs::path(out);
  if (active->count("--seed")) overrides.seed = seed;
  if (active->count("--policy")) overrides.policy = policy;
  if (active->count("--mode")) overrides.mode = mode;
  if (active->count("--workers")) overrides.workers = workers;

  Streams io{std::cout, std::cerr};
  try {
    const ToolConfig config = config_path.empty() ? ToolConfig{} : load_tool_config(config_path);
    if (active == run) {
      if (questions.empty() && question.empty()) {
        std::cerr << "run: give --questions FILE or --question TEXT\n";
        return 2;
      }
      return cmd_run(config, questions.empty() ? std::nullopt : std::optional<fs::path>(questions),
                     question.empty() ? std::nullopt : std::optional<std::string>(question),
                     overrides, io);
    }
    if (active == annotate) return cmd_annotate(config, corpus, overrides, io);
    if (active == reward) return cmd_reward(config, completions, overrides, io);
    if (active == simulate) return cmd_simulate(config, scenarios, overrides, io);
    return cmd_trace_plotdata(config, runs, bins, overrides, io);
  } catch (const handoff::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
