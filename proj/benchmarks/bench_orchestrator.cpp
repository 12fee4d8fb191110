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

#include <benchmark/benchmark.h>

#include <string>

#include "handoff/orchestrator.hpp"
#include "handoff/scripted_backend.hpp"

namespace {

std::string numbered(const std::string& prefix, int count) {
  std::string out;
  for (int i = 1; i <= count; ++i) out += " " + prefix + std::to_string(i);
  return out;
}

handoff::ScriptedBehavior behavior(std::string name, std::string emission) {
  handoff::ScriptedBehavior b;
  b.name = std::move(name);
  b.entries = {{handoff::ScriptTrigger::on_turn(1), std::move(emission), 0.0}};
  return b;
}

}  // namespace

static void BM_ScriptedRandomPolicyRun(benchmark::State& state) {
  const auto small = behavior("small", "<think>" + numbered("s", 6000));
  const auto large = behavior("large", numbered("L", 6000));
  handoff::RunConfig config;
  config.max_total_tokens = static_cast<std::size_t>(state.range(0));
  config.chunk_size = 16;
  config.policy = handoff::OffloadPolicy::parse("random-offload:p=0.1,seed=3,span=50");
  handoff::ScriptedBackend small_backend(small);
  handoff::ScriptedBackend large_backend(large);
  for (auto _ : state) {
    auto ss = small_backend.open_session(handoff::ModelRole::small);
    auto ls = large_backend.open_session(handoff::ModelRole::large);
    benchmark::DoNotOptimize(handoff::run_cooperative("Question. ", ss, ls, config));
  }
}
BENCHMARK(BM_ScriptedRandomPolicyRun)->Arg(1000)->Arg(4000);

static void BM_ScriptedLearnedTagsRun(benchmark::State& state) {
  handoff::ScriptedBehavior small = behavior("small", "<think>" + numbered("s", 500) + " <bigmodel>");
  small.entries.push_back({handoff::ScriptTrigger::on_context_containing(" L200 </bigmodel>"),
                           numbered("t", 500) + " </think> <answer> 1 </answer>", 0.0});
  const auto large = behavior("large", numbered("L", 200) + " </bigmodel>");
  handoff::RunConfig config;
  config.chunk_size = static_cast<std::size_t>(state.range(0));
  handoff::ScriptedBackend small_backend(small);
  handoff::ScriptedBackend large_backend(large);
  for (auto _ : state) {
    auto ss = small_backend.open_session(handoff::ModelRole::small);
    auto ls = large_backend.open_session(handoff::ModelRole::large);
    benchmark::DoNotOptimize(handoff::run_cooperative("Question. ", ss, ls, config));
  }
}
BENCHMARK(BM_ScriptedLearnedTagsRun)->Arg(8)->Arg(64);

BENCHMARK_MAIN();
