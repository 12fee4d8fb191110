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

#include "handoff/perf_sim.hpp"

namespace {

const handoff::ThroughputProfile kSmall{"small", handoff::RateCurve(30000), handoff::RateCurve(150)};
const handoff::ThroughputProfile kLarge{"large", handoff::RateCurve(2500), handoff::RateCurve(15)};

handoff::ThroughputProfile sloped(std::string name, double prefill, double decode) {
  return {std::move(name),
          handoff::RateCurve({{0.0, prefill}, {32000.0, prefill * 0.6}}),
          handoff::RateCurve({{0.0, decode}, {32000.0, decode * 0.8}})};
}

}  // namespace

static void BM_SimulatePipelined(benchmark::State& state) {
  const auto trace = handoff::segmented_trace(static_cast<std::size_t>(state.range(0)), 0.05,
                                              static_cast<std::size_t>(state.range(1)));
  for (auto _ : state) benchmark::DoNotOptimize(handoff::simulate(trace, kSmall, kLarge));
}
BENCHMARK(BM_SimulatePipelined)->Args({10000, 5})->Args({102450, 50});

static void BM_SimulateNonPipelinedSloped(benchmark::State& state) {
  const auto small = sloped("small", 30000, 150);
  const auto large = sloped("large", 2500, 15);
  const auto trace = handoff::segmented_trace(32000, 0.05, static_cast<std::size_t>(state.range(0)));
  handoff::SimConfig config;
  config.mode = handoff::SimMode::non_pipelined;
  for (auto _ : state) benchmark::DoNotOptimize(handoff::simulate(trace, small, large, config));
}
BENCHMARK(BM_SimulateNonPipelinedSloped)->Arg(5)->Arg(50);

BENCHMARK_MAIN();
