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

#include <random>
#include <string>

#include "handoff/protocol.hpp"

namespace {

std::string tagged_text(std::size_t words) {
  std::mt19937 rng(3);
  std::string text = "<think>";
  bool open = false;
  for (std::size_t i = 0; i < words; ++i) {
    text += " word" + std::to_string(i % 97);
    if (rng() % 50 == 0) {
      text += open ? " </bigmodel>" : " <bigmodel>";
      open = !open;
    }
  }
  return text + (open ? " </bigmodel>" : "") + " </think> <answer> 1 </answer>";
}

}  // namespace

static void BM_ScanWhole(benchmark::State& state) {
  const std::string text = tagged_text(static_cast<std::size_t>(state.range(0)));
  const handoff::ControlTags tags;
  for (auto _ : state) benchmark::DoNotOptimize(handoff::scan_text(text, tags));
  state.SetBytesProcessed(static_cast<int64_t>(state.iterations() * text.size()));
}
BENCHMARK(BM_ScanWhole)->Arg(1000)->Arg(10000);

static void BM_ScanChunked(benchmark::State& state) {
  const std::string text = tagged_text(10000);
  const auto chunk = static_cast<std::size_t>(state.range(0));
  const handoff::ControlTags tags;
  for (auto _ : state) {
    handoff::ScannerState scanner;
    std::size_t events = 0;
    for (std::size_t at = 0; at < text.size(); at += chunk) {
      auto r = handoff::scan_chunk(scanner, std::string_view(text).substr(at, chunk), tags);
      events += r.events.size();
      scanner = r.state;
    }
    benchmark::DoNotOptimize(events);
  }
  state.SetBytesProcessed(static_cast<int64_t>(state.iterations() * text.size()));
}
BENCHMARK(BM_ScanChunked)->Arg(4)->Arg(64)->Arg(1024);

static void BM_ValidateTrace(benchmark::State& state) {
  const std::string text = tagged_text(10000);
  const handoff::ControlTags tags;
  for (auto _ : state) benchmark::DoNotOptimize(handoff::validate_trace(text, tags));
}
BENCHMARK(BM_ValidateTrace);

BENCHMARK_MAIN();
