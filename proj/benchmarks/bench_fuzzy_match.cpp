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

#include "handoff/annotate.hpp"

namespace {

std::string random_text(std::mt19937& rng, std::size_t n) {
  static const std::string alphabet = "abcdefghij klmnop";
  std::string s;
  for (std::size_t i = 0; i < n; ++i) s += alphabet[rng() % alphabet.size()];
  return s;
}

}  // namespace

static void BM_FuzzyMatch(benchmark::State& state) {
  std::mt19937 rng(8);
  const std::string trace = random_text(rng, static_cast<std::size_t>(state.range(0)));
  const auto len = static_cast<std::size_t>(state.range(1));
  std::string snippet = trace.substr(trace.size() / 3, len);
  for (std::size_t i = 0; i < len / 20; ++i) snippet[rng() % len] = 'z';
  for (auto _ : state) benchmark::DoNotOptimize(handoff::fuzzy_match(trace, snippet));
}
BENCHMARK(BM_FuzzyMatch)->Args({2000, 40})->Args({2000, 120})->Args({8000, 120});

static void BM_EditDistance(benchmark::State& state) {
  std::mt19937 rng(9);
  const auto n = static_cast<std::size_t>(state.range(0));
  const std::string a = random_text(rng, n);
  const std::string b = random_text(rng, n);
  for (auto _ : state) benchmark::DoNotOptimize(handoff::edit_distance(a, b));
}
BENCHMARK(BM_EditDistance)->Arg(64)->Arg(512);

static void BM_AnnotateRecord(benchmark::State& state) {
  std::mt19937 rng(10);
  const std::string trace = random_text(rng, 4000);
  const std::vector<std::string> snippets = {trace.substr(200, 80), trace.substr(1500, 120),
                                             trace.substr(3000, 60)};
  for (auto _ : state) benchmark::DoNotOptimize(handoff::annotate_record("q", trace, snippets));
}
BENCHMARK(BM_AnnotateRecord);

BENCHMARK_MAIN();
