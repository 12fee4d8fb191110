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

#include <algorithm>
#include <random>

#include "handoff/errors.hpp"
#include "handoff/orchestrator.hpp"

namespace handoff {

std::vector<OffloadSpan> random_offload_policy(std::size_t total_token_budget,
                                               double p, std::uint64_t seed,
                                               std::size_t mean_span_tokens) {
  if (!(p >= 0.0 && p <= 1.0)) throw DomainError("offload probability must lie in [0, 1]");
  if (mean_span_tokens < 1) throw DomainError("mean span length must be at least 1 token");

  std::vector<OffloadSpan> plan;
  if (total_token_budget == 0 || p == 0.0) return plan;
  if (p == 1.0) {
    plan.push_back({0, total_token_budget, SpanOrigin::random_policy, total_token_budget});
    return plan;
  }

  // Per-token exit probabilities. Stationary offload mass b / (a + b) = p.
  double leave_offload = 1.0 / static_cast<double>(mean_span_tokens);
  double enter_offload = leave_offload * p / (1.0 - p);
  if (enter_offload > 1.0) {
    enter_offload = 1.0;
    leave_offload = (1.0 - p) / p;
  }

  std::mt19937_64 rng(seed);
  std::bernoulli_distribution start_offloaded(p);
  std::geometric_distribution<std::size_t> offload_run(leave_offload);
  std::geometric_distribution<std::size_t> gap_run(enter_offload);

  bool offloaded = start_offloaded(rng);
  std::size_t position = 0;
  while (position < total_token_budget) {
    const std::size_t run = 1 + (offloaded ? offload_run(rng) : gap_run(rng));
    const std::size_t end = std::min(total_token_budget, position + run);
    if (offloaded) plan.push_back({position, end, SpanOrigin::random_policy, end - position});
    position = end;
    offloaded = !offloaded;
  }
  return plan;
}

}  // namespace handoff
