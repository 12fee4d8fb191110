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

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "handoff/backend.hpp"
#include "handoff/protocol.hpp"
#include "handoff/tags.hpp"

namespace handoff {

enum class PolicyKind { learned_tags, random_offload, never_offload };

struct OffloadPolicy {
  PolicyKind kind = PolicyKind::learned_tags;
  double probability = 0.0;  // random_offload
  std::uint64_t seed = 0;    // random_offload
  std::size_t mean_span_tokens = 200;

  /// Parses `learned-tags`, `never-offload` or
  /// `random-offload:p=0.05,seed=7[,span=200]` (positional `random-offload:0.05:7`
  /// is accepted too). A random policy without a seed is rejected.
  static OffloadPolicy parse(std::string_view text);
  std::string to_string() const;
};

enum class ExecutionMode { sequential, overlapped };
std::string_view to_string(ExecutionMode mode) noexcept;

struct RunConfig {
  std::size_t chunk_size = 64;
  std::size_t max_offload_tokens_per_span = 1024;
  std::size_t max_total_tokens = 4096;
  OffloadPolicy policy;
  std::size_t probe_tokens = 1;
  std::size_t max_probe_tokens = 0;  // 0: length of the close tag in characters
  bool stop_on_answer_close = true;
  double temperature = 0.0;
  ExecutionMode mode = ExecutionMode::sequential;
  std::size_t prefill_queue_depth = 8;
  ControlTags tags;

  void validate() const;  // throws ConfigError
  std::size_t probe_ceiling() const noexcept {
    return max_probe_tokens > 0 ? max_probe_tokens : tags.close_tag.size();
  }
};

struct PhaseTiming {
  std::string phase;  // small-decode, large-decode, streaming-prefill, controlling-prefill, probe
  std::size_t tokens = 0;
  double seconds = 0.0;
};

enum class HandoffDirection { to_large, to_small };

struct HandoffRecord {
  std::size_t offset = 0;  // stripped-text offset
  HandoffDirection direction = HandoffDirection::to_large;
  std::string reason;  // emitted | probe | large-emitted | random-policy | forced-budget | forced-large-eos | forced-max-tokens
  bool forced = false;
  std::size_t overshoot_tokens = 0;  // large tokens decoded after the last negative check
};

enum class Owner { small, large, controller };
std::string_view to_string(Owner owner) noexcept;

/// Contiguous piece of raw trace text and who produced it. Controller pieces
/// are tags inserted by the coordinator (forced takeback, random policy).
struct ProvenanceSegment {
  Owner owner = Owner::small;
  std::size_t raw_begin = 0;
  std::size_t raw_end = 0;
  std::size_t tokens = 0;
};

struct GenerationResult {
  GenerationTrace trace;
  std::vector<PhaseTiming> timing;
  std::vector<HandoffRecord> handoffs;
  std::vector<ProvenanceSegment> provenance;
  std::string termination;  // answer-close | end-of-sequence | max-total-tokens | error
  std::optional<std::string> error;
  std::vector<std::string> warnings;

  double total_seconds() const noexcept;
};

/// Drives one cooperative generation. Both sessions must be fresh. Backend and
/// protocol failures do not throw; they come back as `error` together with the
/// partial trace and the full handoff log.
GenerationResult run_cooperative(std::string_view question, BackendSession& small,
                                 BackendSession& large, const RunConfig& config);

/// Content-blind offload plan over `total_token_budget` token positions: a
/// two-state Markov chain started in its stationary distribution, so every
/// position is offloaded with probability exactly `p` and offloaded runs have
/// mean length `mean_span_tokens`.
std::vector<OffloadSpan> random_offload_policy(std::size_t total_token_budget,
                                               double p, std::uint64_t seed,
                                               std::size_t mean_span_tokens);

enum class ControlAction { continue_large, take_back_control };

struct ControlDecision {
  ControlAction action = ControlAction::continue_large;
  std::string probe;
  bool partial_match = false;  // probe is a proper prefix of the close tag
  bool degraded = false;       // probe unsupported; single-token check used
  double prefill_seconds = 0.0;
  std::size_t prefill_tokens = 0;
};

/// Prefills `large_chunk` into the small session, then probes the small
/// model's greedy continuation for the close tag.
ControlDecision controlling_prefill_cycle(BackendSession& small,
                                          std::string_view large_chunk,
                                          const ControlTags& tags,
                                          std::size_t probe_tokens);

}  // namespace handoff
