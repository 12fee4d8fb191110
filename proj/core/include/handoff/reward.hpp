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

#include <array>
#include <string>
#include <string_view>
#include <vector>

#include "handoff/tags.hpp"

namespace handoff {

struct RewardConfig {
  double coverage_peak = 0.4;
  std::array<double, 3> weights{1.0, 1.0, 1.0};  // accuracy, format, tag count
  std::vector<std::string> essential_tags;  // empty: think and answer open/close
  double mismatch_penalty = 1.0;
  ControlTags tags;

  void validate() const;  // throws ConfigError
  std::vector<std::string> resolved_essential_tags() const;
};

struct RewardBreakdown {
  double accuracy = 0.0;
  double format = 0.0;
  double tag_count = 0.0;
  double coverage_term = 0.0;
  double coverage = 0.0;
  double total = 0.0;

  bool operator==(const RewardBreakdown&) const = default;
};

/// Trims, collapses whitespace runs and removes one surrounding \boxed{...}.
std::string normalize_answer(std::string_view answer);

/// Content of the last answer block, or of the last \boxed{...} when the
/// completion has no answer block. Empty when neither exists.
std::string extract_answer(std::string_view completion, const ControlTags& tags = {});

double accuracy_reward(std::string_view completion, std::string_view gold,
                       const ControlTags& tags = {});

/// +1 for a think block followed by an answer block, +1 more when the offload
/// tags are balanced and non-nested. A completion without offload tags earns
/// the second point only when its scaffold is correct.
double format_reward(std::string_view completion, const ControlTags& tags = {});

/// Piecewise-linear: rises from 0 at c=0 to 1 at the peak, then falls to -1
/// at c=1. Throws DomainError for c outside [0, 1].
double coverage_reward(double c, double peak = 0.4);

/// Word fraction of the completion inside paired offload regions.
double completion_coverage(std::string_view completion, const ControlTags& tags = {});

double tag_count_reward(std::string_view completion, const RewardConfig& config = {});

RewardBreakdown total_reward(std::string_view completion, std::string_view gold,
                             const RewardConfig& config = {});

}  // namespace handoff
