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

#include "handoff/reward.hpp"

#include <algorithm>

#include "handoff/errors.hpp"
#include "handoff/protocol.hpp"
#include "handoff/text.hpp"

namespace handoff {

void RewardConfig::validate() const {
  tags.validate();
  if (!(coverage_peak > 0.0 && coverage_peak < 1.0)) {
    throw ConfigError("coverage_peak must lie strictly between 0 and 1");
  }
  bool any = false;
  for (double w : weights) {
    if (!(w >= 0.0)) throw ConfigError("reward weights must be nonnegative");
    any = any || w > 0.0;
  }
  if (!any) throw ConfigError("reward weights must not all be zero");
  if (!(mismatch_penalty >= 0.0)) throw ConfigError("mismatch_penalty must be nonnegative");
  for (const auto& t : essential_tags) {
    if (t.empty()) throw ConfigError("essential tags must be non-empty");
  }
}

std::vector<std::string> RewardConfig::resolved_essential_tags() const {
  if (!essential_tags.empty()) return essential_tags;
  return {tags.think_open, tags.think_close, tags.answer_open, tags.answer_close};
}

namespace {

constexpr std::string_view kBoxed = "\\boxed{";

// Content of the brace group opened just before `from`, or npos if unclosed.
std::size_t matching_brace(std::string_view text, std::size_t from) {
  int depth = 1;
  for (std::size_t i = from; i < text.size(); ++i) {
    if (text[i] == '{') {
      ++depth;
    } else if (text[i] == '}' && --depth == 0) {
      return i;
    }
  }
  return std::string_view::npos;
}

}  // namespace

std::string normalize_answer(std::string_view answer) {
  std::string s = collapse_whitespace(answer);
  if (s.starts_with(kBoxed)) {
    const std::size_t close = matching_brace(s, kBoxed.size());
    if (close == s.size() - 1) s = collapse_whitespace(s.substr(kBoxed.size(), close - kBoxed.size()));
  }
  return s;
}

std::string extract_answer(std::string_view completion, const ControlTags& tags) {
  const std::size_t open = completion.rfind(tags.answer_open);
  if (open != std::string_view::npos) {
    const std::size_t body = open + tags.answer_open.size();
    const std::size_t close = completion.find(tags.answer_close, body);
    if (close != std::string_view::npos) {
      return std::string(completion.substr(body, close - body));
    }
  }
  const std::size_t boxed = completion.rfind(kBoxed);
  if (boxed != std::string_view::npos) {
    const std::size_t body = boxed + kBoxed.size();
    const std::size_t close = matching_brace(completion, body);
    if (close != std::string_view::npos) {
      return std::string(completion.substr(body, close - body));
    }
  }
  return {};
}

double accuracy_reward(std::string_view completion, std::string_view gold,
                       const ControlTags& tags) {
  const std::string answer = normalize_answer(extract_answer(completion, tags));
  if (answer.empty()) return 0.0;
  return answer == normalize_answer(gold) ? 1.0 : 0.0;
}

double format_reward(std::string_view completion, const ControlTags& tags) {
  const TraceValidation v = validate_trace(completion, tags);
  const TagPairing pairing = pair_offload_tags(completion, tags);
  const bool has_offload_tags = pairing.open_count + pairing.close_count > 0;
  const bool nesting = v.offload_well_formed() && (has_offload_tags || v.scaffold_ok);
  return (v.scaffold_ok ? 1.0 : 0.0) + (nesting ? 1.0 : 0.0);
}

double coverage_reward(double c, double peak) {
  if (!(c >= 0.0 && c <= 1.0)) throw DomainError("coverage must lie in [0, 1]");
  if (!(peak > 0.0 && peak < 1.0)) throw DomainError("coverage peak must lie in (0, 1)");
  if (c <= peak) return c / peak;
  return 1.0 - 2.0 * (c - peak) / (1.0 - peak);
}

double completion_coverage(std::string_view completion, const ControlTags& tags) {
  const TagPairing pairing = pair_offload_tags(completion, tags);
  const std::string stripped = strip_offload_tags(completion, tags);
  const WordSplit words = split_words_by_spans(stripped, pairing.regions);
  if (words.total() == 0) return 0.0;
  return static_cast<double>(words.inside) / static_cast<double>(words.total());
}

namespace {

struct TagCountParts {
  double value = 0.0;
  double coverage = 0.0;
  double coverage_term = 0.0;
};

TagCountParts tag_count_parts(std::string_view completion, const RewardConfig& config) {
  TagCountParts parts;
  const auto essential = config.resolved_essential_tags();
  const double credit = 1.0 / static_cast<double>(essential.size());
  for (const auto& tag : essential) {
    if (completion.find(tag) != std::string_view::npos) parts.value += credit;
  }
  parts.coverage = completion_coverage(completion, config.tags);
  parts.coverage_term = coverage_reward(parts.coverage, config.coverage_peak);
  parts.value += parts.coverage_term;
  if (pair_offload_tags(completion, config.tags).unpaired_tags > 0) {
    parts.value -= config.mismatch_penalty;
  }
  return parts;
}

}  // namespace

double tag_count_reward(std::string_view completion, const RewardConfig& config) {
  config.validate();
  return tag_count_parts(completion, config).value;
}

RewardBreakdown total_reward(std::string_view completion, std::string_view gold,
                             const RewardConfig& config) {
  config.validate();
  RewardBreakdown r;
  r.accuracy = accuracy_reward(completion, gold, config.tags);
  r.format = format_reward(completion, config.tags);
  const TagCountParts parts = tag_count_parts(completion, config);
  r.tag_count = parts.value;
  r.coverage = parts.coverage;
  r.coverage_term = parts.coverage_term;
  r.total = config.weights[0] * r.accuracy + config.weights[1] * r.format +
            config.weights[2] * r.tag_count;
  return r;
}

}  // namespace handoff
