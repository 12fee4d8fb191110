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
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "handoff/backend.hpp"
#include "handoff/protocol.hpp"
#include "handoff/tags.hpp"

namespace handoff {

enum class Normalization { none, whitespace_fold };
std::string_view to_string(Normalization n) noexcept;
Normalization normalization_from_string(std::string_view name);

struct MatchConfig {
  double similarity_threshold = 0.85;
  std::size_t window_stride = 1;
  Normalization normalization = Normalization::none;
  double max_total_fraction = 0.25;

  void validate() const;  // throws ConfigError
};

struct FuzzyMatch {
  OffloadSpan span;  // offsets into the original trace
  double similarity = 0.0;
  bool operator==(const FuzzyMatch&) const = default;
};

/// Levenshtein distance with unit costs.
std::size_t edit_distance(std::string_view a, std::string_view b);

/// Best window of `trace` for `snippet`: window lengths range over
/// [ceil(0.8 m), floor(1.2 m)] for a snippet of m characters and similarity is
/// 1 - distance / max(m, window). Highest similarity wins, then the earliest
/// start, then the shorter window. Empty when the best similarity is below the
/// threshold. Throws DomainError for an empty snippet.
std::optional<FuzzyMatch> fuzzy_match(std::string_view trace, std::string_view snippet,
                                      const MatchConfig& config = {});

/// Sorted union of the inputs; overlapping and touching spans are joined.
std::vector<OffloadSpan> merge_spans(std::vector<OffloadSpan> spans);

/// Inserts open/close tags around each span. Spans must be sorted, disjoint,
/// non-empty and inside the trace; otherwise DomainError.
std::string wrap_spans(std::string_view trace, std::span<const OffloadSpan> spans,
                       const ControlTags& tags = {});

struct SnippetDelimiters {
  std::string open = "<snippet>";
  std::string close = "</snippet>";
};

/// Snippets between delimiter pairs, trimmed, in order. A response without
/// delimiters yields an empty list; unpaired or nested delimiters throw
/// AnnotationFormatError carrying the raw response.
std::vector<std::string> parse_snippets(std::string_view response,
                                        const SnippetDelimiters& delimiters = {});

/// Placeholder replaced by the trace in annotator prompt templates.
inline constexpr std::string_view kTracePlaceholder = "{trace}";

std::string render_prompt(std::string_view prompt_template, std::string_view trace);

/// Sends the rendered prompt to a fresh annotator session and parses the reply.
std::vector<std::string> request_snippets(std::string_view trace, BackendSession& annotator,
                                          std::string_view prompt_template,
                                          std::size_t max_tokens = 4096,
                                          const SnippetDelimiters& delimiters = {});

enum class AnnotationStatus { ok, partial, rejected };
std::string_view to_string(AnnotationStatus status) noexcept;
AnnotationStatus annotation_status_from_string(std::string_view name);

struct SnippetMatch {
  std::size_t snippet_index = 0;
  std::optional<FuzzyMatch> match;
  bool retained = false;  // false when unmatched or dropped for the budget
};

struct AnnotationRecord {
  std::string question;
  std::string trace;
  std::vector<std::string> snippets;
  std::vector<SnippetMatch> matches;
  std::vector<OffloadSpan> matched_spans;  // merged, over the trace
  std::string annotated_text;
  double offload_fraction = 0.0;
  AnnotationStatus status = AnnotationStatus::ok;
  std::size_t dropped_for_budget = 0;
};

/// Whitespace-word fraction of `text` inside `spans`.
double word_fraction(std::string_view text, std::span<const OffloadSpan> spans);

/// Match, merge, enforce the budget, wrap. Status is ok when every snippet
/// matched and nothing was dropped, rejected when snippets exist but none
/// matched, and partial otherwise (including an empty snippet list).
AnnotationRecord annotate_record(std::string question, std::string trace,
                                 std::vector<std::string> snippets,
                                 const MatchConfig& config = {},
                                 const ControlTags& tags = {});

struct Histogram {
  std::vector<double> edges;  // bins + 1 edges
  std::vector<double> mass;   // sums to 1 unless empty
  std::size_t samples = 0;

  std::string to_csv() const;  // bin_start,bin_end,mass
};

/// Fixed-width histogram over [0, 1]. Values are nudged by a tiny epsilon so
/// that decimal bin edges land in the upper bin; 1.0 goes to the last bin.
Histogram unit_histogram(std::span<const double> values, std::size_t bins = 20);

struct StatsSummary {
  Histogram position_histogram;
  Histogram offload_fraction_histogram;
  std::size_t ok = 0;
  std::size_t partial = 0;
  std::size_t rejected = 0;
  bool empty = true;
};

/// Span midpoints (relative to trace length) and offload fractions of ok and
/// partial records.
StatsSummary dataset_stats(std::span<const AnnotationRecord> records, std::size_t bins = 20);

}  // namespace handoff
