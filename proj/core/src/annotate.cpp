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

#include "handoff/annotate.hpp"

#include <algorithm>

#include "handoff/errors.hpp"
#include "handoff/text.hpp"

namespace handoff {

std::vector<OffloadSpan> merge_spans(std::vector<OffloadSpan> spans) {
  std::sort(spans.begin(), spans.end(), [](const OffloadSpan& a, const OffloadSpan& b) {
    return a.start != b.start ? a.start < b.start : a.end < b.end;
  });
  std::vector<OffloadSpan> merged;
  for (const auto& s : spans) {
    if (!merged.empty() && s.start <= merged.back().end) {
      auto& last = merged.back();
      if (s.end > last.end) last.end = s.end;
    } else {
      merged.push_back(s);
    }
  }
  return merged;
}

std::string wrap_spans(std::string_view trace, std::span<const OffloadSpan> spans,
                       const ControlTags& tags) {
  if (!spans_well_formed(spans, trace.size())) {
    throw DomainError("spans must be sorted, disjoint, non-empty and inside the trace");
  }
  std::string out;
  out.reserve(trace.size() + spans.size() * (tags.open_tag.size() + tags.close_tag.size()));
  std::size_t at = 0;
  for (const auto& s : spans) {
    out.append(trace.substr(at, s.start - at));
    out.append(tags.open_tag);
    out.append(trace.substr(s.start, s.length()));
    out.append(tags.close_tag);
    at = s.end;
  }
  out.append(trace.substr(at));
  return out;
}

std::vector<std::string> parse_snippets(std::string_view response,
                                        const SnippetDelimiters& delimiters) {
  std::vector<std::string> snippets;
  std::size_t at = 0;
  while (true) {
    const std::size_t open = response.find(delimiters.open, at);
    const std::size_t close = response.find(delimiters.close, at);
    if (open == std::string_view::npos && close == std::string_view::npos) break;
    if (open == std::string_view::npos || close < open) {
      throw AnnotationFormatError("closing snippet delimiter without an opening one",
                                  std::string(response));
    }
    const std::size_t body = open + delimiters.open.size();
    const std::size_t end = response.find(delimiters.close, body);
    if (end == std::string_view::npos) {
      throw AnnotationFormatError("unterminated snippet", std::string(response));
    }
    const std::size_t nested = response.find(delimiters.open, body);
    if (nested != std::string_view::npos && nested < end) {
      throw AnnotationFormatError("nested snippet delimiters", std::string(response));
    }
    std::string_view content = response.substr(body, end - body);
    while (!content.empty() && is_space(content.front())) content.remove_prefix(1);
    while (!content.empty() && is_space(content.back())) content.remove_suffix(1);
    if (content.empty()) throw AnnotationFormatError("empty snippet", std::string(response));
    snippets.emplace_back(content);
    at = end + delimiters.close.size();
  }
  return snippets;
}

std::string render_prompt(std::string_view prompt_template, std::string_view trace) {
  const std::size_t slot = prompt_template.find(kTracePlaceholder);
  if (slot == std::string_view::npos) {
    throw ConfigError("prompt template has no " + std::string(kTracePlaceholder) + " slot");
  }
  std::string prompt(prompt_template.substr(0, slot));
  prompt.append(trace);
  prompt.append(prompt_template.substr(slot + kTracePlaceholder.size()));
  return prompt;
}

std::vector<std::string> request_snippets(std::string_view trace, BackendSession& annotator,
                                          std::string_view prompt_template,
                                          std::size_t max_tokens,
                                          const SnippetDelimiters& delimiters) {
  annotator.prefill(render_prompt(prompt_template, trace));
  CompletionRequest request;
  request.max_tokens = max_tokens;
  request.temperature = 0.0;
  return parse_snippets(annotator.decode_stream(request).text(), delimiters);
}

std::string_view to_string(AnnotationStatus status) noexcept {
  switch (status) {
    case AnnotationStatus::ok: return "ok";
    case AnnotationStatus::partial: return "partial";
    case AnnotationStatus::rejected: return "rejected";
  }
  return "?";
}

AnnotationStatus annotation_status_from_string(std::string_view name) {
  if (name == "ok") return AnnotationStatus::ok;
  if (name == "partial") return AnnotationStatus::partial;
  if (name == "rejected") return AnnotationStatus::rejected;
  throw ParseError("status", "unknown annotation status '" + std::string(name) + "'");
}

double word_fraction(std::string_view text, std::span<const OffloadSpan> spans) {
  const WordSplit words = split_words_by_spans(text, spans);
  if (words.total() == 0) return 0.0;
  return static_cast<double>(words.inside) / static_cast<double>(words.total());
}

namespace {

std::vector<OffloadSpan> retained_spans(const std::vector<SnippetMatch>& matches,
                                        std::string_view trace) {
  std::vector<OffloadSpan> spans;
  for (const auto& m : matches) {
    if (m.retained) spans.push_back(m.match->span);
  }
  auto merged = merge_spans(std::move(spans));
  for (auto& s : merged) {
    s.origin = SpanOrigin::annotated;
    s.token_estimate = count_words(trace.substr(s.start, s.length()));
  }
  return merged;
}

}  // namespace

AnnotationRecord annotate_record(std::string question, std::string trace,
                                 std::vector<std::string> snippets, const MatchConfig& config,
                                 const ControlTags& tags) {
  config.validate();
  AnnotationRecord record;
  record.question = std::move(question);
  record.trace = std::move(trace);
  record.snippets = std::move(snippets);

  std::size_t matched = 0;
  for (std::size_t i = 0; i < record.snippets.size(); ++i) {
    SnippetMatch m;
    m.snippet_index = i;
    if (!record.snippets[i].empty()) m.match = fuzzy_match(record.trace, record.snippets[i], config);
    m.retained = m.match.has_value();
    matched += m.retained ? 1 : 0;
    record.matches.push_back(std::move(m));
  }

  auto spans = retained_spans(record.matches, record.trace);
  while (word_fraction(record.trace, spans) > config.max_total_fraction) {
    // Lowest similarity goes first; among equals the later one.
    SnippetMatch* victim = nullptr;
    for (auto& m : record.matches) {
      if (!m.retained) continue;
      if (victim == nullptr || m.match->similarity < victim->match->similarity ||
          (m.match->similarity == victim->match->similarity &&
           m.match->span.start >= victim->match->span.start)) {
        victim = &m;
      }
    }
    victim->retained = false;
    ++record.dropped_for_budget;
    spans = retained_spans(record.matches, record.trace);
  }

  record.matched_spans = std::move(spans);
  record.annotated_text = wrap_spans(record.trace, record.matched_spans, tags);
  record.offload_fraction = word_fraction(record.trace, record.matched_spans);
  if (!record.snippets.empty() && matched == 0) {
    record.status = AnnotationStatus::rejected;
  } else if (record.snippets.empty() || matched < record.snippets.size() ||
             record.dropped_for_budget > 0) {
    record.status = AnnotationStatus::partial;
  } else {
    record.status = AnnotationStatus::ok;
  }
  return record;
}

}  // namespace handoff
