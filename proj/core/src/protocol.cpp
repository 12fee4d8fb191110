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

#include "handoff/protocol.hpp"

#include <algorithm>

#include "handoff/text.hpp"

namespace handoff {

std::string_view to_string(SpanOrigin origin) noexcept {
  switch (origin) {
    case SpanOrigin::annotated: return "annotated";
    case SpanOrigin::emitted: return "emitted";
    case SpanOrigin::random_policy: return "random-policy";
    case SpanOrigin::forced_takeback: return "forced-takeback";
  }
  return "emitted";
}

SpanOrigin span_origin_from_string(std::string_view name) {
  if (name == "annotated") return SpanOrigin::annotated;
  if (name == "emitted") return SpanOrigin::emitted;
  if (name == "random-policy") return SpanOrigin::random_policy;
  if (name == "forced-takeback") return SpanOrigin::forced_takeback;
  throw ParseError("origin", "unknown span origin '" + std::string(name) + "'");
}

std::string_view to_string(Phase phase) noexcept {
  switch (phase) {
    case Phase::small_decoding: return "SmallDecoding";
    case Phase::large_decoding: return "LargeDecoding";
    case Phase::finished: return "Finished";
  }
  return "?";
}

std::string_view to_string(EventKind kind) noexcept {
  switch (kind) {
    case EventKind::open_tag_seen: return "open_tag_seen";
    case EventKind::close_tag_seen: return "close_tag_seen";
    case EventKind::budget_exhausted: return "budget_exhausted";
    case EventKind::end_of_stream: return "end_of_stream";
  }
  return "?";
}

std::string_view to_string(IllegalReason reason) noexcept {
  switch (reason) {
    case IllegalReason::unclosed_offload: return "unclosed-offload";
    case IllegalReason::close_before_open: return "close-before-open";
    case IllegalReason::nested_offload: return "nested-offload";
    case IllegalReason::missing_think: return "missing-think";
    case IllegalReason::missing_answer: return "missing-answer";
  }
  return "?";
}

bool spans_well_formed(std::span<const OffloadSpan> spans,
                       std::size_t length) noexcept {
  std::size_t frontier = 0;
  for (const auto& s : spans) {
    if (s.start >= s.end || s.end > length || s.start < frontier) return false;
    frontier = s.end;
  }
  return true;
}

std::string GenerationTrace::stripped_text(const ControlTags& tags) const {
  return strip_offload_tags(text, tags);
}

WordSplit split_words_by_spans(std::string_view stripped,
                               std::span<const OffloadSpan> spans) {
  WordSplit split;
  std::size_t cursor = 0;
  for (const auto& s : spans) {
    const std::size_t start = std::min(s.start, stripped.size());
    const std::size_t end = std::min(s.end, stripped.size());
    if (start > cursor) split.outside += count_words(stripped.substr(cursor, start - cursor));
    if (end > start) split.inside += count_words(stripped.substr(start, end - start));
    cursor = std::max(cursor, end);
  }
  if (cursor < stripped.size()) split.outside += count_words(stripped.substr(cursor));
  return split;
}

double coverage(const GenerationTrace& trace, CoverageCounting counting,
                const ControlTags& tags) {
  if (counting == CoverageCounting::backend_tokens) {
    const std::size_t total = trace.small_tokens + trace.large_tokens;
    if (total == 0) return 0.0;
    std::size_t inside = 0;
    for (const auto& s : trace.spans) inside += s.token_estimate;
    return std::min(1.0, static_cast<double>(inside) / static_cast<double>(total));
  }
  const std::string stripped = trace.stripped_text(tags);
  const WordSplit split = split_words_by_spans(stripped, trace.spans);
  if (split.total() == 0) return 0.0;
  return static_cast<double>(split.inside) / static_cast<double>(split.total());
}

// ---------------------------------------------------------------------------

namespace {

[[noreturn]] void illegal(const ProtocolState& state, const ProtocolEvent& event) {
  throw ProtocolError("event " + std::string(to_string(event.kind)) +
                      " is illegal in phase " + std::string(to_string(state.phase)));
}

}  // namespace

StepResult step(const ProtocolState& state, const ProtocolEvent& event,
                std::size_t span_budget) {
  StepResult out;
  out.state = state;

  if (event.kind == EventKind::end_of_stream) {
    out.state.phase = Phase::finished;
    out.state.current_span_start.reset();
    out.state.offload_budget_remaining = 0;
    out.action = Action::finish;
    return out;
  }

  switch (state.phase) {
    case Phase::small_decoding:
      if (event.kind != EventKind::open_tag_seen) illegal(state, event);
      out.state.phase = Phase::large_decoding;
      out.state.current_span_start = event.offset;
      out.state.offload_budget_remaining = span_budget;
      out.action = Action::switch_to_large;
      return out;

    case Phase::large_decoding: {
      if (event.kind == EventKind::open_tag_seen) illegal(state, event);
      const std::size_t start = state.current_span_start.value_or(event.offset);
      if (event.offset < start) {
        throw ProtocolError("span close offset precedes its start");
      }
      const bool forced = event.kind == EventKind::budget_exhausted;
      OffloadSpan span;
      span.start = start;
      span.end = event.offset;
      span.origin = forced ? SpanOrigin::forced_takeback : SpanOrigin::emitted;
      out.closed_span = span;
      out.state.phase = Phase::small_decoding;
      out.state.current_span_start.reset();
      out.state.offload_budget_remaining = 0;
      out.action = Action::switch_to_small;
      out.reason = forced ? TakebackReason::forced : TakebackReason::normal;
      return out;
    }

    case Phase::finished:
      illegal(state, event);
  }
  illegal(state, event);
}

ProtocolState charge_offload(ProtocolState state, std::size_t tokens) noexcept {
  state.offload_budget_remaining =
      tokens >= state.offload_budget_remaining ? 0 : state.offload_budget_remaining - tokens;
  return state;
}

// ---------------------------------------------------------------------------

namespace {

std::vector<std::size_t> find_all(std::string_view text, std::string_view needle) {
  std::vector<std::size_t> hits;
  for (std::size_t pos = text.find(needle); pos != std::string_view::npos;
       pos = text.find(needle, pos + needle.size())) {
    hits.push_back(pos);
  }
  return hits;
}

struct OffloadScan {
  std::size_t opens = 0;
  std::size_t closes = 0;
  bool close_before_open = false;
  bool nested = false;
  std::size_t final_depth = 0;
};

OffloadScan scan_offload_structure(const std::vector<TagEvent>& events) {
  OffloadScan scan;
  std::size_t depth = 0;
  for (const auto& e : events) {
    if (e.kind == TagKind::open) {
      ++scan.opens;
      if (depth > 0) scan.nested = true;
      ++depth;
    } else {
      ++scan.closes;
      if (depth == 0) {
        scan.close_before_open = true;
      } else {
        --depth;
      }
    }
  }
  scan.final_depth = depth;
  return scan;
}

std::size_t tag_length(TagKind kind, const ControlTags& tags) {
  return kind == TagKind::open ? tags.open_tag.size() : tags.close_tag.size();
}

}  // namespace

TraceValidation validate_trace(std::string_view text, const ControlTags& tags) {
  TraceValidation v;

  const auto think_open = find_all(text, tags.think_open);
  const auto think_close = find_all(text, tags.think_close);
  const auto answer_open = find_all(text, tags.answer_open);
  const auto answer_close = find_all(text, tags.answer_close);

  const bool think_ok = think_open.size() == 1 && think_close.size() == 1 &&
                        think_open[0] < think_close[0];
  const bool answer_ok = answer_open.size() == 1 && answer_close.size() == 1 &&
                         answer_open[0] < answer_close[0] &&
                         (!think_ok || think_close[0] < answer_open[0]);
  v.scaffold_ok = think_ok && answer_ok;

  const OffloadScan scan = scan_offload_structure(scan_text(text, tags));
  v.tags_balanced = scan.opens == scan.closes && !scan.close_before_open;
  v.tags_non_nested = !scan.nested;

  if (scan.final_depth > 0) v.illegal_reasons.push_back(IllegalReason::unclosed_offload);
  if (scan.close_before_open) v.illegal_reasons.push_back(IllegalReason::close_before_open);
  if (scan.nested) v.illegal_reasons.push_back(IllegalReason::nested_offload);
  if (!think_ok) v.illegal_reasons.push_back(IllegalReason::missing_think);
  if (!answer_ok) v.illegal_reasons.push_back(IllegalReason::missing_answer);
  return v;
}

std::vector<OffloadSpan> extract_spans(std::string_view text,
                                       const ControlTags& tags,
                                       SpanOrigin origin) {
  const auto events = scan_text(text, tags);
  const OffloadScan scan = scan_offload_structure(events);
  if (scan.opens != scan.closes || scan.close_before_open || scan.nested) {
    throw TraceValidationError("offload tags are not balanced and non-nested",
                               validate_trace(text, tags));
  }

  const std::string stripped = strip_offload_tags(text, tags);
  std::vector<OffloadSpan> spans;
  std::size_t removed = 0;
  std::size_t open_at = 0;
  for (const auto& e : events) {
    const std::size_t stripped_offset = e.offset - removed;
    if (e.kind == TagKind::open) {
      open_at = stripped_offset;
    } else if (stripped_offset > open_at) {
      OffloadSpan s;
      s.start = open_at;
      s.end = stripped_offset;
      s.origin = origin;
      s.token_estimate = count_words(std::string_view(stripped).substr(s.start, s.length()));
      spans.push_back(s);
    }
    removed += tag_length(e.kind, tags);
  }
  return spans;
}

std::string strip_offload_tags(std::string_view text, const ControlTags& tags) {
  std::string out;
  out.reserve(text.size());
  std::size_t cursor = 0;
  for (const auto& e : scan_text(text, tags)) {
    out.append(text.substr(cursor, e.offset - cursor));
    cursor = e.offset + tag_length(e.kind, tags);
  }
  out.append(text.substr(cursor));
  return out;
}

TagPairing pair_offload_tags(std::string_view text, const ControlTags& tags) {
  TagPairing pairing;
  std::vector<std::size_t> stack;
  std::vector<OffloadSpan> pairs;
  std::size_t removed = 0;
  for (const auto& e : scan_text(text, tags)) {
    const std::size_t stripped_offset = e.offset - removed;
    if (e.kind == TagKind::open) {
      ++pairing.open_count;
      stack.push_back(stripped_offset);
    } else {
      ++pairing.close_count;
      if (stack.empty()) {
        ++pairing.unpaired_tags;
      } else {
        if (stripped_offset > stack.back()) {
          pairs.push_back({stack.back(), stripped_offset, SpanOrigin::emitted, 0});
        }
        stack.pop_back();
      }
    }
    removed += tag_length(e.kind, tags);
  }
  pairing.unpaired_tags += stack.size();

  std::sort(pairs.begin(), pairs.end(),
            [](const OffloadSpan& a, const OffloadSpan& b) {
              return a.start != b.start ? a.start < b.start : a.end > b.end;
            });
  for (const auto& p : pairs) {
    if (!pairing.regions.empty() && p.start < pairing.regions.back().end) {
      pairing.regions.back().end = std::max(pairing.regions.back().end, p.end);
    } else {
      pairing.regions.push_back(p);
    }
  }
  return pairing;
}

}  // namespace handoff
