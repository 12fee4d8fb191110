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

// Control-tag scanning, the handoff state machine, trace validation and
// span extraction. Everything here is a pure function over explicit values.

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "handoff/errors.hpp"
#include "handoff/tags.hpp"

namespace handoff {

// ---------------------------------------------------------------------------
// Spans and traces
// ---------------------------------------------------------------------------

enum class SpanOrigin { annotated, emitted, random_policy, forced_takeback };

std::string_view to_string(SpanOrigin origin) noexcept;
SpanOrigin span_origin_from_string(std::string_view name);

/// Half-open character interval [start, end) over tag-stripped text.
struct OffloadSpan {
  std::size_t start = 0;
  std::size_t end = 0;
  SpanOrigin origin = SpanOrigin::emitted;
  std::size_t token_estimate = 0;

  std::size_t length() const noexcept { return end - start; }
  bool same_interval(const OffloadSpan& other) const noexcept {
    return start == other.start && end == other.end;
  }
  bool operator==(const OffloadSpan&) const = default;
};

/// True when every span is non-empty, within [0, length], sorted and pairwise
/// non-overlapping.
bool spans_well_formed(std::span<const OffloadSpan> spans,
                       std::size_t length) noexcept;

struct GenerationTrace {
  std::string text;  // generated text including control tags
  std::vector<OffloadSpan> spans;  // offsets into the tag-stripped text
  std::size_t handoff_count = 0;
  std::size_t small_tokens = 0;
  std::size_t large_tokens = 0;

  std::string stripped_text(const ControlTags& tags = {}) const;
};

enum class CoverageCounting { whitespace_words, backend_tokens };

/// Word counts of the stripped text split at span boundaries; a span edge
/// always separates words, so inside + outside is the segmented total.
struct WordSplit {
  std::size_t inside = 0;
  std::size_t outside = 0;
  std::size_t total() const noexcept { return inside + outside; }
};
WordSplit split_words_by_spans(std::string_view stripped,
                               std::span<const OffloadSpan> spans);

/// Fraction of the trace's token estimate that lies inside offload spans.
/// Empty traces have coverage 0.
double coverage(const GenerationTrace& trace, CoverageCounting counting,
                const ControlTags& tags = {});

// ---------------------------------------------------------------------------
// Streaming tag scanner
// ---------------------------------------------------------------------------

enum class TagKind { open, close };

struct TagEvent {
  TagKind kind = TagKind::open;
  std::size_t offset = 0;  // absolute offset of the tag's first character
  bool operator==(const TagEvent&) const = default;
};

struct ScannerState {
  std::string carry;  // suffix that is a proper prefix of some tag
  std::size_t absolute_offset = 0;  // characters fed so far
  bool operator==(const ScannerState&) const = default;
};

struct ScanResult {
  ScannerState state;
  std::vector<TagEvent> events;
};

/// Reports every complete offload tag in carry+chunk exactly once. Tags are
/// matched leftmost-first without overlap, which makes the event list
/// independent of how the text is chunked.
ScanResult scan_chunk(const ScannerState& state, std::string_view chunk,
                      const ControlTags& tags);

/// Single-shot scan of a complete text.
std::vector<TagEvent> scan_text(std::string_view text, const ControlTags& tags);

// ---------------------------------------------------------------------------
// Handoff state machine
// ---------------------------------------------------------------------------

enum class Phase { small_decoding, large_decoding, finished };
std::string_view to_string(Phase phase) noexcept;

struct ProtocolState {
  Phase phase = Phase::small_decoding;
  std::optional<std::size_t> current_span_start;  // set iff large_decoding
  std::size_t offload_budget_remaining = 0;
  bool operator==(const ProtocolState&) const = default;
};

enum class EventKind {
  open_tag_seen,
  close_tag_seen,
  budget_exhausted,
  end_of_stream
};
std::string_view to_string(EventKind kind) noexcept;

struct ProtocolEvent {
  EventKind kind = EventKind::end_of_stream;
  std::size_t offset = 0;  // stripped-text offset where the event applies
};

enum class Action { none, switch_to_large, switch_to_small, finish };
enum class TakebackReason { normal, forced };

struct StepResult {
  ProtocolState state;
  Action action = Action::none;
  std::optional<TakebackReason> reason;  // set for switch_to_small
  std::optional<OffloadSpan> closed_span;
};

/// Advances the handoff state machine. `span_budget` is the large-model token
/// budget granted on every switch to the large model.
/// Throws ProtocolError for an event that is illegal in the current phase.
StepResult step(const ProtocolState& state, const ProtocolEvent& event,
                std::size_t span_budget = 1024);

/// Deducts large-model tokens from the span budget, saturating at zero.
ProtocolState charge_offload(ProtocolState state, std::size_t tokens) noexcept;

// ---------------------------------------------------------------------------
// Validation and extraction
// ---------------------------------------------------------------------------

enum class IllegalReason {
  unclosed_offload,
  close_before_open,
  nested_offload,
  missing_think,
  missing_answer
};
std::string_view to_string(IllegalReason reason) noexcept;

struct TraceValidation {
  bool scaffold_ok = false;
  bool tags_balanced = false;
  bool tags_non_nested = false;
  std::vector<IllegalReason> illegal_reasons;

  bool ok() const noexcept {
    return scaffold_ok && tags_balanced && tags_non_nested;
  }
  bool offload_well_formed() const noexcept {
    return tags_balanced && tags_non_nested;
  }
  bool operator==(const TraceValidation&) const = default;
};

class TraceValidationError : public Error {
 public:
  TraceValidationError(const std::string& message, TraceValidation validation)
      : Error(message), validation_(std::move(validation)) {}
  const TraceValidation& validation() const noexcept { return validation_; }

 private:
  TraceValidation validation_;
};

/// Scaffold: exactly one think block followed by exactly one answer block.
/// Offload tags: balanced (every close follows a matching open, counts equal)
/// and non-nested (no open inside an unclosed offload region).
TraceValidation validate_trace(std::string_view text, const ControlTags& tags);

/// One span per open/close pair, measured over the text with offload tags
/// removed. token_estimate is the whitespace-word count of the span.
/// Throws TraceValidationError when the offload tags are not well formed.
std::vector<OffloadSpan> extract_spans(std::string_view text,
                                       const ControlTags& tags,
                                       SpanOrigin origin = SpanOrigin::emitted);

/// Removes every offload open/close tag; think/answer tags are kept.
std::string strip_offload_tags(std::string_view text, const ControlTags& tags);

/// Lenient stack pairing used on possibly malformed text: each close tag
/// pairs with the most recent unpaired open. Returns the union of paired
/// regions (stripped offsets) and how many tags stayed unpaired.
struct TagPairing {
  std::vector<OffloadSpan> regions;
  std::size_t unpaired_tags = 0;
  std::size_t open_count = 0;
  std::size_t close_count = 0;
};
TagPairing pair_offload_tags(std::string_view text, const ControlTags& tags);

}  // namespace handoff
