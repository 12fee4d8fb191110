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

#include "handoff/scripted_backend.hpp"

#include <algorithm>

#include "handoff/errors.hpp"
#include "handoff/text.hpp"

namespace handoff {

bool ScriptTrigger::matches(std::size_t turn_number,
                            std::string_view context) const {
  if (kind == Kind::on_turn) return turn == turn_number;
  return context.find(substring) != std::string_view::npos;
}

void ScriptedBehavior::validate() const {
  if (emission_rate <= 0.0) throw ConfigError(name + ": emission_rate must be positive");
  if (prefill_rate <= 0.0) throw ConfigError(name + ": prefill_rate must be positive");
  if (chunk_tokens < 1) throw ConfigError(name + ": chunk_tokens must be at least 1");
  for (const auto& e : entries) {
    if (e.emission_rate < 0.0) throw ConfigError(name + ": negative entry emission_rate");
    if (e.trigger.kind == ScriptTrigger::Kind::on_turn && e.trigger.turn < 1) {
      throw ConfigError(name + ": on_turn triggers count from 1");
    }
    if (e.trigger.kind == ScriptTrigger::Kind::on_context_containing &&
        e.trigger.substring.empty()) {
      throw ConfigError(name + ": on_context_containing needs a substring");
    }
  }
}

namespace {

struct ScriptCursor {
  std::size_t turn = 0;
  bool new_turn_pending = true;
  std::string emission;
  std::size_t position = 0;
  double rate = 0.0;
  std::vector<bool> used;
};

class ScriptedDriver final : public SessionDriver {
 public:
  explicit ScriptedDriver(std::shared_ptr<const ScriptedBehavior> behavior)
      : behavior_(std::move(behavior)) {
    cursor_.used.assign(behavior_->entries.size(), false);
    cursor_.rate = behavior_->emission_rate;
  }

  PrefillAck prefill(std::string_view, std::string_view chunk) override {
    cursor_.new_turn_pending = true;
    PrefillAck ack;
    ack.tokens = split_pieces(chunk, behavior_->piece_chars).size();
    ack.seconds = static_cast<double>(ack.tokens) / behavior_->prefill_rate;
    return ack;
  }

  DecodeResult decode(std::string_view context, const CompletionRequest& request,
                      const ChunkCallback& on_chunk) override {
    ScriptCursor next = cursor_;
    DecodeResult result = generate(next, context, request, on_chunk);
    cursor_ = std::move(next);
    return result;
  }

  std::string probe(std::string_view context, std::size_t max_tokens) override {
    if (!behavior_->supports_probe) {
      throw CapabilityError(behavior_->name + " does not support greedy probes");
    }
    ScriptCursor scratch = cursor_;
    CompletionRequest request;
    request.max_tokens = max_tokens;
    return generate(scratch, context, request, {}).text();
  }

  std::unique_ptr<SessionDriver> clone() const override {
    return std::make_unique<ScriptedDriver>(*this);
  }

 private:
  void begin_turn(ScriptCursor& c, std::string_view context) const {
    c.turn += 1;
    c.new_turn_pending = false;
    std::size_t match = behavior_->entries.size();
    for (std::size_t i = 0; i < behavior_->entries.size(); ++i) {
      if (c.used[i] || !behavior_->entries[i].trigger.matches(c.turn, context)) continue;
      if (match != behavior_->entries.size()) {
        throw ProtocolError(behavior_->name + ": ambiguous triggers at turn " +
                            std::to_string(c.turn));
      }
      match = i;
    }
    if (match == behavior_->entries.size()) return;
    const auto& entry = behavior_->entries[match];
    c.used[match] = true;
    c.emission = entry.emission;
    c.position = 0;
    c.rate = entry.emission_rate > 0.0 ? entry.emission_rate : behavior_->emission_rate;
  }

  DecodeResult generate(ScriptCursor& c, std::string_view context,
                        const CompletionRequest& request,
                        const ChunkCallback& on_chunk) const {
    if (c.new_turn_pending) begin_turn(c, context);

    DecodeResult result;
    std::string output;
    std::size_t tokens = 0;
    std::size_t chunk_start = 0;
    std::size_t chunk_tokens = 0;

    std::size_t max_stop = 0;
    for (const auto& s : request.stop_sequences) max_stop = std::max(max_stop, s.size());
    // A stop sequence may start in the committed context and end in the output.
    const std::size_t tail_len = std::min(context.size(), max_stop > 0 ? max_stop - 1 : 0);
    std::string window(context.substr(context.size() - tail_len));

    auto flush = [&](bool force) {
      if (chunk_tokens == 0 && !(force && output.size() > chunk_start)) return;
      StreamChunk chunk;
      chunk.text = output.substr(chunk_start);
      chunk.tokens = chunk_tokens;
      chunk.timestamp = static_cast<double>(tokens) / c.rate;
      chunk_start = output.size();
      chunk_tokens = 0;
      if (on_chunk) on_chunk(chunk);
      result.chunks.push_back(std::move(chunk));
    };

    result.finish = FinishReason::length;
    while (tokens < request.max_tokens) {
      const std::string_view rest = std::string_view(c.emission).substr(c.position);
      if (rest.empty()) {
        result.finish = FinishReason::end_of_sequence;
        break;
      }
      const std::size_t n = first_piece_length(rest, behavior_->piece_chars);
      const std::size_t before = window.size();
      output.append(rest.substr(0, n));
      window.append(rest.substr(0, n));
      ++tokens;
      ++chunk_tokens;

      // Earliest stop occurrence that ends inside the new piece.
      std::size_t stop_at = std::string::npos;
      std::string matched;
      const std::size_t from = before >= max_stop ? before - max_stop + 1 : 0;
      for (const auto& s : request.stop_sequences) {
        const std::size_t hit = window.find(s, from);
        if (hit != std::string::npos && hit + s.size() > before && hit < stop_at) {
          stop_at = hit;
          matched = s;
        }
      }
      if (stop_at != std::string::npos) {
        const std::size_t stop_end = stop_at + matched.size() - tail_len;
        const std::size_t stop_begin = stop_at > tail_len ? stop_at - tail_len : 0;
        c.position += n - (output.size() - stop_end);
        output.resize(request.include_stop ? stop_end : std::max(stop_begin, chunk_start));
        result.finish = FinishReason::stop;
        result.matched_stop = matched;
        break;
      }
      c.position += n;
      if (chunk_tokens >= behavior_->chunk_tokens) flush(false);
    }
    if (c.position >= c.emission.size() && result.finish == FinishReason::length) {
      result.finish = FinishReason::end_of_sequence;
    }
    flush(true);
    result.seconds = static_cast<double>(tokens) / c.rate;
    return result;
  }

  std::shared_ptr<const ScriptedBehavior> behavior_;
  ScriptCursor cursor_;
};

}  // namespace

ScriptedBackend::ScriptedBackend(ScriptedBehavior behavior)
    : behavior_(std::make_shared<const ScriptedBehavior>(std::move(behavior))) {
  behavior_->validate();
}

BackendSession ScriptedBackend::open_session(ModelRole role) {
  const std::size_t n = next_session_.fetch_add(1);
  return BackendSession(behavior_->name + "#" + std::to_string(n), role,
                        std::make_unique<ScriptedDriver>(behavior_));
}

}  // namespace handoff
