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

#include "handoff/backend.hpp"

#include "handoff/errors.hpp"

namespace handoff {

std::string_view to_string(ModelRole role) noexcept {
  switch (role) {
    case ModelRole::small: return "small";
    case ModelRole::large: return "large";
    case ModelRole::annotator: return "annotator";
  }
  return "?";
}

std::string_view to_string(FinishReason reason) noexcept {
  switch (reason) {
    case FinishReason::stop: return "stop";
    case FinishReason::length: return "length";
    case FinishReason::end_of_sequence: return "eos";
  }
  return "?";
}

void CompletionRequest::validate() const {
  if (max_tokens < 1) throw ConfigError("max_tokens must be at least 1");
  for (const auto& s : stop_sequences) {
    if (s.empty()) throw ConfigError("stop sequences must be non-empty");
  }
}

std::string DecodeResult::text() const {
  std::string out;
  for (const auto& c : chunks) out += c.text;
  return out;
}

std::size_t DecodeResult::tokens() const noexcept {
  std::size_t n = 0;
  for (const auto& c : chunks) n += c.tokens;
  return n;
}

class BackendSession::Guard {
 public:
  explicit Guard(BackendSession& session) : flag_(*session.busy_) {
    if (flag_.exchange(true)) {
      throw ProtocolError("session '" + session.id_ +
                          "' already has an operation in flight");
    }
  }
  ~Guard() { flag_.store(false); }
  Guard(const Guard&) = delete;
  Guard& operator=(const Guard&) = delete;

 private:
  std::atomic<bool>& flag_;
};

BackendSession::BackendSession(std::string id, ModelRole role,
                               std::unique_ptr<SessionDriver> driver)
    : id_(std::move(id)),
      role_(role),
      driver_(std::move(driver)),
      busy_(std::make_unique<std::atomic<bool>>(false)) {}

BackendSession::BackendSession(BackendSession&&) noexcept = default;
BackendSession& BackendSession::operator=(BackendSession&&) noexcept = default;
BackendSession::~BackendSession() = default;

PrefillAck BackendSession::prefill(std::string_view chunk) {
  Guard guard(*this);
  if (chunk.empty()) return {context_.size(), 0, 0.0};
  PrefillAck ack = driver_->prefill(context_, chunk);
  context_.append(chunk);
  ack.committed = context_.size();
  return ack;
}

PrefillAck BackendSession::prefill_to(std::string_view full_context) {
  if (full_context.size() < context_.size() ||
      full_context.substr(0, context_.size()) != context_) {
    throw ContextDivergenceError("session '" + id_ +
                                 "': prefill does not extend the committed context");
  }
  return prefill(full_context.substr(context_.size()));
}

DecodeResult BackendSession::decode_stream(const CompletionRequest& request,
                                           const ChunkCallback& on_chunk) {
  request.validate();
  Guard guard(*this);
  DecodeResult result;
  try {
    result = driver_->decode(context_, request, on_chunk);
  } catch (const BackendError& e) {
    // Whatever streamed before the failure is what the model has seen.
    context_.append(e.partial_text());
    throw;
  }
  context_.append(result.text());
  return result;
}

std::string BackendSession::greedy_probe(std::size_t max_probe_tokens) {
  if (max_probe_tokens < 1) throw ConfigError("probe must request at least one token");
  Guard guard(*this);
  return driver_->probe(context_, max_probe_tokens);
}

BackendSession BackendSession::fork() {
  Guard guard(*this);
  BackendSession copy(id_ + "/fork", role_, driver_->clone());
  copy.context_ = context_;
  return copy;
}

}  // namespace handoff
