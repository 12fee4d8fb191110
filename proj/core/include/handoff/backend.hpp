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

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace handoff {

enum class ModelRole { small, large, annotator };
std::string_view to_string(ModelRole role) noexcept;

struct CompletionRequest {
  std::size_t max_tokens = 64;
  double temperature = 0.0;
  std::vector<std::string> stop_sequences;
  bool stream = true;
  // Keep the matched stop sequence at the end of the returned text. Chunks
  // already streamed are never retracted.
  bool include_stop = true;

  void validate() const;  // throws ConfigError
};

enum class FinishReason { stop, length, end_of_sequence };
std::string_view to_string(FinishReason reason) noexcept;

struct StreamChunk {
  std::string text;
  std::size_t tokens = 0;
  double timestamp = 0.0;  // seconds since the decode call started
};

struct DecodeResult {
  std::vector<StreamChunk> chunks;
  FinishReason finish = FinishReason::end_of_sequence;
  std::string matched_stop;  // set when finish == stop
  double seconds = 0.0;

  std::string text() const;
  std::size_t tokens() const noexcept;
};

struct PrefillAck {
  std::size_t committed = 0;  // characters of context committed
  std::size_t tokens = 0;
  double seconds = 0.0;
};

using ChunkCallback = std::function<void(const StreamChunk&)>;

/// Model-specific half of a session. Implementations see a context string
/// that only ever grows; BackendSession enforces ordering and exclusivity.
class SessionDriver {
 public:
  virtual ~SessionDriver() = default;
  virtual PrefillAck prefill(std::string_view context, std::string_view chunk) = 0;
  virtual DecodeResult decode(std::string_view context,
                              const CompletionRequest& request,
                              const ChunkCallback& on_chunk) = 0;
  /// Greedy lookahead that leaves the session untouched. Throws
  /// CapabilityError when unsupported.
  virtual std::string probe(std::string_view context, std::size_t max_tokens) = 0;
  /// Independent copy of the model-side state.
  virtual std::unique_ptr<SessionDriver> clone() const = 0;
};

/// One model's view of a generation: an append-only committed context plus
/// the driver that talks to the model. Exactly one operation may be in flight
/// at a time; overlapping calls are rejected with ProtocolError.
class BackendSession {
 public:
  BackendSession(std::string id, ModelRole role,
                 std::unique_ptr<SessionDriver> driver);
  BackendSession(BackendSession&&) noexcept;
  BackendSession& operator=(BackendSession&&) noexcept;
  ~BackendSession();

  const std::string& id() const noexcept { return id_; }
  ModelRole role() const noexcept { return role_; }
  const std::string& context() const noexcept { return context_; }
  std::size_t context_committed() const noexcept { return context_.size(); }

  /// Appends `chunk` to the committed context.
  PrefillAck prefill(std::string_view chunk);

  /// Brings the context up to `full_context`, which must extend the current
  /// one. Throws ContextDivergenceError otherwise.
  PrefillAck prefill_to(std::string_view full_context);

  /// Streams a continuation of the committed context and commits it.
  DecodeResult decode_stream(const CompletionRequest& request,
                             const ChunkCallback& on_chunk = {});

  /// Side-effect-free greedy continuation of up to `max_probe_tokens`.
  std::string greedy_probe(std::size_t max_probe_tokens);

  /// Detached copy with the same committed context and model state. Work done
  /// on the fork never reaches this session.
  BackendSession fork();

 private:
  class Guard;

  std::string id_;
  ModelRole role_;
  std::unique_ptr<SessionDriver> driver_;
  std::string context_;
  std::unique_ptr<std::atomic<bool>> busy_;
};

/// A model endpoint that can open independent sessions.
class Backend {
 public:
  virtual ~Backend() = default;
  virtual const std::string& name() const noexcept = 0;
  virtual BackendSession open_session(ModelRole role) = 0;
};

}  // namespace handoff
