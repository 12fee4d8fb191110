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
#include <memory>
#include <string>
#include <vector>

#include "handoff/backend.hpp"

namespace handoff {

struct ScriptTrigger {
  enum class Kind { on_turn, on_context_containing };
  Kind kind = Kind::on_turn;
  std::size_t turn = 1;   // on_turn
  std::string substring;  // on_context_containing

  static ScriptTrigger on_turn(std::size_t n) { return {Kind::on_turn, n, {}}; }
  static ScriptTrigger on_context_containing(std::string s) {
    return {Kind::on_context_containing, 0, std::move(s)};
  }
  bool matches(std::size_t turn_number, std::string_view context) const;
};

struct ScriptEntry {
  ScriptTrigger trigger;
  std::string emission;
  double emission_rate = 0.0;  // tokens/s; 0 falls back to the behavior rate
};

/// Deterministic model double.
///
/// A turn starts at the first decode after any prefill (including the initial
/// prompt). At the start of a turn the single matching, not yet used entry
/// becomes the active emission; if none matches, the unread remainder of the
/// previous emission continues. Decoding replays the active emission piece by
/// piece and the model reports end-of-sequence when it runs out.
struct ScriptedBehavior {
  std::string name = "scripted";
  std::vector<ScriptEntry> entries;
  double emission_rate = 100.0;   // decode tokens/s
  double prefill_rate = 10000.0;  // prefill tokens/s
  std::size_t piece_chars = 0;    // 0: word pieces, else fixed-width pieces
  std::size_t chunk_tokens = 1;   // pieces per streamed chunk
  bool supports_probe = true;

  void validate() const;  // throws ConfigError
};

class ScriptedBackend final : public Backend {
 public:
  explicit ScriptedBackend(ScriptedBehavior behavior);

  const std::string& name() const noexcept override { return behavior_->name; }
  BackendSession open_session(ModelRole role) override;
  const ScriptedBehavior& behavior() const noexcept { return *behavior_; }

 private:
  std::shared_ptr<const ScriptedBehavior> behavior_;
  std::atomic<std::size_t> next_session_{0};
};

}  // namespace handoff
