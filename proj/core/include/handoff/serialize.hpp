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

// JSON mappings for configs and results. Readers accept partial objects
// (missing keys keep their defaults), reject unknown keys, and report
// problems as ParseError naming the offending field.

#include <nlohmann/json.hpp>

#include "handoff/annotate.hpp"
#include "handoff/http_backend.hpp"
#include "handoff/orchestrator.hpp"
#include "handoff/perf_sim.hpp"
#include "handoff/protocol.hpp"
#include "handoff/reward.hpp"
#include "handoff/scripted_backend.hpp"
#include "handoff/tags.hpp"

namespace handoff {

using json = nlohmann::json;

void to_json(json& j, const ControlTags& v);
void from_json(const json& j, ControlTags& v);

void to_json(json& j, const ScriptedBehavior& v);
void from_json(const json& j, ScriptedBehavior& v);

void to_json(json& j, const HttpBackendConfig& v);
void from_json(const json& j, HttpBackendConfig& v);

/// Accepts sequential|overlapped and the aliases non-pipelined|pipelined.
ExecutionMode execution_mode_from_string(std::string_view name);

void to_json(json& j, const RunConfig& v);
void from_json(const json& j, RunConfig& v);

void to_json(json& j, const RewardConfig& v);
void from_json(const json& j, RewardConfig& v);

void to_json(json& j, const MatchConfig& v);
void from_json(const json& j, MatchConfig& v);

void to_json(json& j, const SimConfig& v);
void from_json(const json& j, SimConfig& v);

void to_json(json& j, const OffloadSpan& v);
void from_json(const json& j, OffloadSpan& v);

void to_json(json& j, const GenerationTrace& v);
void from_json(const json& j, GenerationTrace& v);

void to_json(json& j, const GenerationResult& v);

void to_json(json& j, const RewardBreakdown& v);

void to_json(json& j, const AnnotationRecord& v);
void from_json(const json& j, AnnotationRecord& v);

void to_json(json& j, const SimResult& v);

void to_json(json& j, const SegmentedTrace& v);
void from_json(const json& j, SegmentedTrace& v);

/// Throws ParseError when `j` has a key outside `allowed`.
void require_known_keys(const json& j, std::initializer_list<std::string_view> allowed,
                        std::string_view where);

}  // namespace handoff
