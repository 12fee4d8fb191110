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

#include "handoff/serialize.hpp"

#include <algorithm>

#include "handoff/errors.hpp"

namespace handoff {

void require_known_keys(const json& j, std::initializer_list<std::string_view> allowed,
                        std::string_view where) {
  if (!j.is_object()) throw ParseError(std::string(where), "expected an object");
  for (const auto& item : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), item.key()) == allowed.end()) {
      throw ParseError(std::string(where).empty() ? item.key()
                                                  : std::string(where) + "." + item.key(),
                       "unknown key");
    }
  }
}

namespace {

template <typename T>
void read(const json& j, std::string_view key, T& out) {
  const auto it = j.find(key);
  if (it == j.end()) return;
  try {
    out = it->template get<T>();
  } catch (const ParseError&) {
    throw;
  } catch (const json::exception& e) {
    throw ParseError(std::string(key), e.what());
  } catch (const Error& e) {
    throw ParseError(std::string(key), e.what());
  }
}

void read_size(const json& j, std::string_view key, std::size_t& out) {
  const auto it = j.find(key);
  if (it == j.end()) return;
  if (!it->is_number_unsigned() && !(it->is_number_integer() && it->get<long long>() >= 0)) {
    throw ParseError(std::string(key), "expected a non-negative integer");
  }
  out = it->get<std::size_t>();
}

std::string direction_name(HandoffDirection d) {
  return d == HandoffDirection::to_large ? "to-large" : "to-small";
}

}  // namespace

// -- tags and backends -------------------------------------------------------

void to_json(json& j, const ControlTags& v) {
  j = json{{"open_tag", v.open_tag},       {"close_tag", v.close_tag},
           {"think_open", v.think_open},   {"think_close", v.think_close},
           {"answer_open", v.answer_open}, {"answer_close", v.answer_close}};
}

void from_json(const json& j, ControlTags& v) {
  require_known_keys(j, {"open_tag", "close_tag", "think_open", "think_close", "answer_open",
                         "answer_close"},
                     "tags");
  read(j, "open_tag", v.open_tag);
  read(j, "close_tag", v.close_tag);
  read(j, "think_open", v.think_open);
  read(j, "think_close", v.think_close);
  read(j, "answer_open", v.answer_open);
  read(j, "answer_close", v.answer_close);
}

namespace {

json trigger_json(const ScriptTrigger& t) {
  if (t.kind == ScriptTrigger::Kind::on_turn) return json{{"on_turn", t.turn}};
  return json{{"on_context_containing", t.substring}};
}

ScriptTrigger trigger_from(const json& j) {
  require_known_keys(j, {"on_turn", "on_context_containing"}, "trigger");
  if (j.size() != 1) throw ParseError("trigger", "expected exactly one trigger kind");
  if (j.contains("on_turn")) {
    std::size_t n = 0;
    read_size(j, "on_turn", n);
    return ScriptTrigger::on_turn(n);
  }
  if (!j["on_context_containing"].is_string()) {
    throw ParseError("trigger.on_context_containing", "expected a string");
  }
  return ScriptTrigger::on_context_containing(j["on_context_containing"].get<std::string>());
}

}  // namespace

void to_json(json& j, const ScriptedBehavior& v) {
  json entries = json::array();
  for (const auto& e : v.entries) {
    json entry{{"trigger", trigger_json(e.trigger)}, {"emission", e.emission}};
    if (e.emission_rate > 0.0) entry["emission_rate"] = e.emission_rate;
    entries.push_back(std::move(entry));
  }
  j = json{{"name", v.name},
           {"entries", std::move(entries)},
           {"emission_rate", v.emission_rate},
           {"prefill_rate", v.prefill_rate},
           {"piece_chars", v.piece_chars},
           {"chunk_tokens", v.chunk_tokens},
           {"supports_probe", v.supports_probe}};
}

void from_json(const json& j, ScriptedBehavior& v) {
  require_known_keys(j, {"name", "entries", "emission_rate", "prefill_rate", "piece_chars",
                         "chunk_tokens", "supports_probe"},
                     "behavior");
  read(j, "name", v.name);
  read(j, "emission_rate", v.emission_rate);
  read(j, "prefill_rate", v.prefill_rate);
  read_size(j, "piece_chars", v.piece_chars);
  read_size(j, "chunk_tokens", v.chunk_tokens);
  read(j, "supports_probe", v.supports_probe);
  if (j.contains("entries")) {
    if (!j["entries"].is_array()) throw ParseError("entries", "expected a list");
    v.entries.clear();
    for (const auto& e : j["entries"]) {
      require_known_keys(e, {"trigger", "emission", "emission_rate"}, "entries[]");
      ScriptEntry entry;
      if (!e.contains("trigger")) throw ParseError("entries[].trigger", "missing");
      entry.trigger = trigger_from(e["trigger"]);
      if (!e.contains("emission") || !e["emission"].is_string()) {
        throw ParseError("entries[].emission", "missing or not a string");
      }
      entry.emission = e["emission"].get<std::string>();
      read(e, "emission_rate", entry.emission_rate);
      v.entries.push_back(std::move(entry));
    }
  }
}

void to_json(json& j, const HttpBackendConfig& v) {
  j = json{{"name", v.name},         {"endpoint", v.endpoint},
           {"path", v.path},         {"model", v.model},
           {"auth_env", v.auth_env}, {"timeout_seconds", v.timeout_seconds},
           {"supports_probe", v.supports_probe}};
}

void from_json(const json& j, HttpBackendConfig& v) {
  require_known_keys(j, {"name", "endpoint", "path", "model", "auth_env", "timeout_seconds",
                         "supports_probe"},
                     "http");
  read(j, "name", v.name);
  read(j, "endpoint", v.endpoint);
  read(j, "path", v.path);
  read(j, "model", v.model);
  read(j, "auth_env", v.auth_env);
  read(j, "timeout_seconds", v.timeout_seconds);
  read(j, "supports_probe", v.supports_probe);
}

// -- configs -----------------------------------------------------------------

ExecutionMode execution_mode_from_string(std::string_view name) {
  if (name == "sequential" || name == "non-pipelined") return ExecutionMode::sequential;
  if (name == "overlapped" || name == "pipelined") return ExecutionMode::overlapped;
  throw ParseError("mode", "unknown execution mode '" + std::string(name) + "'");
}

void to_json(json& j, const RunConfig& v) {
  j = json{{"chunk_size", v.chunk_size},
           {"max_offload_tokens_per_span", v.max_offload_tokens_per_span},
           {"max_total_tokens", v.max_total_tokens},
           {"policy", v.policy.to_string()},
           {"probe_tokens", v.probe_tokens},
           {"max_probe_tokens", v.max_probe_tokens},
           {"stop_on_answer_close", v.stop_on_answer_close},
           {"temperature", v.temperature},
           {"mode", std::string(to_string(v.mode))},
           {"prefill_queue_depth", v.prefill_queue_depth},
           {"tags", v.tags}};
}

void from_json(const json& j, RunConfig& v) {
  require_known_keys(j, {"chunk_size", "max_offload_tokens_per_span", "max_total_tokens",
                         "policy", "probe_tokens", "max_probe_tokens", "stop_on_answer_close",
                         "temperature", "mode", "prefill_queue_depth", "tags"},
                     "run");
  read_size(j, "chunk_size", v.chunk_size);
  read_size(j, "max_offload_tokens_per_span", v.max_offload_tokens_per_span);
  read_size(j, "max_total_tokens", v.max_total_tokens);
  if (j.contains("policy")) {
    if (!j["policy"].is_string()) throw ParseError("policy", "expected a string");
    v.policy = OffloadPolicy::parse(j["policy"].get<std::string>());
  }
  read_size(j, "probe_tokens", v.probe_tokens);
  read_size(j, "max_probe_tokens", v.max_probe_tokens);
  read(j, "stop_on_answer_close", v.stop_on_answer_close);
  read(j, "temperature", v.temperature);
  if (j.contains("mode")) {
    if (!j["mode"].is_string()) throw ParseError("mode", "expected a string");
    v.mode = execution_mode_from_string(j["mode"].get<std::string>());
  }
  read_size(j, "prefill_queue_depth", v.prefill_queue_depth);
  read(j, "tags", v.tags);
}

void to_json(json& j, const RewardConfig& v) {
  j = json{{"coverage_peak", v.coverage_peak},
           {"weights", v.weights},
           {"essential_tags", v.resolved_essential_tags()},
           {"mismatch_penalty", v.mismatch_penalty},
           {"tags", v.tags}};
}

void from_json(const json& j, RewardConfig& v) {
  require_known_keys(j, {"coverage_peak", "weights", "essential_tags", "mismatch_penalty", "tags"},
                     "reward");
  read(j, "coverage_peak", v.coverage_peak);
  read(j, "weights", v.weights);
  read(j, "essential_tags", v.essential_tags);
  read(j, "mismatch_penalty", v.mismatch_penalty);
  read(j, "tags", v.tags);
}

void to_json(json& j, const MatchConfig& v) {
  j = json{{"similarity_threshold", v.similarity_threshold},
           {"window_stride", v.window_stride},
           {"normalization", std::string(to_string(v.normalization))},
           {"max_total_fraction", v.max_total_fraction}};
}

void from_json(const json& j, MatchConfig& v) {
  require_known_keys(j, {"similarity_threshold", "window_stride", "normalization",
                         "max_total_fraction"},
                     "match");
  read(j, "similarity_threshold", v.similarity_threshold);
  read_size(j, "window_stride", v.window_stride);
  if (j.contains("normalization")) {
    if (!j["normalization"].is_string()) throw ParseError("normalization", "expected a string");
    v.normalization = normalization_from_string(j["normalization"].get<std::string>());
  }
  read(j, "max_total_fraction", v.max_total_fraction);
}

void to_json(json& j, const SimConfig& v) {
  j = json{{"chunk_size", v.chunk_size},
           {"probe_cost_per_chunk",
            v.probe_cost_per_chunk ? json(*v.probe_cost_per_chunk) : json(nullptr)},
           {"include_handoff_residual", v.include_handoff_residual},
           {"mode", std::string(to_string(v.mode))},
           {"reprefill_full_context", v.reprefill_full_context},
           {"prompt_tokens", v.prompt_tokens}};
}

void from_json(const json& j, SimConfig& v) {
  require_known_keys(j, {"chunk_size", "probe_cost_per_chunk", "include_handoff_residual", "mode",
                         "reprefill_full_context", "prompt_tokens"},
                     "sim");
  read_size(j, "chunk_size", v.chunk_size);
  if (j.contains("probe_cost_per_chunk")) {
    const auto& p = j["probe_cost_per_chunk"];
    if (p.is_null()) {
      v.probe_cost_per_chunk.reset();
    } else if (p.is_number()) {
      v.probe_cost_per_chunk = p.get<double>();
    } else {
      throw ParseError("probe_cost_per_chunk", "expected a number or null");
    }
  }
  read(j, "include_handoff_residual", v.include_handoff_residual);
  if (j.contains("mode")) {
    if (!j["mode"].is_string()) throw ParseError("mode", "expected a string");
    v.mode = sim_mode_from_string(j["mode"].get<std::string>());
  }
  read(j, "reprefill_full_context", v.reprefill_full_context);
  read_size(j, "prompt_tokens", v.prompt_tokens);
}

// -- results -----------------------------------------------------------------

void to_json(json& j, const OffloadSpan& v) {
  j = json{{"start", v.start},
           {"end", v.end},
           {"origin", std::string(to_string(v.origin))},
           {"token_estimate", v.token_estimate}};
}

void from_json(const json& j, OffloadSpan& v) {
  require_known_keys(j, {"start", "end", "origin", "token_estimate"}, "span");
  read_size(j, "start", v.start);
  read_size(j, "end", v.end);
  if (j.contains("origin")) v.origin = span_origin_from_string(j["origin"].get<std::string>());
  read_size(j, "token_estimate", v.token_estimate);
}

void to_json(json& j, const GenerationTrace& v) {
  j = json{{"text", v.text},
           {"spans", v.spans},
           {"handoff_count", v.handoff_count},
           {"small_tokens", v.small_tokens},
           {"large_tokens", v.large_tokens}};
}

void from_json(const json& j, GenerationTrace& v) {
  require_known_keys(j, {"text", "spans", "handoff_count", "small_tokens", "large_tokens"},
                     "trace");
  read(j, "text", v.text);
  read(j, "spans", v.spans);
  read_size(j, "handoff_count", v.handoff_count);
  read_size(j, "small_tokens", v.small_tokens);
  read_size(j, "large_tokens", v.large_tokens);
}

void to_json(json& j, const GenerationResult& v) {
  json timing = json::array();
  for (const auto& t : v.timing) {
    timing.push_back({{"phase", t.phase}, {"tokens", t.tokens}, {"seconds", t.seconds}});
  }
  json handoffs = json::array();
  for (const auto& h : v.handoffs) {
    handoffs.push_back({{"offset", h.offset},
                        {"direction", direction_name(h.direction)},
                        {"reason", h.reason},
                        {"forced", h.forced},
                        {"overshoot_tokens", h.overshoot_tokens}});
  }
  json provenance = json::array();
  for (const auto& p : v.provenance) {
    provenance.push_back({{"owner", std::string(to_string(p.owner))},
                          {"raw_begin", p.raw_begin},
                          {"raw_end", p.raw_end},
                          {"tokens", p.tokens}});
  }
  j = json{{"trace", v.trace},
           {"timing", std::move(timing)},
           {"handoffs", std::move(handoffs)},
           {"provenance", std::move(provenance)},
           {"termination", v.termination},
           {"error", v.error ? json(*v.error) : json(nullptr)},
           {"warnings", v.warnings},
           {"total_seconds", v.total_seconds()}};
}

void to_json(json& j, const RewardBreakdown& v) {
  j = json{{"accuracy", v.accuracy},   {"format", v.format},
           {"tag_count", v.tag_count}, {"coverage_term", v.coverage_term},
           {"coverage", v.coverage},   {"total", v.total}};
}

void to_json(json& j, const AnnotationRecord& v) {
  json matches = json::array();
  for (const auto& m : v.matches) {
    json entry{{"snippet_index", m.snippet_index}, {"retained", m.retained}};
    if (m.match) {
      entry["span"] = m.match->span;
      entry["similarity"] = m.match->similarity;
    } else {
      entry["span"] = nullptr;
      entry["similarity"] = nullptr;
    }
    matches.push_back(std::move(entry));
  }
  j = json{{"question", v.question},
           {"trace", v.trace},
           {"snippets", v.snippets},
           {"matches", std::move(matches)},
           {"matched_spans", v.matched_spans},
           {"annotated_text", v.annotated_text},
           {"offload_fraction", v.offload_fraction},
           {"status", std::string(to_string(v.status))},
           {"dropped_for_budget", v.dropped_for_budget}};
}

void from_json(const json& j, AnnotationRecord& v) {
  require_known_keys(j, {"question", "trace", "snippets", "matches", "matched_spans",
                         "annotated_text", "offload_fraction", "status", "dropped_for_budget"},
                     "record");
  read(j, "question", v.question);
  read(j, "trace", v.trace);
  read(j, "snippets", v.snippets);
  v.matches.clear();
  if (j.contains("matches")) {
    for (const auto& e : j["matches"]) {
      SnippetMatch m;
      read_size(e, "snippet_index", m.snippet_index);
      read(e, "retained", m.retained);
      if (e.contains("span") && !e["span"].is_null()) {
        FuzzyMatch f;
        f.span = e["span"].get<OffloadSpan>();
        read(e, "similarity", f.similarity);
        m.match = f;
      }
      v.matches.push_back(std::move(m));
    }
  }
  read(j, "matched_spans", v.matched_spans);
  read(j, "annotated_text", v.annotated_text);
  read(j, "offload_fraction", v.offload_fraction);
  if (j.contains("status")) {
    v.status = annotation_status_from_string(j["status"].get<std::string>());
  }
  read_size(j, "dropped_for_budget", v.dropped_for_budget);
}

void to_json(json& j, const SimResult& v) {
  const auto& b = v.breakdown;
  j = json{{"label", v.label},
           {"total_seconds", v.total_seconds},
           {"breakdown",
            {{"small_decode", b.small_decode},
             {"large_decode", b.large_decode},
             {"exposed_prefill", b.exposed_prefill},
             {"probe_overhead", b.probe_overhead},
             {"residual_handoff", b.residual_handoff}}},
           {"speedup_vs", v.speedup_vs}};
}

void to_json(json& j, const SegmentedTrace& v) {
  j = json::array();
  for (const auto& s : v.segments) {
    j.push_back({{"owner", std::string(to_string(s.owner))}, {"tokens", s.tokens}});
  }
}

void from_json(const json& j, SegmentedTrace& v) {
  if (!j.is_array()) throw ParseError("segments", "expected a list");
  v.segments.clear();
  for (const auto& e : j) {
    require_known_keys(e, {"owner", "tokens"}, "segments[]");
    Segment s;
    if (!e.contains("owner") || !e["owner"].is_string()) {
      throw ParseError("segments[].owner", "missing or not a string");
    }
    const auto owner = e["owner"].get<std::string>();
    if (owner == "small") {
      s.owner = SegmentOwner::small;
    } else if (owner == "large") {
      s.owner = SegmentOwner::large;
    } else {
      throw ParseError("segments[].owner", "expected small or large");
    }
    read_size(e, "tokens", s.tokens);
    v.segments.push_back(s);
  }
}

}  // namespace handoff
