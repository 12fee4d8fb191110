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

#include <algorithm>
#include <string>
#include <vector>

#include "doctest.h"
#include "handoff/http_backend.hpp"
#include "handoff/orchestrator.hpp"
#include "handoff/scripted_backend.hpp"
#include "provenance.hpp"
#include "scenarios.hpp"
#include "stub_server.hpp"

using namespace handoff;

namespace {

struct Outcome {
  GenerationResult result;
  std::string small_context;
  std::string large_context;
};

Outcome run(const scenarios::Scenario& s) {
  ScriptedBackend small(s.small);
  ScriptedBackend large(s.large);
  auto ss = small.open_session(ModelRole::small);
  auto ls = large.open_session(ModelRole::large);
  GenerationResult result = run_cooperative(s.question, ss, ls, s.config);
  return {std::move(result), ss.context(), ls.context()};
}

scenarios::Scenario find(std::string_view name) {
  for (auto& s : scenarios::all()) {
    if (s.name == name) return s;
  }
  throw std::runtime_error("no scenario " + std::string(name));
}

std::size_t count_direction(const GenerationResult& r, HandoffDirection d) {
  return static_cast<std::size_t>(std::count_if(
      r.handoffs.begin(), r.handoffs.end(), [&](const HandoffRecord& h) { return h.direction == d; }));
}

double phase_seconds(const GenerationResult& r, std::string_view phase) {
  double total = 0.0;
  for (const auto& t : r.timing) {
    if (t.phase == phase) total += t.seconds;
  }
  return total;
}

ScriptedBehavior behavior(std::vector<ScriptEntry> entries, std::size_t piece_chars = 0,
                          bool probe = true) {
  ScriptedBehavior b = scenarios::behavior("b", std::move(entries), piece_chars);
  b.supports_probe = probe;
  return b;
}

// Delegates to a real session but reports the close tag from every probe.
class ProbeMismatchDriver final : public SessionDriver {
 public:
  explicit ProbeMismatchDriver(BackendSession inner) : inner_(std::move(inner)) {}
  PrefillAck prefill(std::string_view, std::string_view chunk) override {
    return inner_.prefill(chunk);
  }
  DecodeResult decode(std::string_view, const CompletionRequest& request,
                      const ChunkCallback& on_chunk) override {
    return inner_.decode_stream(request, on_chunk);
  }
  std::string probe(std::string_view, std::size_t) override { return "</bigmodel>"; }
  std::unique_ptr<SessionDriver> clone() const override {
    throw CapabilityError("not clonable");
  }

 private:
  BackendSession inner_;
};

}  // namespace

TEST_CASE("scripted scenarios reproduce their expected traces") {
  for (const auto& s : scenarios::all()) {
    CAPTURE(s.name);
    const Outcome o = run(s);
    CHECK_FALSE(o.result.error);
    CHECK(o.result.trace.text == s.expected_text);
    CHECK(o.result.termination == s.expected_termination);
    REQUIRE(o.result.trace.spans.size() == s.expected_origins.size());
    for (std::size_t i = 0; i < s.expected_origins.size(); ++i) {
      CHECK(o.result.trace.spans[i].origin == s.expected_origins[i]);
    }
    CHECK(provenance::large_equals_spans(o.result, s.config.tags));
    CHECK(o.small_context == s.question + o.result.trace.text);
    CHECK(spans_well_formed(o.result.trace.spans, o.result.trace.stripped_text().size()));
    if (s.config.policy.kind == PolicyKind::learned_tags) {
      const auto extracted = extract_spans(o.result.trace.text, s.config.tags);
      REQUIRE(extracted.size() == o.result.trace.spans.size());
      for (std::size_t i = 0; i < extracted.size(); ++i) {
        CHECK(extracted[i].same_interval(o.result.trace.spans[i]));
      }
    }
  }
}

TEST_CASE("scenario runs are deterministic") {
  for (const auto& s : scenarios::all()) {
    CAPTURE(s.name);
    const auto a = run(s).result;
    const auto b = run(s).result;
    CHECK(a.trace.text == b.trace.text);
    CHECK(a.handoffs.size() == b.handoffs.size());
  }
}

TEST_CASE("handoff log pairs every span") {
  for (const auto& s : scenarios::all()) {
    CAPTURE(s.name);
    const auto r = run(s).result;
    CHECK(r.handoffs.size() == 2 * r.trace.spans.size());
    CHECK(r.trace.handoff_count == r.trace.spans.size());
    CHECK(count_direction(r, HandoffDirection::to_large) == r.trace.spans.size());
  }
}

TEST_CASE("takeback at the second controlling check") {
  const auto r = run(find("takeback-at-second-check")).result;
  REQUIRE(r.trace.spans.size() == 1);
  CHECK(r.trace.spans[0].token_estimate == 40);
  CHECK(r.trace.large_tokens == 40);
  const std::string stripped = r.trace.stripped_text();
  CHECK(stripped.substr(r.trace.spans[0].start, r.trace.spans[0].length()) ==
        scenarios::numbered("L", 1, 40));
  REQUIRE(r.handoffs.size() == 2);
  CHECK(r.handoffs[0].direction == HandoffDirection::to_large);
  CHECK(r.handoffs[1].direction == HandoffDirection::to_small);
  CHECK(r.handoffs[1].reason == "probe");
  CHECK_FALSE(r.handoffs[1].forced);
}

TEST_CASE("forced takeback on budget") {
  const auto r = run(find("forced-takeback-budget")).result;
  REQUIRE(r.trace.spans.size() == 1);
  CHECK(r.trace.spans[0].origin == SpanOrigin::forced_takeback);
  CHECK(r.trace.large_tokens == 6);
  REQUIRE(r.handoffs.size() == 2);
  CHECK(r.handoffs[1].forced);
  CHECK(r.handoffs[1].reason == "forced-budget");
  const bool controller_close =
      std::any_of(r.provenance.begin(), r.provenance.end(),
                  [](const ProvenanceSegment& p) { return p.owner == Owner::controller; });
  CHECK(controller_close);
}

TEST_CASE("forced takeback when the large model ends") {
  const auto r = run(find("forced-takeback-large-eos")).result;
  REQUIRE(r.handoffs.size() == 2);
  CHECK(r.handoffs[1].reason == "forced-large-eos");
}

TEST_CASE("large model closing its own span") {
  const auto r = run(find("single-span-large-closes")).result;
  REQUIRE(r.handoffs.size() == 2);
  CHECK(r.handoffs[1].reason == "large-emitted");
  CHECK_FALSE(r.handoffs[1].forced);
}

TEST_CASE("never-offload treats tags as content") {
  const auto r = run(find("never-offload-policy")).result;
  CHECK(r.trace.spans.empty());
  CHECK(r.trace.large_tokens == 0);
  CHECK_FALSE(r.warnings.empty());
}

TEST_CASE("overlapped mode matches sequential output and hides prefill") {
  auto s = find("three-spans");
  const auto seq = run(s).result;
  s.config.mode = ExecutionMode::overlapped;
  const auto ovl = run(s).result;
  CHECK(seq.trace.text == ovl.trace.text);
  CHECK(phase_seconds(ovl, "streaming-prefill") <= phase_seconds(seq, "streaming-prefill"));
  CHECK(ovl.total_seconds() <= seq.total_seconds() + 1e-12);
}

TEST_CASE("timing records the expected phases") {
  const auto r = run(find("single-span-probe-takeback")).result;
  for (const char* phase : {"prompt-prefill", "small-decode", "large-decode", "controlling-prefill",
                            "probe", "streaming-prefill"}) {
    CAPTURE(phase);
    CHECK(std::any_of(r.timing.begin(), r.timing.end(),
                      [&](const PhaseTiming& t) { return t.phase == phase; }));
  }
  CHECK(r.total_seconds() > 0.0);
}

TEST_CASE("controlling prefill cycle decisions") {
  const ControlTags tags;
  SUBCASE("exact close tag takes back control") {
    ScriptedBackend b(behavior({{ScriptTrigger::on_context_containing("X"), "</bigmodel> more", 0.0}}));
    auto s = b.open_session(ModelRole::small);
    s.prefill("q ");
    const auto d = controlling_prefill_cycle(s, "X", tags, 1);
    CHECK(d.action == ControlAction::take_back_control);
    CHECK(d.probe == "</bigmodel>");
    CHECK(s.context() == "q X");
    CHECK(d.prefill_tokens == 1);
  }
  SUBCASE("a close-tag prefix keeps the large model and asks for a wider probe") {
    ScriptedBackend b(behavior({{ScriptTrigger::on_context_containing("X"), "</bigmodel>", 0.0}}, 3));
    auto s = b.open_session(ModelRole::small);
    s.prefill("q ");
    const auto d = controlling_prefill_cycle(s, "X", tags, 1);
    CHECK(d.action == ControlAction::continue_large);
    CHECK(d.partial_match);
    CHECK(d.probe == "</b");
    const auto wider = controlling_prefill_cycle(s, "", tags, 4);
    CHECK(wider.action == ControlAction::take_back_control);
  }
  SUBCASE("unrelated text continues") {
    ScriptedBackend b(behavior({{ScriptTrigger::on_turn(1), "keep going", 0.0}}));
    auto s = b.open_session(ModelRole::small);
    s.prefill("q");
    const auto d = controlling_prefill_cycle(s, " chunk", tags, 2);
    CHECK(d.action == ControlAction::continue_large);
    CHECK_FALSE(d.partial_match);
  }
  SUBCASE("probe-less backends use a forked single-token check") {
    ScriptedBackend b(
        behavior({{ScriptTrigger::on_context_containing("X"), "</bigmodel> more", 0.0}}, 0, false));
    auto s = b.open_session(ModelRole::small);
    s.prefill("q ");
    const auto d = controlling_prefill_cycle(s, "X", tags, 1);
    CHECK(d.degraded);
    CHECK(d.action == ControlAction::take_back_control);
    CHECK(s.context() == "q X");
  }
}

TEST_CASE("a takeback that does not start with the close tag is an error") {
  const auto s = find("single-span-probe-takeback");
  ScriptedBackend small(s.small);
  ScriptedBackend large(s.large);
  auto ss = small.open_session(ModelRole::small);
  BackendSession liar("liar", ModelRole::small, std::make_unique<ProbeMismatchDriver>(ss.fork()));
  auto ls = large.open_session(ModelRole::large);
  const auto r = run_cooperative(s.question, liar, ls, s.config);
  REQUIRE(r.error);
  CHECK(r.termination == "error");
  CHECK(r.handoffs.size() == 1);
}

TEST_CASE("random policy offloads at planned offsets") {
  scenarios::Scenario s;
  s.small = behavior({scenarios::on_turn(1, "<think>" + scenarios::numbered("s", 1, 3000) +
                                                " </think> <answer> 1 </answer>")});
  s.large = behavior({scenarios::on_turn(1, scenarios::numbered("L", 1, 3000))});
  s.config.max_total_tokens = 2000;
  s.config.chunk_size = 16;
  s.config.policy.kind = PolicyKind::random_offload;
  s.config.policy.mean_span_tokens = 50;
  double sum = 0.0;
  const int seeds = 20;
  for (int seed = 0; seed < seeds; ++seed) {
    s.config.policy.probability = 0.25;
    s.config.policy.seed = static_cast<std::uint64_t>(seed);
    const auto r = run(s).result;
    CAPTURE(seed);
    CHECK_FALSE(r.error);
    for (std::size_t i = 0; i < r.trace.spans.size(); ++i) {
      const bool cut_by_limit = i + 1 == r.trace.spans.size() && r.termination == "max-total-tokens";
      if (!cut_by_limit) CHECK(r.trace.spans[i].origin == SpanOrigin::random_policy);
    }
    CHECK(provenance::large_equals_spans(r, s.config.tags));
    sum += coverage(r.trace, CoverageCounting::backend_tokens);
  }
  CHECK(sum / seeds == doctest::Approx(0.25).epsilon(0.3));
}

TEST_CASE("random plan statistics") {
  const std::size_t budget = 10000;
  double mass = 0.0;
  std::size_t spans = 0;
  std::size_t span_tokens = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto plan = random_offload_policy(budget, 0.25, seed, 200);
    CHECK(spans_well_formed(plan, budget));
    for (const auto& p : plan) {
      mass += static_cast<double>(p.length());
      span_tokens += p.length();
      CHECK(p.origin == SpanOrigin::random_policy);
    }
    spans += plan.size();
  }
  CHECK(mass / (100.0 * budget) == doctest::Approx(0.25).epsilon(0.08));
  CHECK(static_cast<double>(span_tokens) / static_cast<double>(spans) ==
        doctest::Approx(200).epsilon(0.25));
  CHECK(random_offload_policy(budget, 0.0, 1, 200).empty());
  CHECK(random_offload_policy(budget, 1.0, 1, 200).size() == 1);
  CHECK(random_offload_policy(budget, 0.3, 9, 100) == random_offload_policy(budget, 0.3, 9, 100));
  CHECK_THROWS_AS(random_offload_policy(budget, 1.5, 1, 200), DomainError);
}

TEST_CASE("policy strings") {
  CHECK(OffloadPolicy::parse("learned-tags").kind == PolicyKind::learned_tags);
  CHECK(OffloadPolicy::parse("never-offload").kind == PolicyKind::never_offload);
  const auto p = OffloadPolicy::parse("random-offload:p=0.05,seed=7");
  CHECK(p.kind == PolicyKind::random_offload);
  CHECK(p.probability == 0.05);
  CHECK(p.seed == 7);
  const auto positional = OffloadPolicy::parse("random-offload:0.1:3");
  CHECK(positional.probability == 0.1);
  CHECK(positional.seed == 3);
  CHECK(OffloadPolicy::parse(p.to_string()).probability == 0.05);
  CHECK_THROWS_AS(OffloadPolicy::parse("random-offload:p=0.1"), ParseError);
  CHECK_THROWS_AS(OffloadPolicy::parse("sometimes"), ParseError);
}

TEST_CASE("run config validation") {
  RunConfig c;
  CHECK_NOTHROW(c.validate());
  CHECK(c.probe_ceiling() == c.tags.close_tag.size());
  c.chunk_size = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  RunConfig p;
  p.policy.kind = PolicyKind::random_offload;
  p.policy.probability = 2.0;
  CHECK_THROWS_AS(p.validate(), ConfigError);
}

TEST_CASE("sessions must be fresh") {
  const auto s = find("no-offload");
  ScriptedBackend small(s.small);
  ScriptedBackend large(s.large);
  auto ss = small.open_session(ModelRole::small);
  auto ls = large.open_session(ModelRole::large);
  ss.prefill("stale");
  const auto r = run_cooperative(s.question, ss, ls, s.config);
  CHECK(r.error);
}

TEST_CASE("cooperative run against an OpenAI-compatible server") {
  for (const char* name : {"single-span-probe-takeback", "three-spans", "three-spans-overlapped"}) {
    CAPTURE(name);
    const auto s = find(name);
    const std::string transcript = s.question + s.expected_text;
    stub::TranscriptServer server(stub::Transcripts{{"small", transcript}, {"large", transcript}});
    HttpBackendConfig sc;
    sc.name = "small";
    sc.model = "small";
    sc.endpoint = server.endpoint();
    HttpBackendConfig lc = sc;
    lc.name = "large";
    lc.model = "large";
    HttpBackend small(sc);
    HttpBackend large(lc);
    auto ss = small.open_session(ModelRole::small);
    auto ls = large.open_session(ModelRole::large);
    const auto r = run_cooperative(s.question, ss, ls, s.config);
    CHECK_FALSE(r.error);
    CHECK(r.trace.text == s.expected_text);
    CHECK(r.termination == "answer-close");
    CHECK(provenance::large_equals_spans(r, s.config.tags));
    CHECK(server.requests() > 0);
  }
}

TEST_CASE("backend failures come back as errors with a partial trace") {
  const auto s = find("single-span-probe-takeback");
  ScriptedBackend small(s.small);
  HttpBackendConfig dead;
  dead.endpoint = "http://127.0.0.1:1";
  dead.model = "m";
  dead.timeout_seconds = 2;
  HttpBackend large(dead);
  auto ss = small.open_session(ModelRole::small);
  auto ls = large.open_session(ModelRole::large);
  const auto r = run_cooperative(s.question, ss, ls, s.config);
  CHECK(r.error);
  CHECK(r.termination == "error");
  CHECK(r.trace.text == "<think> We need the sum. <bigmodel>");
  CHECK(r.handoffs.size() == 1);
}
