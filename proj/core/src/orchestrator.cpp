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

#include "handoff/orchestrator.hpp"

#include <algorithm>
#include <condition_variable>
#include <deque>
#include <exception>
#include <mutex>
#include <sstream>
#include <thread>

#include "handoff/errors.hpp"

namespace handoff {

// ---------------------------------------------------------------------------
// Policy and config
// ---------------------------------------------------------------------------

namespace {

double parse_double(std::string_view field, std::string_view text) {
  try {
    std::size_t used = 0;
    const double v = std::stod(std::string(text), &used);
    if (used != text.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw ParseError(std::string(field), "expected a number, got '" + std::string(text) + "'");
  }
}

std::uint64_t parse_unsigned(std::string_view field, std::string_view text) {
  try {
    std::size_t used = 0;
    const unsigned long long v = std::stoull(std::string(text), &used);
    if (used != text.size() || text.starts_with('-')) throw std::invalid_argument("bad");
    return v;
  } catch (const std::exception&) {
    throw ParseError(std::string(field), "expected a non-negative integer, got '" +
                                             std::string(text) + "'");
  }
}

std::vector<std::string_view> split(std::string_view text, char sep) {
  std::vector<std::string_view> parts;
  while (true) {
    const auto at = text.find(sep);
    parts.push_back(text.substr(0, at));
    if (at == std::string_view::npos) break;
    text.remove_prefix(at + 1);
  }
  return parts;
}

}  // namespace

OffloadPolicy OffloadPolicy::parse(std::string_view text) {
  OffloadPolicy policy;
  const auto colon = text.find(':');
  const std::string_view name = text.substr(0, colon);
  if (name == "learned-tags") {
    policy.kind = PolicyKind::learned_tags;
  } else if (name == "never-offload") {
    policy.kind = PolicyKind::never_offload;
  } else if (name == "random-offload") {
    policy.kind = PolicyKind::random_offload;
  } else {
    throw ParseError("policy", "unknown policy '" + std::string(name) + "'");
  }
  if (colon == std::string_view::npos) {
    if (policy.kind == PolicyKind::random_offload) {
      throw ParseError("policy", "random-offload needs p and seed");
    }
    return policy;
  }
  if (policy.kind != PolicyKind::random_offload) {
    throw ParseError("policy", std::string(name) + " takes no parameters");
  }

  bool have_p = false;
  bool have_seed = false;
  const std::string_view params = text.substr(colon + 1);
  const bool keyed = params.find('=') != std::string_view::npos;
  const auto parts = split(params, keyed ? ',' : ':');
  for (std::size_t i = 0; i < parts.size(); ++i) {
    std::string_view key;
    std::string_view value = parts[i];
    if (keyed) {
      const auto eq = parts[i].find('=');
      if (eq == std::string_view::npos) throw ParseError("policy", "expected key=value");
      key = parts[i].substr(0, eq);
      value = parts[i].substr(eq + 1);
    } else {
      key = i == 0 ? "p" : i == 1 ? "seed" : i == 2 ? "span" : "";
    }
    if (key == "p") {
      policy.probability = parse_double("policy.p", value);
      have_p = true;
    } else if (key == "seed") {
      policy.seed = parse_unsigned("policy.seed", value);
      have_seed = true;
    } else if (key == "span") {
      policy.mean_span_tokens = parse_unsigned("policy.span", value);
    } else {
      throw ParseError("policy", "unknown parameter '" + std::string(key) + "'");
    }
  }
  if (!have_p || !have_seed) throw ParseError("policy", "random-offload needs p and seed");
  if (!(policy.probability >= 0.0 && policy.probability <= 1.0)) {
    throw ParseError("policy.p", "must lie in [0, 1]");
  }
  if (policy.mean_span_tokens < 1) throw ParseError("policy.span", "must be at least 1");
  return policy;
}

std::string OffloadPolicy::to_string() const {
  switch (kind) {
    case PolicyKind::learned_tags: return "learned-tags";
    case PolicyKind::never_offload: return "never-offload";
    case PolicyKind::random_offload: {
      std::ostringstream os;
      os << "random-offload:p=" << probability << ",seed=" << seed
         << ",span=" << mean_span_tokens;
      return os.str();
    }
  }
  return "learned-tags";
}

std::string_view to_string(ExecutionMode mode) noexcept {
  return mode == ExecutionMode::sequential ? "sequential" : "overlapped";
}

std::string_view to_string(Owner owner) noexcept {
  switch (owner) {
    case Owner::small: return "small";
    case Owner::large: return "large";
    case Owner::controller: return "controller";
  }
  return "?";
}

void RunConfig::validate() const {
  tags.validate();
  if (chunk_size < 1) throw ConfigError("chunk_size must be at least 1");
  if (max_offload_tokens_per_span < 1) {
    throw ConfigError("max_offload_tokens_per_span must be at least 1");
  }
  if (max_total_tokens < 1) throw ConfigError("max_total_tokens must be at least 1");
  if (probe_tokens < 1) throw ConfigError("probe_tokens must be at least 1");
  if (probe_tokens > probe_ceiling()) {
    throw ConfigError("probe_tokens exceeds the close-tag probe ceiling");
  }
  if (prefill_queue_depth < 1) throw ConfigError("prefill_queue_depth must be at least 1");
  if (!(policy.probability >= 0.0 && policy.probability <= 1.0)) {
    throw ConfigError("offload probability must lie in [0, 1]");
  }
}

double GenerationResult::total_seconds() const noexcept {
  double total = 0.0;
  for (const auto& t : timing) total += t.seconds;
  return total;
}

// ---------------------------------------------------------------------------
// Controlling prefill
// ---------------------------------------------------------------------------

ControlDecision controlling_prefill_cycle(BackendSession& small,
                                          std::string_view large_chunk,
                                          const ControlTags& tags,
                                          std::size_t probe_tokens) {
  ControlDecision decision;
  const PrefillAck ack = small.prefill(large_chunk);
  decision.prefill_seconds = ack.seconds;
  decision.prefill_tokens = ack.tokens;

  const std::string_view close = tags.close_tag;
  try {
    decision.probe = small.greedy_probe(probe_tokens);
  } catch (const CapabilityError&) {
    // Single greedy token on a throwaway fork; the session itself is untouched.
    BackendSession scratch = small.fork();
    CompletionRequest one;
    one.max_tokens = 1;
    one.temperature = 0.0;
    one.include_stop = true;
    decision.probe = scratch.decode_stream(one).text();
    decision.degraded = true;
    const bool prefix = !decision.probe.empty() &&
                        (close.starts_with(decision.probe) ||
                         std::string_view(decision.probe).starts_with(close));
    decision.action =
        prefix ? ControlAction::take_back_control : ControlAction::continue_large;
    return decision;
  }

  const std::string_view probe = decision.probe;
  if (probe.starts_with(close)) {
    decision.action = ControlAction::take_back_control;
  } else {
    decision.partial_match = !probe.empty() && close.starts_with(probe);
  }
  return decision;
}

// ---------------------------------------------------------------------------
// Cooperative run
// ---------------------------------------------------------------------------

namespace {

struct PrefillTally {
  std::size_t tokens = 0;
  double seconds = 0.0;
};

// Streaming prefill of small-model output into the large session. In
// sequential mode pushes are buffered and prefilled in one request at drain;
// in overlapped mode a worker prefills chunks as they arrive through a bounded
// FIFO while the coordinator keeps decoding.
class StreamingPrefiller {
 public:
  StreamingPrefiller(BackendSession& large, ExecutionMode mode, std::size_t depth)
      : large_(large), mode_(mode), depth_(depth) {
    if (mode_ == ExecutionMode::overlapped) {
      worker_ = std::thread([this] { work(); });
    }
  }

  ~StreamingPrefiller() {
    {
      std::lock_guard lock(mutex_);
      stopping_ = true;
    }
    cv_.notify_all();
    if (worker_.joinable()) worker_.join();
  }

  StreamingPrefiller(const StreamingPrefiller&) = delete;
  StreamingPrefiller& operator=(const StreamingPrefiller&) = delete;

  void push(std::string text) {
    if (text.empty()) return;
    if (mode_ == ExecutionMode::sequential) {
      pending_ += text;
      return;
    }
    std::unique_lock lock(mutex_);
    cv_.wait(lock, [this] { return queue_.size() < depth_ || failure_; });
    queue_.push_back(std::move(text));
    cv_.notify_all();
  }

  // Blocks until the large session holds everything pushed so far.
  PrefillTally drain() {
    if (mode_ == ExecutionMode::sequential) {
      PrefillTally tally;
      if (!pending_.empty()) {
        const PrefillAck ack = large_.prefill(pending_);
        tally = {ack.tokens, ack.seconds};
        pending_.clear();
      }
      return tally;
    }
    std::unique_lock lock(mutex_);
    cv_.wait(lock, [this] { return (queue_.empty() && !in_flight_) || failure_; });
    if (failure_) std::rethrow_exception(failure_);
    PrefillTally tally = tally_;
    tally_ = {};
    return tally;
  }

 private:
  void work() {
    while (true) {
      std::string chunk;
      {
        std::unique_lock lock(mutex_);
        cv_.wait(lock, [this] { return stopping_ || !queue_.empty(); });
        if (queue_.empty()) return;
        chunk = std::move(queue_.front());
        queue_.pop_front();
        in_flight_ = true;
      }
      cv_.notify_all();
      try {
        const PrefillAck ack = large_.prefill(chunk);
        std::lock_guard lock(mutex_);
        tally_.tokens += ack.tokens;
        tally_.seconds += ack.seconds;
        in_flight_ = false;
      } catch (...) {
        std::lock_guard lock(mutex_);
        failure_ = std::current_exception();
        in_flight_ = false;
        queue_.clear();
      }
      cv_.notify_all();
    }
  }

  BackendSession& large_;
  ExecutionMode mode_;
  std::size_t depth_;
  std::string pending_;

  std::mutex mutex_;
  std::condition_variable cv_;
  std::deque<std::string> queue_;
  bool in_flight_ = false;
  bool stopping_ = false;
  PrefillTally tally_;
  std::exception_ptr failure_;
  std::thread worker_;
};

class CooperativeRun {
 public:
  CooperativeRun(std::string_view question, BackendSession& small,
                 BackendSession& large, const RunConfig& config)
      : question_(question),
        small_(small),
        large_(large),
        config_(config),
        tags_(config.tags),
        prefiller_(large, config.mode, config.prefill_queue_depth),
        probe_width_(config.probe_tokens) {}

  GenerationResult run() {
    try {
      if (question_.empty()) throw ConfigError("question must be non-empty");
      if (small_.context_committed() != 0 || large_.context_committed() != 0) {
        throw ConfigError("sessions must be fresh");
      }
      if (config_.policy.kind == PolicyKind::random_offload) {
        plan_ = random_offload_policy(config_.max_total_tokens, config_.policy.probability,
                                      config_.policy.seed, config_.policy.mean_span_tokens);
      }
      const PrefillAck small_prompt = small_.prefill(question_);
      const PrefillAck large_prompt = large_.prefill(question_);
      record("prompt-prefill", small_prompt.tokens + large_prompt.tokens,
             std::max(small_prompt.seconds, large_prompt.seconds));

      while (state_.phase != Phase::finished) {
        if (state_.phase == Phase::small_decoding) {
          small_turn();
        } else {
          large_turn();
        }
      }
    } catch (const std::exception& e) {
      result_.error = e.what();
      result_.termination = "error";
    }
    finalize();
    return std::move(result_);
  }

 private:
  // -- trace bookkeeping ---------------------------------------------------

  std::size_t decoded_total() const noexcept {
    return result_.trace.small_tokens + result_.trace.large_tokens;
  }

  void record(std::string phase, std::size_t tokens, double seconds) {
    auto& timing = result_.timing;
    if (!timing.empty() && timing.back().phase == phase) {
      timing.back().tokens += tokens;
      timing.back().seconds += seconds;
    } else {
      timing.push_back({std::move(phase), tokens, seconds});
    }
  }

  // Appends text to the trace and reacts to every completed offload tag.
  void append(Owner owner, std::string_view text, std::size_t tokens, bool forced = false) {
    auto& trace = result_.trace;
    const std::size_t begin = trace.text.size();
    trace.text.append(text);
    auto& prov = result_.provenance;
    if (!prov.empty() && prov.back().owner == owner && prov.back().raw_end == begin) {
      prov.back().raw_end = trace.text.size();
      prov.back().tokens += tokens;
    } else if (!text.empty() || tokens > 0) {
      prov.push_back({owner, begin, trace.text.size(), tokens});
    }

    ScanResult scan = scan_chunk(scanner_, text, tags_);
    scanner_ = std::move(scan.state);
    for (const auto& event : scan.events) {
      const std::size_t offset = event.offset - tag_chars_;
      tag_chars_ += event.kind == TagKind::open ? tags_.open_tag.size()
                                                : tags_.close_tag.size();
      on_tag(owner, event.kind, offset, forced);
    }
  }

  void on_tag(Owner owner, TagKind kind, std::size_t offset, bool forced) {
    const bool model_owned = owner != Owner::controller;
    if (model_owned && config_.policy.kind != PolicyKind::learned_tags) {
      result_.warnings.push_back("model-emitted offload tag at offset " +
                                 std::to_string(offset) + " ignored by policy " +
                                 config_.policy.to_string());
      return;
    }
    ProtocolEvent event;
    event.offset = offset;
    if (kind == TagKind::open) {
      event.kind = EventKind::open_tag_seen;
    } else {
      event.kind = forced ? EventKind::budget_exhausted : EventKind::close_tag_seen;
    }
    const StepResult next = step(state_, event, config_.max_offload_tokens_per_span);
    state_ = next.state;

    if (next.action == Action::switch_to_large) {
      span_tokens_ = 0;
      last_chunk_tokens_ = 0;
      probe_width_ = config_.probe_tokens;
      HandoffRecord h;
      h.offset = offset;
      h.direction = HandoffDirection::to_large;
      h.reason = owner == Owner::controller ? "random-policy" : "emitted";
      result_.handoffs.push_back(h);
    } else if (next.action == Action::switch_to_small && next.closed_span) {
      OffloadSpan span = *next.closed_span;
      span.token_estimate = span_tokens_;
      if (span.origin != SpanOrigin::forced_takeback &&
          config_.policy.kind == PolicyKind::random_offload) {
        span.origin = SpanOrigin::random_policy;
      }
      if (span.end > span.start) {
        result_.trace.spans.push_back(span);
      } else {
        result_.warnings.push_back("empty offload span at offset " + std::to_string(offset));
      }
      HandoffRecord h;
      h.offset = offset;
      h.direction = HandoffDirection::to_small;
      h.forced = forced;
      h.reason = pending_close_reason_;
      h.overshoot_tokens = last_chunk_tokens_;
      result_.handoffs.push_back(h);
    }
  }

  // Text written by the coordinator itself reaches both models as prefill.
  void inject(std::string_view tag, bool forced, std::string reason) {
    pending_close_reason_ = std::move(reason);
    append(Owner::controller, tag, 0, forced);
    const PrefillAck ack = small_.prefill(tag);
    record("controlling-prefill", ack.tokens, ack.seconds);
    prefiller_.push(std::string(tag));
  }

  void expect_context(const BackendSession& session) const {
    if (session.context().size() != question_.size() + result_.trace.text.size() ||
        !session.context().starts_with(question_) ||
        !std::string_view(session.context()).substr(question_.size()).starts_with(
            result_.trace.text)) {
      throw ContextDivergenceError("session '" + session.id() +
                                   "' context diverged from the trace");
    }
  }

  void finish(std::string termination) {
    if (state_.phase == Phase::large_decoding) {
      inject(tags_.close_tag, true, "forced-max-tokens");
    }
    state_ = step(state_, {EventKind::end_of_stream, 0}).state;
    result_.termination = std::move(termination);
  }

  // -- phases --------------------------------------------------------------

  void small_turn() {
    const std::size_t total = decoded_total();
    if (total >= config_.max_total_tokens) return finish("max-total-tokens");

    std::size_t max_tokens = std::min(config_.chunk_size, config_.max_total_tokens - total);
    if (config_.policy.kind == PolicyKind::random_offload && next_plan_ < plan_.size()) {
      const OffloadSpan& planned = plan_[next_plan_];
      if (total >= planned.start) {
        inject(tags_.open_tag, false, "random-policy");
        return;
      }
      max_tokens = std::min(max_tokens, planned.start - total);
    }

    CompletionRequest request;
    request.max_tokens = max_tokens;
    request.temperature = config_.temperature;
    if (config_.policy.kind == PolicyKind::learned_tags) {
      request.stop_sequences.push_back(tags_.open_tag);
    }
    if (config_.stop_on_answer_close) request.stop_sequences.push_back(tags_.answer_close);

    expect_context(small_);
    const DecodeResult decoded = small_.decode_stream(request);
    result_.trace.small_tokens += decoded.tokens();
    small_decode_since_drain_ += decoded.seconds;
    record("small-decode", decoded.tokens(), decoded.seconds);

    for (const auto& chunk : decoded.chunks) {
      append(Owner::small, chunk.text, chunk.tokens);
      prefiller_.push(chunk.text);
    }
    if (state_.phase == Phase::large_decoding) return;

    if (decoded.finish == FinishReason::stop && decoded.matched_stop == tags_.answer_close) {
      finish("answer-close");
    } else if (decoded.finish == FinishReason::end_of_sequence || decoded.tokens() == 0) {
      finish("end-of-sequence");
    } else if (decoded_total() >= config_.max_total_tokens) {
      finish("max-total-tokens");
    }
  }

  void large_turn() {
    if (!span_started_) {
      const PrefillTally streamed = prefiller_.drain();
      const double exposed =
          config_.mode == ExecutionMode::sequential
              ? streamed.seconds
              : std::max(0.0, streamed.seconds - small_decode_since_drain_);
      record("streaming-prefill", streamed.tokens, exposed);
      small_decode_since_drain_ = 0.0;
      span_started_ = true;
    }

    const std::size_t total = decoded_total();
    if (total >= config_.max_total_tokens) return close_forced("forced-max-tokens");
    if (state_.offload_budget_remaining == 0) return close_forced("forced-budget");

    std::size_t max_tokens = std::min({config_.chunk_size, state_.offload_budget_remaining,
                                       config_.max_total_tokens - total});
    const bool random = config_.policy.kind == PolicyKind::random_offload;
    if (random) {
      const std::size_t planned_end = plan_[next_plan_].end;
      if (total >= planned_end) {
        ++next_plan_;
        close_normal_injected();
        return;
      }
      max_tokens = std::min(max_tokens, planned_end - total);
    }

    CompletionRequest request;
    request.max_tokens = max_tokens;
    request.temperature = config_.temperature;
    request.stop_sequences.push_back(tags_.close_tag);

    expect_context(large_);
    const DecodeResult decoded = large_.decode_stream(request);
    const std::size_t tokens = decoded.tokens();
    result_.trace.large_tokens += tokens;
    span_tokens_ += tokens;
    last_chunk_tokens_ = tokens;
    state_ = charge_offload(state_, tokens);
    record("large-decode", tokens, decoded.seconds);

    pending_close_reason_ = "large-emitted";
    for (const auto& chunk : decoded.chunks) append(Owner::large, chunk.text, chunk.tokens);
    const std::string text = decoded.text();

    if (state_.phase != Phase::large_decoding) {
      // The large model closed the span itself; the small model only catches up.
      const PrefillAck ack = small_.prefill(text);
      record("controlling-prefill", ack.tokens, ack.seconds);
      span_started_ = false;
      return;
    }

    if (config_.policy.kind == PolicyKind::learned_tags) {
      const ControlDecision decision =
          controlling_prefill_cycle(small_, text, tags_, probe_width_);
      record("controlling-prefill", decision.prefill_tokens, decision.prefill_seconds);
      if (decision.degraded) {
        result_.warnings.push_back("small backend has no probe support; used single-token check");
      }
      if (decision.action == ControlAction::take_back_control) {
        take_back();
        return;
      }
      if (decision.partial_match) {
        probe_width_ = std::min(probe_width_ * 2, config_.probe_ceiling());
      }
    } else {
      const PrefillAck ack = small_.prefill(text);
      record("controlling-prefill", ack.tokens, ack.seconds);
    }

    if (decoded.finish == FinishReason::end_of_sequence || tokens == 0) {
      close_forced("forced-large-eos");
    } else if (state_.offload_budget_remaining == 0) {
      close_forced("forced-budget");
    } else if (decoded_total() >= config_.max_total_tokens) {
      finish("max-total-tokens");
    }
  }

  void take_back() {
    CompletionRequest request;
    request.max_tokens = config_.probe_ceiling();
    request.temperature = 0.0;
    request.stop_sequences.push_back(tags_.close_tag);

    expect_context(small_);
    const DecodeResult decoded = small_.decode_stream(request);
    const std::string text = decoded.text();
    if (!std::string_view(text).starts_with(tags_.close_tag)) {
      throw ProtocolError("small model probe predicted '" + tags_.close_tag +
                          "' but decoding produced '" + text + "'");
    }
    result_.trace.small_tokens += decoded.tokens();
    record("probe", decoded.tokens(), decoded.seconds);
    pending_close_reason_ = "probe";
    for (const auto& chunk : decoded.chunks) {
      append(Owner::small, chunk.text, chunk.tokens);
      prefiller_.push(chunk.text);
    }
    span_started_ = false;
  }

  void close_forced(std::string reason) {
    inject(tags_.close_tag, true, std::move(reason));
    span_started_ = false;
    if (config_.policy.kind == PolicyKind::random_offload) ++next_plan_;
    if (decoded_total() >= config_.max_total_tokens) finish("max-total-tokens");
  }

  void close_normal_injected() {
    inject(tags_.close_tag, false, "random-policy");
    span_started_ = false;
  }

  void finalize() {
    auto& trace = result_.trace;
    trace.handoff_count = trace.spans.size();
    if (result_.termination.empty()) result_.termination = "error";
  }

  std::string question_;
  BackendSession& small_;
  BackendSession& large_;
  const RunConfig& config_;
  const ControlTags& tags_;
  StreamingPrefiller prefiller_;

  GenerationResult result_;
  ProtocolState state_;
  ScannerState scanner_;
  std::size_t tag_chars_ = 0;

  std::vector<OffloadSpan> plan_;
  std::size_t next_plan_ = 0;

  bool span_started_ = false;
  std::size_t span_tokens_ = 0;
  std::size_t last_chunk_tokens_ = 0;
  std::size_t probe_width_ = 1;
  double small_decode_since_drain_ = 0.0;
  std::string pending_close_reason_;
};

}  // namespace

GenerationResult run_cooperative(std::string_view question, BackendSession& small,
                                 BackendSession& large, const RunConfig& config) {
  config.validate();
  CooperativeRun run(question, small, large, config);
  return run.run();
}

}  // namespace handoff
