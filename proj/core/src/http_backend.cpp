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

#include "handoff/http_backend.hpp"

#include <chrono>
#include <cstdlib>
#include <nlohmann/json.hpp>

#include "handoff/errors.hpp"
#include "handoff/text.hpp"
#include "httplib.h"

namespace handoff {

using json = nlohmann::json;

void HttpBackendConfig::validate() const {
  if (endpoint.empty()) throw ConfigError(name + ": endpoint is required");
  if (endpoint.rfind("http://", 0) != 0 && endpoint.rfind("https://", 0) != 0) {
    throw ConfigError(name + ": endpoint must start with http:// or https://");
  }
  if (path.empty() || path.front() != '/') throw ConfigError(name + ": path must start with '/'");
  if (model.empty()) throw ConfigError(name + ": model is required");
  if (timeout_seconds <= 0.0) throw ConfigError(name + ": timeout must be positive");
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// Incremental completion state shared by the streaming and one-shot paths.
struct Accumulator {
  const CompletionRequest& request;
  std::string window;  // committed-context tail followed by the output
  std::size_t tail_len = 0;
  DecodeResult result;
  std::string output;
  std::size_t tokens = 0;
  bool halted = false;
  std::string server_finish;
  json server_stop_reason;

  // Appends a delta; returns false once the request is satisfied.
  bool push(std::string_view delta, std::size_t delta_tokens, double timestamp,
            const ChunkCallback& on_chunk) {
    if (halted) return false;
    const std::size_t before = output.size();
    const std::size_t window_before = window.size();
    output.append(delta);
    window.append(delta);
    tokens += delta_tokens;

    // Stops may begin in the committed context and must end in the new delta.
    std::size_t stop_at = std::string::npos;
    std::string matched;
    for (const auto& s : request.stop_sequences) {
      const std::size_t from = window_before >= s.size() ? window_before - s.size() + 1 : 0;
      const std::size_t hit = window.find(s, from);
      if (hit != std::string::npos && hit + s.size() > window_before && hit < stop_at) {
        stop_at = hit;
        matched = s;
      }
    }
    if (stop_at != std::string::npos) {
      const std::size_t stop_end = stop_at + matched.size() - tail_len;
      const std::size_t stop_begin = stop_at > tail_len ? stop_at - tail_len : 0;
      const std::size_t keep = std::max(before, request.include_stop ? stop_end : stop_begin);
      output.resize(keep);
      result.finish = FinishReason::stop;
      result.matched_stop = matched;
      halted = true;
    } else if (tokens >= request.max_tokens) {
      result.finish = FinishReason::length;
      halted = true;
    }
    if (output.size() > before || delta_tokens > 0) {
      StreamChunk chunk{output.substr(before), delta_tokens, timestamp};
      if (on_chunk) on_chunk(chunk);
      result.chunks.push_back(std::move(chunk));
    }
    return !halted;
  }

  void finish_from_server() {
    if (halted) return;
    if (server_finish == "length") {
      result.finish = FinishReason::length;
    } else if (server_finish == "stop" && !request.stop_sequences.empty()) {
      // Servers that drop the matched stop string report it in stop_reason.
      std::string matched;
      if (server_stop_reason.is_string()) matched = server_stop_reason.get<std::string>();
      const bool known = std::find(request.stop_sequences.begin(),
                                   request.stop_sequences.end(),
                                   matched) != request.stop_sequences.end();
      if (known) {
        result.finish = FinishReason::stop;
        result.matched_stop = matched;
        if (request.include_stop && !std::string_view(output).ends_with(matched)) {
          StreamChunk chunk{matched, 0, result.seconds};
          output += matched;
          result.chunks.push_back(std::move(chunk));
        }
      } else {
        result.finish = FinishReason::end_of_sequence;
      }
    } else {
      result.finish = FinishReason::end_of_sequence;
    }
  }
};

Accumulator make_accumulator(std::string_view context, const CompletionRequest& request) {
  std::size_t max_stop = 0;
  for (const auto& s : request.stop_sequences) max_stop = std::max(max_stop, s.size());
  const std::size_t tail_len = std::min(context.size(), max_stop > 0 ? max_stop - 1 : 0);
  Accumulator acc{request, std::string(context.substr(context.size() - tail_len)), tail_len,
                  {}, {}, 0, false, {}, {}};
  return acc;
}

class HttpDriver final : public SessionDriver {
 public:
  explicit HttpDriver(const HttpBackendConfig& config) : config_(config) {}

  PrefillAck prefill(std::string_view, std::string_view chunk) override {
    PrefillAck ack;
    ack.tokens = split_pieces(chunk).size();
    return ack;
  }

  DecodeResult decode(std::string_view context, const CompletionRequest& request,
                      const ChunkCallback& on_chunk) override {
    return request.stream ? decode_streaming(context, request, on_chunk)
                          : decode_once(context, request, on_chunk);
  }

  std::string probe(std::string_view context, std::size_t max_tokens) override {
    if (!config_.supports_probe) {
      throw CapabilityError(config_.name + " does not support greedy probes");
    }
    CompletionRequest request;
    request.max_tokens = max_tokens;
    request.temperature = 0.0;
    request.stream = false;
    return decode_once(context, request, {}).text();
  }

  std::unique_ptr<SessionDriver> clone() const override {
    return std::make_unique<HttpDriver>(config_);
  }

 private:
  httplib::Client make_client() const {
    httplib::Client client(config_.endpoint);
    const auto timeout = std::chrono::duration<double>(config_.timeout_seconds);
    client.set_connection_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
    client.set_read_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
    client.set_write_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
    return client;
  }

  httplib::Headers headers() const {
    httplib::Headers h;
    if (!config_.auth_env.empty()) {
      const char* token = std::getenv(config_.auth_env.c_str());
      if (token == nullptr || *token == '\0') {
        throw BackendError(config_.name + ": environment variable " + config_.auth_env +
                               " is not set",
                           false);
      }
      h.emplace("Authorization", std::string("Bearer ") + token);
    }
    return h;
  }

  std::string body(std::string_view context, const CompletionRequest& request,
                    bool stream) const {
    json j;
    j["model"] = config_.model;
    j["prompt"] = std::string(context);
    j["max_tokens"] = request.max_tokens;
    j["temperature"] = request.temperature;
    j["stream"] = stream;
    if (!request.stop_sequences.empty()) {
      j["stop"] = request.stop_sequences;
      if (request.include_stop) j["include_stop_str_in_output"] = true;
    }
    return j.dump();
  }

  [[noreturn]] void fail_status(int status, const std::string& partial) const {
    throw BackendError(config_.name + ": server returned HTTP " + std::to_string(status),
                       status >= 500 || status == 429, partial);
  }

  DecodeResult decode_once(std::string_view context, const CompletionRequest& request,
                           const ChunkCallback& on_chunk) const {
    const auto start = Clock::now();
    auto client = make_client();
    auto res = client.Post(config_.path, headers(), body(context, request, false),
                           "application/json");
    if (!res) {
      throw BackendError(config_.name + ": " + httplib::to_string(res.error()), true);
    }
    if (res->status != 200) fail_status(res->status, {});

    Accumulator acc = make_accumulator(context, request);
    try {
      const json j = json::parse(res->body);
      const auto& choice = j.at("choices").at(0);
      const std::string text = choice.value("text", std::string{});
      std::size_t tokens = split_pieces(text).size();
      if (j.contains("usage") && j["usage"].contains("completion_tokens")) {
        tokens = j["usage"]["completion_tokens"].get<std::size_t>();
      }
      if (choice.contains("finish_reason") && choice["finish_reason"].is_string()) {
        acc.server_finish = choice["finish_reason"].get<std::string>();
      }
      if (choice.contains("stop_reason")) acc.server_stop_reason = choice["stop_reason"];
      acc.result.seconds = seconds_since(start);
      acc.push(text, tokens, acc.result.seconds, on_chunk);
    } catch (const json::exception& e) {
      throw BackendError(config_.name + ": malformed completion response: " + e.what(), false);
    }
    acc.result.seconds = seconds_since(start);
    acc.finish_from_server();
    return std::move(acc.result);
  }

  DecodeResult decode_streaming(std::string_view context, const CompletionRequest& request,
                                const ChunkCallback& on_chunk) const {
    const auto start = Clock::now();
    auto client = make_client();

    Accumulator acc = make_accumulator(context, request);
    std::string pending;
    bool done = false;
    std::string parse_error;

    httplib::Request req;
    req.method = "POST";
    req.path = config_.path;
    req.headers = headers();
    req.headers.emplace("Accept", "text/event-stream");
    req.body = body(context, request, true);
    req.set_header("Content-Type", "application/json");
    req.content_receiver = [&](const char* data, std::size_t len, std::uint64_t,
                               std::uint64_t) {
      pending.append(data, len);
      std::size_t eol;
      while ((eol = pending.find('\n')) != std::string::npos) {
        std::string line = pending.substr(0, eol);
        pending.erase(0, eol + 1);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!line.starts_with("data:")) continue;
        std::string_view payload = std::string_view(line).substr(5);
        while (!payload.empty() && payload.front() == ' ') payload.remove_prefix(1);
        if (payload == "[DONE]") {
          done = true;
          return false;
        }
        try {
          const json j = json::parse(payload);
          const auto& choice = j.at("choices").at(0);
          const std::string delta = choice.value("text", std::string{});
          if (choice.contains("finish_reason") && choice["finish_reason"].is_string()) {
            acc.server_finish = choice["finish_reason"].get<std::string>();
          }
          if (choice.contains("stop_reason")) acc.server_stop_reason = choice["stop_reason"];
          if (!delta.empty() && !acc.push(delta, 1, seconds_since(start), on_chunk)) {
            return false;
          }
        } catch (const json::exception& e) {
          parse_error = e.what();
          return false;
        }
      }
      return true;
    };

    httplib::Response res;
    httplib::Error error = httplib::Error::Success;
    const bool ok = client.send(req, res, error);
    if (!parse_error.empty()) {
      throw BackendError(config_.name + ": malformed stream event: " + parse_error, false,
                         acc.output);
    }
    const bool cancelled_by_us = error == httplib::Error::Canceled && (acc.halted || done);
    if (!ok && !cancelled_by_us) {
      throw BackendError(config_.name + ": " + httplib::to_string(error), true, acc.output);
    }
    if (res.status != -1 && res.status != 200) fail_status(res.status, acc.output);
    acc.result.seconds = seconds_since(start);
    acc.finish_from_server();
    return std::move(acc.result);
  }

  HttpBackendConfig config_;
};

}  // namespace

HttpBackend::HttpBackend(HttpBackendConfig config) : config_(std::move(config)) {
  config_.validate();
}

BackendSession HttpBackend::open_session(ModelRole role) {
  const std::size_t n = next_session_.fetch_add(1);
  return BackendSession(config_.name + "#" + std::to_string(n), role,
                        std::make_unique<HttpDriver>(config_));
}

}  // namespace handoff
