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
#include <string>

#include "handoff/backend.hpp"

namespace handoff {

struct HttpBackendConfig {
  std::string name = "http";
  std::string endpoint = "http://127.0.0.1:8000";  // scheme://host:port
  std::string path = "/v1/completions";
  std::string model;
  std::string auth_env;  // environment variable holding the bearer token
  double timeout_seconds = 60.0;
  bool supports_probe = true;

  void validate() const;  // throws ConfigError
};

/// Client for OpenAI-compatible completion servers. Sessions keep the context
/// client-side and send it in full with every request; servers with prefix
/// caching turn that into incremental prefill. Streaming uses server-sent
/// events; stop sequences and max_tokens are also enforced client-side.
class HttpBackend final : public Backend {
 public:
  explicit HttpBackend(HttpBackendConfig config);

  const std::string& name() const noexcept override { return config_.name; }
  BackendSession open_session(ModelRole role) override;
  const HttpBackendConfig& config() const noexcept { return config_; }

 private:
  HttpBackendConfig config_;
  std::atomic<std::size_t> next_session_{0};
};

}  // namespace handoff
