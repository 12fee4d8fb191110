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

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>

#include "handoff/annotate.hpp"
#include "handoff/backend.hpp"
#include "handoff/http_backend.hpp"
#include "handoff/orchestrator.hpp"
#include "handoff/perf_sim.hpp"
#include "handoff/reward.hpp"
#include "handoff/scripted_backend.hpp"

namespace handoff::cli {

enum class BackendKind { scripted, http };

struct BackendDef {
  std::string name;
  BackendKind kind = BackendKind::scripted;
  ScriptedBehavior script;  // scripted
  HttpBackendConfig http;   // http
};

std::unique_ptr<Backend> make_backend(const BackendDef& def);

struct AnnotateSettings {
  std::string annotator;        // backend name; empty: snippets must be pre-supplied
  std::string prompt_template;  // template text with a {trace} slot
  std::size_t max_tokens = 4096;
  std::size_t retries = 2;
  SnippetDelimiters delimiters;
};

struct SimSettings {
  SimConfig config;
  std::optional<std::filesystem::path> small_profile;
  std::optional<std::filesystem::path> large_profile;
};

/// Everything a subcommand needs. Relative paths in the file are resolved
/// against the directory that holds it.
struct ToolConfig {
  std::filesystem::path base_dir = ".";
  std::map<std::string, BackendDef> backends;
  std::string small_backend;
  std::string large_backend;
  RunConfig run;
  RewardConfig reward;
  MatchConfig match;
  AnnotateSettings annotate;
  SimSettings sim;
  std::filesystem::path output_dir = ".";
  std::uint64_t seed = 0;
  std::size_t workers = 1;

  const BackendDef& backend(const std::string& name) const;  // throws ConfigError
};

ToolConfig load_tool_config(const std::filesystem::path& file);
ToolConfig parse_tool_config(std::string_view json_text, const std::filesystem::path& base_dir);

std::string read_file(const std::filesystem::path& file);

}  // namespace handoff::cli
