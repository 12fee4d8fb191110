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

#include "tool_config.hpp"

#include <fstream>
#include <sstream>

#include "handoff/errors.hpp"
#include "handoff/serialize.hpp"

namespace handoff::cli {

namespace fs = std::filesystem;

std::string read_file(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + file.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

std::unique_ptr<Backend> make_backend(const BackendDef& def) {
  if (def.kind == BackendKind::scripted) return std::make_unique<ScriptedBackend>(def.script);
  return std::make_unique<HttpBackend>(def.http);
}

const BackendDef& ToolConfig::backend(const std::string& name) const {
  const auto it = backends.find(name);
  if (it == backends.end()) throw ConfigError("unknown backend '" + name + "'");
  return it->second;
}

namespace {

fs::path resolve(const fs::path& base, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() ? path : base / path;
}

fs::path existing_file(const fs::path& base, const json& j, const std::string& field) {
  if (!j.is_string()) throw ParseError(field, "expected a path");
  fs::path path = resolve(base, j.get<std::string>());
  if (!fs::exists(path)) throw ConfigError(field + ": file not found: " + path.string());
  return path;
}

json parse_json(std::string_view text, const std::string& where) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(where, e.what());
  }
}

BackendDef parse_backend(const json& j, const fs::path& base) {
  require_known_keys(j, {"name", "kind", "script", "behavior", "endpoint", "path", "model",
                         "auth_env", "timeout_seconds", "supports_probe"},
                     "backends[]");
  BackendDef def;
  if (!j.contains("name") || !j["name"].is_string()) {
    throw ParseError("backends[].name", "missing or not a string");
  }
  def.name = j["name"].get<std::string>();
  const std::string kind = j.value("kind", std::string("scripted"));
  if (kind == "scripted") {
    def.kind = BackendKind::scripted;
    if (j.contains("script")) {
      const fs::path script = existing_file(base, j["script"], "backends." + def.name + ".script");
      def.script = parse_json(read_file(script), script.string()).get<ScriptedBehavior>();
    } else if (j.contains("behavior")) {
      def.script = j["behavior"].get<ScriptedBehavior>();
    } else {
      throw ConfigError("backend '" + def.name + "' needs a script or an inline behavior");
    }
    def.script.name = def.name;
    def.script.validate();
  } else if (kind == "http") {
    def.kind = BackendKind::http;
    json http = j;
    http.erase("kind");
    def.http = http.get<HttpBackendConfig>();
    def.http.validate();
  } else {
    throw ParseError("backends." + def.name + ".kind", "expected scripted or http");
  }
  return def;
}

}  // namespace

ToolConfig parse_tool_config(std::string_view json_text, const fs::path& base_dir) {
  const json j = parse_json(json_text, "config");
  require_known_keys(j, {"backends", "run", "reward", "match", "annotate", "sim", "output_dir",
                         "seed", "workers"},
                     "");
  ToolConfig config;
  config.base_dir = base_dir;
  try {
    if (j.contains("backends")) {
      if (!j["backends"].is_array()) throw ParseError("backends", "expected a list");
      for (const auto& b : j["backends"]) {
        BackendDef def = parse_backend(b, base_dir);
        if (config.backends.count(def.name) != 0) {
          throw ConfigError("duplicate backend '" + def.name + "'");
        }
        config.backends.emplace(def.name, std::move(def));
      }
    }
    if (j.contains("run")) {
      json run = j["run"];
      if (!run.is_object()) throw ParseError("run", "expected an object");
      config.small_backend = run.value("small", std::string{});
      config.large_backend = run.value("large", std::string{});
      run.erase("small");
      run.erase("large");
      config.run = run.get<RunConfig>();
      for (const auto& name : {config.small_backend, config.large_backend}) {
        if (!name.empty()) config.backend(name);
      }
    }
    config.run.validate();
    if (j.contains("reward")) config.reward = j["reward"].get<RewardConfig>();
    config.reward.validate();
    if (j.contains("match")) config.match = j["match"].get<MatchConfig>();
    config.match.validate();
    if (j.contains("annotate")) {
      const json& a = j["annotate"];
      require_known_keys(a, {"annotator", "prompt_template", "max_tokens", "retries",
                             "snippet_open", "snippet_close"},
                         "annotate");
      config.annotate.annotator = a.value("annotator", std::string{});
      if (!config.annotate.annotator.empty()) config.backend(config.annotate.annotator);
      if (a.contains("prompt_template")) {
        config.annotate.prompt_template =
            read_file(existing_file(base_dir, a["prompt_template"], "annotate.prompt_template"));
        render_prompt(config.annotate.prompt_template, "");
      }
      if (!config.annotate.annotator.empty() && config.annotate.prompt_template.empty()) {
        throw ConfigError("annotate.prompt_template is required with an annotator");
      }
      config.annotate.max_tokens = a.value("max_tokens", config.annotate.max_tokens);
      config.annotate.retries = a.value("retries", config.annotate.retries);
      config.annotate.delimiters.open = a.value("snippet_open", config.annotate.delimiters.open);
      config.annotate.delimiters.close = a.value("snippet_close", config.annotate.delimiters.close);
    }
    if (j.contains("sim")) {
      json sim = j["sim"];
      if (!sim.is_object()) throw ParseError("sim", "expected an object");
      if (sim.contains("small_profile")) {
        config.sim.small_profile = existing_file(base_dir, sim["small_profile"], "sim.small_profile");
      }
      if (sim.contains("large_profile")) {
        config.sim.large_profile = existing_file(base_dir, sim["large_profile"], "sim.large_profile");
      }
      sim.erase("small_profile");
      sim.erase("large_profile");
      config.sim.config = sim.get<SimConfig>();
    }
    config.sim.config.validate();
    if (j.contains("output_dir")) {
      config.output_dir = resolve(base_dir, j["output_dir"].get<std::string>());
    }
    if (j.contains("seed")) config.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("workers")) config.workers = j["workers"].get<std::size_t>();
  } catch (const json::exception& e) {
    throw ParseError("config", e.what());
  }
  if (config.workers < 1) throw ConfigError("workers must be at least 1");
  return config;
}

ToolConfig load_tool_config(const fs::path& file) {
  return parse_tool_config(read_file(file), fs::absolute(file).parent_path());
}

}  // namespace handoff::cli
