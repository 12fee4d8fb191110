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
#include <iosfwd>
#include <optional>
#include <string>

#include "tool_config.hpp"

namespace handoff::cli {

/// Command-line values that take precedence over the config file.
struct Overrides {
  std::optional<std::filesystem::path> out;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> policy;
  std::optional<std::string> mode;
  std::optional<std::size_t> workers;
};

struct Streams {
  std::ostream& out;
  std::ostream& err;
};

/// Questions come from a JSON-Lines file ({"id"?, "question"}) or inline.
/// Writes runs.jsonl; returns nonzero iff any run failed.
int cmd_run(const ToolConfig& config, const std::optional<std::filesystem::path>& questions,
            const std::optional<std::string>& inline_question, const Overrides& overrides,
            Streams io);

/// Reads {"question", "trace", "snippets"?} lines; writes annotated.jsonl,
/// position_hist.csv and offload_hist.csv.
int cmd_annotate(const ToolConfig& config, const std::filesystem::path& corpus,
                 const Overrides& overrides, Streams io);

/// Reads {"completion", "gold"} lines; writes rewards.jsonl.
int cmd_reward(const ToolConfig& config, const std::filesystem::path& completions,
               const Overrides& overrides, Streams io);

/// Reads a scenario file; writes sim_breakdown.csv and speedup.csv.
int cmd_simulate(const ToolConfig& config, const std::filesystem::path& scenarios,
                 const Overrides& overrides, Streams io);

/// Reads run records; writes plotdata.csv (run_id,bin,offloaded,legal,reason).
int cmd_trace_plotdata(const ToolConfig& config, const std::filesystem::path& runs,
                       std::size_t bins, const Overrides& overrides, Streams io);

/// Raster rows for one trace text, as written by cmd_trace_plotdata.
std::string plotdata_rows(const std::string& run_id, std::string_view text, std::size_t bins,
                          const ControlTags& tags);

}  // namespace handoff::cli
