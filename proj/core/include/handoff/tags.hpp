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

#include <cstddef>
#include <string>

namespace handoff {

/// Literal control tags. Tags are matched as plain text, never as vocabulary
/// entries, so a tag may arrive split across any number of stream chunks.
struct ControlTags {
  std::string open_tag = "<bigmodel>";
  std::string close_tag = "</bigmodel>";
  std::string think_open = "<think>";
  std::string think_close = "</think>";
  std::string answer_open = "<answer>";
  std::string answer_close = "</answer>";

  /// Throws ConfigError if a tag is empty, two tags coincide, or the offload
  /// open/close tags contain one another.
  void validate() const;

  /// Longest of the two offload tags; the scanner carry is one less.
  std::size_t max_offload_tag_length() const noexcept {
    return open_tag.size() > close_tag.size() ? open_tag.size()
                                              : close_tag.size();
  }

  bool operator==(const ControlTags&) const = default;
};

}  // namespace handoff
