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

#include <string>

#include "handoff/protocol.hpp"

namespace handoff {

namespace {

bool is_proper_prefix(std::string_view candidate, std::string_view tag) {
  return candidate.size() < tag.size() && tag.substr(0, candidate.size()) == candidate;
}

}  // namespace

ScanResult scan_chunk(const ScannerState& state, std::string_view chunk,
                      const ControlTags& tags) {
  std::string buffer;
  buffer.reserve(state.carry.size() + chunk.size());
  buffer.append(state.carry);
  buffer.append(chunk);

  const std::size_t base = state.absolute_offset - state.carry.size();
  const std::string_view view(buffer);

  ScanResult result;
  result.state.absolute_offset = state.absolute_offset + chunk.size();

  std::size_t pos = 0;
  while (pos < view.size()) {
    const std::string_view rest = view.substr(pos);
    if (rest.starts_with(tags.open_tag)) {
      result.events.push_back({TagKind::open, base + pos});
      pos += tags.open_tag.size();
      continue;
    }
    if (rest.starts_with(tags.close_tag)) {
      result.events.push_back({TagKind::close, base + pos});
      pos += tags.close_tag.size();
      continue;
    }
    // A tag that may still complete in a later chunk defers every decision
    // from here on.
    if (is_proper_prefix(rest, tags.open_tag) ||
        is_proper_prefix(rest, tags.close_tag)) {
      result.state.carry = std::string(rest);
      break;
    }
    ++pos;
  }
  return result;
}

std::vector<TagEvent> scan_text(std::string_view text, const ControlTags& tags) {
  return scan_chunk(ScannerState{}, text, tags).events;
}

}  // namespace handoff
