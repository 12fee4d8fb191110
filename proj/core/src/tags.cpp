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

#include "handoff/tags.hpp"

#include <array>

#include "handoff/errors.hpp"

namespace handoff {

void ControlTags::validate() const {
  const std::array<const std::string*, 6> all = {
      &open_tag,   &close_tag,  &think_open,
      &think_close, &answer_open, &answer_close};
  for (const auto* tag : all) {
    if (tag->empty()) throw ConfigError("control tags must be non-empty");
  }
  for (std::size_t i = 0; i < all.size(); ++i) {
    for (std::size_t j = i + 1; j < all.size(); ++j) {
      if (*all[i] == *all[j]) {
        throw ConfigError("control tags must be distinct: '" + *all[i] + "'");
      }
    }
  }
  if (close_tag.find(open_tag) != std::string::npos ||
      open_tag.find(close_tag) != std::string::npos) {
    throw ConfigError("offload open and close tags must not contain each other");
  }
}

}  // namespace handoff
