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
#include <string_view>
#include <vector>

namespace handoff {

/// Number of maximal runs of non-whitespace characters.
std::size_t count_words(std::string_view text) noexcept;

/// Trim, then collapse every internal whitespace run to a single space.
std::string collapse_whitespace(std::string_view text);

/// Splits text into pseudo-tokens. With `piece_chars == 0` each piece is a
/// run of whitespace followed by a run of non-whitespace (word-level); with
/// `piece_chars > 0` pieces are fixed-width character blocks. Pieces
/// concatenate back to the input.
std::vector<std::string_view> split_pieces(std::string_view text,
                                           std::size_t piece_chars = 0);

/// Length of the first pseudo-token of `text` (0 for empty text).
std::size_t first_piece_length(std::string_view text,
                               std::size_t piece_chars = 0) noexcept;

bool is_space(char c) noexcept;

}  // namespace handoff
