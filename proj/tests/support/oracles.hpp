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

// Independent reference implementations used as test oracles. They favour
// obviousness over speed and share no code with the library.

#include <algorithm>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace oracle {

struct TagHit {
  bool open = true;
  std::size_t offset = 0;
};

/// Left-to-right scan; at every position try the open tag, then the close
/// tag, and skip past a hit.
inline std::vector<TagHit> tag_hits(std::string_view text, std::string_view open,
                                    std::string_view close) {
  std::vector<TagHit> hits;
  std::size_t i = 0;
  while (i < text.size()) {
    if (text.substr(i, open.size()) == open) {
      hits.push_back({true, i});
      i += open.size();
    } else if (text.substr(i, close.size()) == close) {
      hits.push_back({false, i});
      i += close.size();
    } else {
      ++i;
    }
  }
  return hits;
}

/// Textbook full-matrix Levenshtein distance.
inline std::size_t levenshtein(std::string_view a, std::string_view b) {
  std::vector<std::vector<std::size_t>> d(a.size() + 1, std::vector<std::size_t>(b.size() + 1));
  for (std::size_t i = 0; i <= a.size(); ++i) d[i][0] = i;
  for (std::size_t j = 0; j <= b.size(); ++j) d[0][j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      d[i][j] = std::min({d[i - 1][j] + 1, d[i][j - 1] + 1,
                          d[i - 1][j - 1] + (a[i - 1] == b[j - 1] ? 0u : 1u)});
    }
  }
  return d[a.size()][b.size()];
}

struct Window {
  std::size_t start = 0;
  std::size_t length = 0;
  double similarity = 0.0;
};

/// Scores every window whose similarity could reach `threshold`: a window of
/// length L scores at most min(L, m) / max(L, m), so lengths outside
/// [threshold * m, m / threshold] never qualify. For each start one
/// unbanded DP over the window prefix gives the distance of every length.
/// Best similarity wins, then earliest start, then shortest window.
inline std::optional<Window> best_window(std::string_view trace, std::string_view snippet,
                                         double threshold) {
  const std::size_t m = snippet.size();
  const double dm = static_cast<double>(m);
  std::optional<Window> best;
  for (std::size_t start = 0; start < trace.size(); ++start) {
    const std::size_t room = trace.size() - start;
    const auto longest = std::min(room, static_cast<std::size_t>(dm / threshold) + 1);
    std::vector<std::size_t> prev(m + 1), cur(m + 1);
    for (std::size_t j = 0; j <= m; ++j) prev[j] = j;
    for (std::size_t len = 1; len <= longest; ++len) {
      cur[0] = len;
      for (std::size_t j = 1; j <= m; ++j) {
        cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1,
                           prev[j - 1] + (trace[start + len - 1] == snippet[j - 1] ? 0u : 1u)});
      }
      std::swap(prev, cur);
      const double sim =
          1.0 - static_cast<double>(prev[m]) / static_cast<double>(std::max(m, len));
      if (sim < threshold) continue;
      if (!best || sim > best->similarity) best = Window{start, len, sim};
    }
  }
  return best;
}

/// Whitespace-separated words of `text` whose characters all lie inside one
/// of the half-open `regions`, counted by walking characters; words are cut
/// at region boundaries.
struct WordCount {
  std::size_t inside = 0;
  std::size_t total = 0;
};

inline WordCount words_inside(std::string_view text,
                              const std::vector<std::pair<std::size_t, std::size_t>>& regions) {
  auto in_region = [&](std::size_t i) {
    for (const auto& [s, e] : regions) {
      if (i >= s && i < e) return true;
    }
    return false;
  };
  auto space = [](char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
  };
  WordCount count;
  bool in_word = false;
  bool word_inside = false;
  for (std::size_t i = 0; i <= text.size(); ++i) {
    const bool boundary = i == text.size() || space(text[i]) ||
                          (in_word && i > 0 && in_region(i) != in_region(i - 1));
    if (in_word && boundary) {
      ++count.total;
      count.inside += word_inside ? 1 : 0;
      in_word = false;
    }
    if (i < text.size() && !space(text[i]) && !in_word) {
      in_word = true;
      word_inside = in_region(i);
    }
  }
  return count;
}

}  // namespace oracle
