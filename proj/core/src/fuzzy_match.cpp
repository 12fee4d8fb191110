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

#include <algorithm>
#include <cmath>
#include <limits>

#include "handoff/annotate.hpp"
#include "handoff/errors.hpp"
#include "handoff/text.hpp"

namespace handoff {

std::string_view to_string(Normalization n) noexcept {
  return n == Normalization::none ? "none" : "whitespace-fold";
}

Normalization normalization_from_string(std::string_view name) {
  if (name == "none") return Normalization::none;
  if (name == "whitespace-fold") return Normalization::whitespace_fold;
  throw ParseError("normalization", "unknown normalization '" + std::string(name) + "'");
}

void MatchConfig::validate() const {
  if (!(similarity_threshold > 0.0 && similarity_threshold <= 1.0)) {
    throw ConfigError("similarity_threshold must lie in (0, 1]");
  }
  if (window_stride < 1) throw ConfigError("window_stride must be at least 1");
  if (!(max_total_fraction >= 0.0 && max_total_fraction <= 1.0)) {
    throw ConfigError("max_total_fraction must lie in [0, 1]");
  }
}

std::size_t edit_distance(std::string_view a, std::string_view b) {
  std::vector<std::size_t> prev(b.size() + 1);
  std::vector<std::size_t> cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({sub, prev[j] + 1, cur[j - 1] + 1});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

namespace {

constexpr std::size_t kFar = std::numeric_limits<std::size_t>::max() / 4;

struct Best {
  std::size_t start = 0;
  std::size_t length = 0;
  double similarity = -1.0;
};

// Exhaustive window search on `text`. For every start one banded DP of the
// window prefix against the snippet yields the distance of every candidate
// length at once. Cells farther than `band` from the diagonal cannot reach a
// distance within the band, so results at or under it are exact.
Best best_window(std::string_view text, std::string_view snippet, const MatchConfig& config) {
  const std::size_t m = snippet.size();
  const std::size_t lo = std::max<std::size_t>(1, (4 * m + 4) / 5);
  const std::size_t hi = (6 * m) / 5;
  const auto band = static_cast<std::size_t>(
                        std::floor((1.0 - config.similarity_threshold) * static_cast<double>(hi))) +
                    1;

  Best best;
  std::vector<std::size_t> prev(m + 2, kFar);
  std::vector<std::size_t> cur(m + 2, kFar);
  for (std::size_t start = 0; start + lo <= text.size(); start += config.window_stride) {
    const std::size_t longest = std::min(hi, text.size() - start);
    std::fill(prev.begin(), prev.end(), kFar);
    for (std::size_t j = 0; j <= std::min(m, band); ++j) prev[j] = j;

    for (std::size_t i = 1; i <= longest; ++i) {
      const std::size_t j_lo = i > band ? i - band : 0;
      const std::size_t j_hi = std::min(m, i + band);
      if (j_lo > m) break;
      if (j_lo == 0) {
        cur[0] = i;
      } else {
        cur[j_lo - 1] = kFar;
      }
      cur[j_hi + 1] = kFar;
      const char c = text[start + i - 1];
      for (std::size_t j = std::max<std::size_t>(j_lo, 1); j <= j_hi; ++j) {
        const std::size_t sub = prev[j - 1] + (c == snippet[j - 1] ? 0 : 1);
        cur[j] = std::min({sub, prev[j] + 1, cur[j - 1] + 1});
      }
      std::swap(prev, cur);
      if (i < lo || prev[m] >= kFar) continue;
      const double denom = static_cast<double>(std::max(m, i));
      const double sim = 1.0 - static_cast<double>(prev[m]) / denom;
      if (sim > best.similarity) best = {start, i, sim};
    }
  }
  return best;
}

struct Folded {
  std::string text;
  std::vector<std::size_t> begin;  // original offset of each folded character
  std::vector<std::size_t> end;    // one past the original characters it stands for
};

Folded fold_whitespace(std::string_view text) {
  Folded f;
  std::size_t i = 0;
  while (i < text.size()) {
    if (is_space(text[i])) {
      std::size_t j = i;
      while (j < text.size() && is_space(text[j])) ++j;
      f.text.push_back(' ');
      f.begin.push_back(i);
      f.end.push_back(j);
      i = j;
    } else {
      f.text.push_back(text[i]);
      f.begin.push_back(i);
      f.end.push_back(i + 1);
      ++i;
    }
  }
  return f;
}

}  // namespace

std::optional<FuzzyMatch> fuzzy_match(std::string_view trace, std::string_view snippet,
                                      const MatchConfig& config) {
  config.validate();
  if (snippet.empty()) throw DomainError("snippet must be non-empty");

  if (config.normalization == Normalization::whitespace_fold) {
    const std::string folded_snippet = collapse_whitespace(snippet);
    if (folded_snippet.empty()) throw DomainError("snippet must contain non-whitespace text");
    const Folded folded = fold_whitespace(trace);
    const Best best = best_window(folded.text, folded_snippet, config);
    if (best.similarity < config.similarity_threshold) return std::nullopt;
    FuzzyMatch match;
    match.span.start = folded.begin[best.start];
    match.span.end = folded.end[best.start + best.length - 1];
    match.span.origin = SpanOrigin::annotated;
    match.span.token_estimate = count_words(trace.substr(match.span.start, match.span.length()));
    match.similarity = best.similarity;
    return match;
  }

  const Best best = best_window(trace, snippet, config);
  if (best.similarity < config.similarity_threshold) return std::nullopt;
  FuzzyMatch match;
  match.span = {best.start, best.start + best.length, SpanOrigin::annotated,
                count_words(trace.substr(best.start, best.length))};
  match.similarity = best.similarity;
  return match;
}

}  // namespace handoff
