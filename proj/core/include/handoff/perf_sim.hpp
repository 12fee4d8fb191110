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
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace handoff {

/// Throughput in tokens/second as a function of context length. A single
/// point is a constant rate; otherwise values are interpolated linearly
/// between breakpoints and held constant outside them.
class RateCurve {
 public:
  struct Point {
    double context = 0.0;
    double rate = 0.0;
    bool operator==(const Point&) const = default;
  };

  RateCurve() = default;
  RateCurve(double constant_rate);  // NOLINT(google-explicit-constructor)
  explicit RateCurve(std::vector<Point> points);

  const std::vector<Point>& points() const noexcept { return points_; }
  bool constant() const noexcept { return points_.size() == 1; }
  double at(double context) const;

  /// Seconds to process the tokens at context positions [first, last), the
  /// token at position q costing 1 / rate(q).
  double seconds(std::size_t first, std::size_t last) const;

  void validate(std::string_view field) const;  // throws ConfigError
  bool operator==(const RateCurve&) const = default;

 private:
  std::vector<Point> points_;
};

struct ThroughputProfile {
  std::string model_name;
  RateCurve prefill_rate;
  RateCurve decode_rate;

  void validate() const;  // throws ConfigError
};

/// Reads a JSON profile: {"model_name", "prefill_rate", "decode_rate"} where
/// each rate is a number or a list of {"context", "rate"} breakpoints.
ThroughputProfile load_profile(const std::filesystem::path& file);
ThroughputProfile parse_profile(std::string_view json_text);

enum class SegmentOwner { small, large };
std::string_view to_string(SegmentOwner owner) noexcept;

struct Segment {
  SegmentOwner owner = SegmentOwner::small;
  std::size_t tokens = 0;
  bool operator==(const Segment&) const = default;
};

struct SegmentedTrace {
  std::vector<Segment> segments;

  /// Drops empty segments and joins neighbours with the same owner.
  SegmentedTrace& normalize();
  bool normalized() const noexcept;
  std::size_t small_tokens() const noexcept;
  std::size_t large_tokens() const noexcept;
  std::size_t total_tokens() const noexcept;
  std::size_t handoff_count() const noexcept;  // owner changes
};

/// `total_tokens` with round(fraction * total) large tokens split evenly over
/// `spans` large segments, separated and surrounded by spans + 1 equal small
/// gaps. Remainders go to the earliest segments.
SegmentedTrace segmented_trace(std::size_t total_tokens, double offload_fraction,
                               std::size_t spans);

enum class SimMode { pipelined, non_pipelined };
std::string_view to_string(SimMode mode) noexcept;
SimMode sim_mode_from_string(std::string_view name);

struct SimConfig {
  std::size_t chunk_size = 64;
  std::optional<double> probe_cost_per_chunk;  // default: one small decode step
  bool include_handoff_residual = true;
  SimMode mode = SimMode::pipelined;
  // Non-pipelined only: every controlling check re-prefills the whole context
  // into the small model and the large model prefills the whole context at
  // each handoff. When false only the preceding segment is prefilled.
  bool reprefill_full_context = true;
  std::size_t prompt_tokens = 0;

  void validate() const;  // throws ConfigError

  /// Probe and residual terms disabled.
  static SimConfig without_overheads();
};

struct SimBreakdown {
  double small_decode = 0.0;
  double large_decode = 0.0;
  double exposed_prefill = 0.0;
  double probe_overhead = 0.0;
  double residual_handoff = 0.0;

  double sum() const noexcept {
    return small_decode + large_decode + exposed_prefill + probe_overhead + residual_handoff;
  }
};

struct SimResult {
  std::string label;
  double total_seconds = 0.0;
  SimBreakdown breakdown;
  std::map<std::string, double> speedup_vs;
};

SimResult simulate_single_model(std::size_t total_tokens, const ThroughputProfile& profile,
                                std::size_t prompt_tokens = 0);

SimResult simulate_pipelined(const SegmentedTrace& trace, const ThroughputProfile& small,
                             const ThroughputProfile& large, const SimConfig& config = {});

SimResult simulate_nonpipelined(const SegmentedTrace& trace, const ThroughputProfile& small,
                                const ThroughputProfile& large, const SimConfig& config = {});

/// Dispatches on config.mode.
SimResult simulate(const SegmentedTrace& trace, const ThroughputProfile& small,
                   const ThroughputProfile& large, const SimConfig& config = {});

struct SpeedupRow {
  std::string label;
  double total_seconds = 0.0;
  double reference_seconds = 0.0;
  double ratio = 0.0;
};

/// ratio = reference.total / result.total. Throws DomainError when the
/// reference total is not positive.
std::vector<SpeedupRow> speedup_report(const std::vector<SimResult>& results,
                                       const SimResult& reference);

std::string speedup_csv(const std::vector<SpeedupRow>& rows);
std::string breakdown_csv(const std::vector<SimResult>& results);

}  // namespace handoff
