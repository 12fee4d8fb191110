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

#include "handoff/perf_sim.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "handoff/errors.hpp"

namespace handoff {

using json = nlohmann::json;

// ---------------------------------------------------------------------------
// Rates and profiles
// ---------------------------------------------------------------------------

RateCurve::RateCurve(double constant_rate) : points_{{0.0, constant_rate}} {}

RateCurve::RateCurve(std::vector<Point> points) : points_(std::move(points)) {}

void RateCurve::validate(std::string_view field) const {
  const std::string name(field);
  if (points_.empty()) throw ConfigError(name + ": rate table is empty");
  for (std::size_t i = 0; i < points_.size(); ++i) {
    if (!(points_[i].rate > 0.0) || !std::isfinite(points_[i].rate)) {
      throw ConfigError(name + ": rates must be positive");
    }
    if (!(points_[i].context >= 0.0)) throw ConfigError(name + ": contexts must be nonnegative");
    if (i > 0 && !(points_[i].context > points_[i - 1].context)) {
      throw ConfigError(name + ": breakpoints must be strictly increasing");
    }
  }
}

double RateCurve::at(double context) const {
  if (points_.empty()) throw ConfigError("rate curve is empty");
  if (context <= points_.front().context) return points_.front().rate;
  if (context >= points_.back().context) return points_.back().rate;
  const auto upper = std::upper_bound(points_.begin(), points_.end(), context,
                                      [](double x, const Point& p) { return x < p.context; });
  const Point& b = *upper;
  const Point& a = *(upper - 1);
  const double t = (context - a.context) / (b.context - a.context);
  return a.rate + t * (b.rate - a.rate);
}

double RateCurve::seconds(std::size_t first, std::size_t last) const {
  if (last <= first) return 0.0;
  if (constant()) return static_cast<double>(last - first) / points_.front().rate;

  // Outside the breakpoints the rate is flat, so only the interior is summed
  // token by token.
  const auto lo_flat = static_cast<std::size_t>(std::max(0.0, std::ceil(points_.front().context)));
  const auto hi_flat = static_cast<std::size_t>(std::ceil(points_.back().context));
  double total = 0.0;
  std::size_t q = first;
  if (q < lo_flat) {
    const std::size_t stop = std::min(last, lo_flat);
    total += static_cast<double>(stop - q) / points_.front().rate;
    q = stop;
  }
  const std::size_t interior_end = std::min(last, hi_flat);
  for (; q < interior_end; ++q) total += 1.0 / at(static_cast<double>(q));
  if (q < last) total += static_cast<double>(last - q) / points_.back().rate;
  return total;
}

void ThroughputProfile::validate() const {
  prefill_rate.validate(model_name + ".prefill_rate");
  decode_rate.validate(model_name + ".decode_rate");
}

namespace {

RateCurve parse_rate(const json& j, const std::string& field) {
  if (j.is_number()) return RateCurve(j.get<double>());
  if (!j.is_array()) throw ParseError(field, "expected a number or a list of breakpoints");
  std::vector<RateCurve::Point> points;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const json& p = j[i];
    const std::string where = field + "[" + std::to_string(i) + "]";
    if (!p.is_object() || !p.contains("context") || !p.contains("rate") ||
        !p["context"].is_number() || !p["rate"].is_number()) {
      throw ParseError(where, "expected {\"context\": number, \"rate\": number}");
    }
    points.push_back({p["context"].get<double>(), p["rate"].get<double>()});
  }
  return RateCurve(std::move(points));
}

}  // namespace

ThroughputProfile parse_profile(std::string_view json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ParseError("profile", e.what());
  }
  if (!j.is_object()) throw ParseError("profile", "expected an object");
  ThroughputProfile profile;
  if (!j.contains("model_name") || !j["model_name"].is_string()) {
    throw ParseError("model_name", "missing or not a string");
  }
  profile.model_name = j["model_name"].get<std::string>();
  for (const char* field : {"prefill_rate", "decode_rate"}) {
    if (!j.contains(field)) throw ParseError(field, "missing");
  }
  profile.prefill_rate = parse_rate(j["prefill_rate"], "prefill_rate");
  profile.decode_rate = parse_rate(j["decode_rate"], "decode_rate");
  profile.validate();
  return profile;
}

ThroughputProfile load_profile(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError("cannot open profile " + file.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_profile(buffer.str());
}

// ---------------------------------------------------------------------------
// Segmented traces
// ---------------------------------------------------------------------------

std::string_view to_string(SegmentOwner owner) noexcept {
  return owner == SegmentOwner::small ? "small" : "large";
}

SegmentedTrace& SegmentedTrace::normalize() {
  std::vector<Segment> out;
  for (const auto& s : segments) {
    if (s.tokens == 0) continue;
    if (!out.empty() && out.back().owner == s.owner) {
      out.back().tokens += s.tokens;
    } else {
      out.push_back(s);
    }
  }
  segments = std::move(out);
  return *this;
}

bool SegmentedTrace::normalized() const noexcept {
  for (std::size_t i = 0; i < segments.size(); ++i) {
    if (segments[i].tokens == 0) return false;
    if (i > 0 && segments[i].owner == segments[i - 1].owner) return false;
  }
  return true;
}

std::size_t SegmentedTrace::small_tokens() const noexcept {
  std::size_t n = 0;
  for (const auto& s : segments) n += s.owner == SegmentOwner::small ? s.tokens : 0;
  return n;
}

std::size_t SegmentedTrace::large_tokens() const noexcept {
  std::size_t n = 0;
  for (const auto& s : segments) n += s.owner == SegmentOwner::large ? s.tokens : 0;
  return n;
}

std::size_t SegmentedTrace::total_tokens() const noexcept {
  return small_tokens() + large_tokens();
}

std::size_t SegmentedTrace::handoff_count() const noexcept {
  std::size_t n = 0;
  for (std::size_t i = 1; i < segments.size(); ++i) {
    n += segments[i].owner != segments[i - 1].owner ? 1 : 0;
  }
  return n;
}

SegmentedTrace segmented_trace(std::size_t total_tokens, double offload_fraction,
                               std::size_t spans) {
  if (!(offload_fraction >= 0.0 && offload_fraction <= 1.0)) {
    throw DomainError("offload fraction must lie in [0, 1]");
  }
  const auto large =
      static_cast<std::size_t>(std::llround(offload_fraction * static_cast<double>(total_tokens)));
  SegmentedTrace trace;
  if (large == 0) {
    trace.segments.push_back({SegmentOwner::small, total_tokens});
    return trace.normalize();
  }
  if (spans == 0) throw DomainError("a nonzero offload needs at least one span");
  if (spans > large) throw DomainError("more spans than offloaded tokens");

  const std::size_t small = total_tokens - large;
  const std::size_t gaps = spans + 1;
  for (std::size_t i = 0; i < gaps; ++i) {
    trace.segments.push_back({SegmentOwner::small, small / gaps + (i < small % gaps ? 1 : 0)});
    if (i < spans) {
      trace.segments.push_back({SegmentOwner::large, large / spans + (i < large % spans ? 1 : 0)});
    }
  }
  return trace.normalize();
}

// ---------------------------------------------------------------------------
// Simulation
// ---------------------------------------------------------------------------

std::string_view to_string(SimMode mode) noexcept {
  return mode == SimMode::pipelined ? "pipelined" : "non-pipelined";
}

SimMode sim_mode_from_string(std::string_view name) {
  if (name == "pipelined") return SimMode::pipelined;
  if (name == "non-pipelined") return SimMode::non_pipelined;
  throw ParseError("mode", "unknown mode '" + std::string(name) + "'");
}

void SimConfig::validate() const {
  if (chunk_size < 1) throw ConfigError("chunk_size must be at least 1");
  if (probe_cost_per_chunk && !(*probe_cost_per_chunk >= 0.0)) {
    throw ConfigError("probe_cost_per_chunk must be nonnegative");
  }
}

SimConfig SimConfig::without_overheads() {
  SimConfig c;
  c.probe_cost_per_chunk = 0.0;
  c.include_handoff_residual = false;
  return c;
}

namespace {

const ThroughputProfile& owner_profile(SegmentOwner owner, const ThroughputProfile& small,
                                       const ThroughputProfile& large) {
  return owner == SegmentOwner::small ? small : large;
}

std::size_t checks_for(std::size_t tokens, std::size_t chunk) {
  return (tokens + chunk - 1) / chunk;
}

// End of the c-th controlling chunk (1-based) of a large segment at [pos, pos+t).
std::size_t check_end(std::size_t pos, std::size_t t, std::size_t chunk, std::size_t c) {
  return pos + std::min(c * chunk, t);
}

double probe_cost(const SimConfig& config, const ThroughputProfile& small, std::size_t context) {
  if (config.probe_cost_per_chunk) return *config.probe_cost_per_chunk;
  return 1.0 / small.decode_rate.at(static_cast<double>(context));
}

void check_inputs(const SegmentedTrace& trace, const ThroughputProfile& small,
                  const ThroughputProfile& large, const SimConfig& config) {
  config.validate();
  small.validate();
  large.validate();
  if (!trace.normalized()) throw DomainError("segmented trace must be normalized");
}

SimResult finish(SimResult r, std::string label) {
  r.label = std::move(label);
  r.total_seconds = r.breakdown.sum();
  return r;
}

}  // namespace

SimResult simulate_single_model(std::size_t total_tokens, const ThroughputProfile& profile,
                                std::size_t prompt_tokens) {
  profile.validate();
  SimResult r;
  r.breakdown.small_decode = profile.decode_rate.seconds(prompt_tokens, prompt_tokens + total_tokens);
  return finish(std::move(r), profile.model_name);
}

SimResult simulate_pipelined(const SegmentedTrace& trace, const ThroughputProfile& small,
                             const ThroughputProfile& large, const SimConfig& config) {
  check_inputs(trace, small, large, config);
  SimResult r;
  auto& b = r.breakdown;
  std::size_t pos = config.prompt_tokens;
  const auto& segs = trace.segments;
  for (std::size_t i = 0; i < segs.size(); ++i) {
    const std::size_t t = segs[i].tokens;
    const double decode = owner_profile(segs[i].owner, small, large).decode_rate.seconds(pos, pos + t);
    if (segs[i].owner == SegmentOwner::small) {
      b.small_decode += decode;
    } else {
      b.large_decode += decode;
      for (std::size_t c = 1; c <= checks_for(t, config.chunk_size); ++c) {
        b.probe_overhead += probe_cost(config, small, check_end(pos, t, config.chunk_size, c));
      }
    }
    if (i + 1 < segs.size()) {
      // The receiving model streamed this segment in while it was decoded.
      const auto& receiver = owner_profile(segs[i + 1].owner, small, large);
      const double prefill = receiver.prefill_rate.seconds(pos, pos + t);
      double residual = 0.0;
      if (config.include_handoff_residual) {
        residual = receiver.prefill_rate.seconds(pos + t - std::min(config.chunk_size, t), pos + t);
      }
      b.residual_handoff += residual;
      b.exposed_prefill += std::max(0.0, prefill - decode - residual);
    }
    pos += t;
  }
  return finish(std::move(r), "pipelined");
}

SimResult simulate_nonpipelined(const SegmentedTrace& trace, const ThroughputProfile& small,
                                const ThroughputProfile& large, const SimConfig& config) {
  check_inputs(trace, small, large, config);
  SimResult r;
  auto& b = r.breakdown;
  std::size_t pos = config.prompt_tokens;
  const auto& segs = trace.segments;
  for (std::size_t i = 0; i < segs.size(); ++i) {
    const std::size_t t = segs[i].tokens;
    if (segs[i].owner == SegmentOwner::small) {
      b.small_decode += small.decode_rate.seconds(pos, pos + t);
      if (i + 1 < segs.size()) {
        const std::size_t from = config.reprefill_full_context ? 0 : pos;
        b.exposed_prefill += large.prefill_rate.seconds(from, pos + t);
      }
    } else {
      b.large_decode += large.decode_rate.seconds(pos, pos + t);
      std::size_t prev_end = pos;
      for (std::size_t c = 1; c <= checks_for(t, config.chunk_size); ++c) {
        const std::size_t end = check_end(pos, t, config.chunk_size, c);
        const std::size_t from = config.reprefill_full_context ? 0 : prev_end;
        b.exposed_prefill += small.prefill_rate.seconds(from, end);
        b.probe_overhead += probe_cost(config, small, end);
        prev_end = end;
      }
    }
    pos += t;
  }
  return finish(std::move(r), "non-pipelined");
}

SimResult simulate(const SegmentedTrace& trace, const ThroughputProfile& small,
                   const ThroughputProfile& large, const SimConfig& config) {
  return config.mode == SimMode::pipelined ? simulate_pipelined(trace, small, large, config)
                                           : simulate_nonpipelined(trace, small, large, config);
}

std::vector<SpeedupRow> speedup_report(const std::vector<SimResult>& results,
                                       const SimResult& reference) {
  if (!(reference.total_seconds > 0.0)) throw DomainError("reference total must be positive");
  std::vector<SpeedupRow> rows;
  for (const auto& r : results) {
    if (!(r.total_seconds > 0.0)) throw DomainError(r.label + ": total must be positive");
    rows.push_back({r.label, r.total_seconds, reference.total_seconds,
                    reference.total_seconds / r.total_seconds});
  }
  return rows;
}

std::string speedup_csv(const std::vector<SpeedupRow>& rows) {
  std::ostringstream os;
  os.precision(10);
  os << "label,total_seconds,reference_seconds,speedup\n";
  for (const auto& r : rows) {
    os << r.label << ',' << r.total_seconds << ',' << r.reference_seconds << ',' << r.ratio << '\n';
  }
  return os.str();
}

std::string breakdown_csv(const std::vector<SimResult>& results) {
  std::ostringstream os;
  os.precision(10);
  os << "label,small_decode,large_decode,exposed_prefill,probe_overhead,residual_handoff,total\n";
  for (const auto& r : results) {
    const auto& b = r.breakdown;
    os << r.label << ',' << b.small_decode << ',' << b.large_decode << ',' << b.exposed_prefill
       << ',' << b.probe_overhead << ',' << b.residual_handoff << ',' << r.total_seconds << '\n';
  }
  return os.str();
}

}  // namespace handoff
