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
#include <sstream>

#include "handoff/annotate.hpp"
#include "handoff/errors.hpp"

namespace handoff {

std::string Histogram::to_csv() const {
  std::ostringstream os;
  os.precision(12);
  os << "bin_start,bin_end,mass\n";
  for (std::size_t i = 0; i < mass.size(); ++i) {
    os << edges[i] << ',' << edges[i + 1] << ',' << mass[i] << '\n';
  }
  return os.str();
}

Histogram unit_histogram(std::span<const double> values, std::size_t bins) {
  if (bins < 1) throw DomainError("histogram needs at least one bin");
  constexpr double kNudge = 1e-9;
  Histogram h;
  h.edges.resize(bins + 1);
  for (std::size_t i = 0; i <= bins; ++i) {
    h.edges[i] = static_cast<double>(i) / static_cast<double>(bins);
  }
  h.mass.assign(bins, 0.0);
  for (double v : values) {
    if (!(v >= 0.0 && v <= 1.0)) throw DomainError("histogram values must lie in [0, 1]");
    const auto raw = static_cast<std::size_t>(std::floor(v * static_cast<double>(bins) + kNudge));
    h.mass[std::min(raw, bins - 1)] += 1.0;
  }
  h.samples = values.size();
  if (h.samples > 0) {
    for (auto& m : h.mass) m /= static_cast<double>(h.samples);
  }
  return h;
}

StatsSummary dataset_stats(std::span<const AnnotationRecord> records, std::size_t bins) {
  StatsSummary summary;
  std::vector<double> positions;
  std::vector<double> fractions;
  for (const auto& r : records) {
    switch (r.status) {
      case AnnotationStatus::ok: ++summary.ok; break;
      case AnnotationStatus::partial: ++summary.partial; break;
      case AnnotationStatus::rejected: ++summary.rejected; continue;
    }
    fractions.push_back(r.offload_fraction);
    if (r.trace.empty()) continue;
    const double length = static_cast<double>(r.trace.size());
    for (const auto& s : r.matched_spans) {
      positions.push_back(static_cast<double>(s.start + s.end) / 2.0 / length);
    }
  }
  summary.position_histogram = unit_histogram(positions, bins);
  summary.offload_fraction_histogram = unit_histogram(fractions, bins);
  summary.empty = fractions.empty();
  return summary;
}

}  // namespace handoff
