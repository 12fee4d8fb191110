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

#include "commands.hpp"

#include <atomic>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <thread>
#include <vector>

#include "handoff/errors.hpp"
#include "handoff/serialize.hpp"

namespace handoff::cli {

namespace fs = std::filesystem;

namespace {

std::vector<std::string> read_lines(const fs::path& file) {
  std::istringstream in(read_file(file));
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    lines.push_back(line);
  }
  return lines;
}

// Runs fn(i) for i in [0, n) on up to `workers` threads; results keep input order.
template <typename T>
std::vector<T> parallel_map(std::size_t n, std::size_t workers,
                            const std::function<T(std::size_t)>& fn) {
  std::vector<T> results(n);
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < n; i = next++) results[i] = fn(i);
  };
  const std::size_t threads = std::min(std::max<std::size_t>(workers, 1), std::max<std::size_t>(n, 1));
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  return results;
}

fs::path output_dir(const ToolConfig& config, const Overrides& overrides) {
  fs::path dir = overrides.out.value_or(config.output_dir);
  fs::create_directories(dir);
  return dir;
}

void write_file(const fs::path& file, const std::string& content) {
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write " + file.string());
  out << content;
}

std::size_t worker_count(const ToolConfig& config, const Overrides& overrides) {
  const std::size_t n = overrides.workers.value_or(config.workers);
  if (n < 1) throw ConfigError("workers must be at least 1");
  return n;
}

json parse_line(const std::string& line) {
  json j = json::parse(line);
  if (!j.is_object()) throw ParseError("line", "expected a JSON object");
  return j;
}

}  // namespace

// ---------------------------------------------------------------------------
// run
// ---------------------------------------------------------------------------

int cmd_run(const ToolConfig& config, const std::optional<fs::path>& questions,
            const std::optional<std::string>& inline_question, const Overrides& overrides,
            Streams io) {
  if (config.small_backend.empty() || config.large_backend.empty()) {
    throw ConfigError("run needs run.small and run.large backend names");
  }
  const BackendDef& small_def = config.backend(config.small_backend);
  const BackendDef& large_def = config.backend(config.large_backend);

  RunConfig base = config.run;
  if (overrides.policy) base.policy = OffloadPolicy::parse(*overrides.policy);
  if (overrides.mode) base.mode = execution_mode_from_string(*overrides.mode);
  base.validate();
  const std::uint64_t base_seed = overrides.seed.value_or(base.policy.seed);

  struct Item {
    std::string id;
    std::string question;
    std::string error;
  };
  std::vector<Item> items;
  if (inline_question) items.push_back({"q0", *inline_question, {}});
  if (questions) {
    const auto lines = read_lines(*questions);
    for (std::size_t i = 0; i < lines.size(); ++i) {
      Item item;
      item.id = "q" + std::to_string(items.size());
      try {
        const json j = parse_line(lines[i]);
        if (!j.contains("question") || !j["question"].is_string()) {
          throw ParseError("question", "missing or not a string");
        }
        item.question = j["question"].get<std::string>();
        if (j.contains("id")) item.id = j["id"].is_string() ? j["id"].get<std::string>() : j["id"].dump();
      } catch (const std::exception& e) {
        item.error = "line " + std::to_string(i + 1) + ": " + e.what();
      }
      items.push_back(std::move(item));
    }
  }
  if (items.empty()) io.err << "warning: no questions given\n";

  const auto records = parallel_map<json>(
      items.size(), worker_count(config, overrides), [&](std::size_t i) {
        const Item& item = items[i];
        RunConfig rc = base;
        if (rc.policy.kind == PolicyKind::random_offload) rc.policy.seed = base_seed + i;
        json record{{"id", item.id}, {"index", i}, {"question", item.question}};
        record["config"] = rc;
        record["small_backend"] = small_def.name;
        record["large_backend"] = large_def.name;
        if (!item.error.empty()) {
          record["error"] = item.error;
          return record;
        }
        try {
          auto small = make_backend(small_def);
          auto large = make_backend(large_def);
          BackendSession small_session = small->open_session(ModelRole::small);
          BackendSession large_session = large->open_session(ModelRole::large);
          const GenerationResult result =
              run_cooperative(item.question, small_session, large_session, rc);
          record["coverage"] = coverage(result.trace, CoverageCounting::whitespace_words, rc.tags);
          record["result"] = result;
          if (result.error) record["error"] = *result.error;
        } catch (const std::exception& e) {
          record["error"] = e.what();
        }
        return record;
      });

  const fs::path dir = output_dir(config, overrides);
  std::string out;
  int failures = 0;
  for (const auto& r : records) {
    out += r.dump() + "\n";
    if (r.contains("error")) {
      ++failures;
      io.err << "run " << r["id"].get<std::string>() << " failed: " << r["error"].get<std::string>()
             << "\n";
    }
  }
  write_file(dir / "runs.jsonl", out);
  io.out << "runs=" << records.size() << " failed=" << failures << " -> "
         << (dir / "runs.jsonl").string() << "\n";
  return failures == 0 ? 0 : 1;
}

// ---------------------------------------------------------------------------
// annotate
// ---------------------------------------------------------------------------

int cmd_annotate(const ToolConfig& config, const fs::path& corpus, const Overrides& overrides,
                 Streams io) {
  const auto lines = read_lines(corpus);
  if (lines.empty()) io.err << "warning: empty corpus " << corpus.string() << "\n";

  struct Outcome {
    std::optional<AnnotationRecord> record;
    std::string error;
  };
  const auto outcomes = parallel_map<Outcome>(
      lines.size(), worker_count(config, overrides), [&](std::size_t i) {
        Outcome outcome;
        json j;
        try {
          j = parse_line(lines[i]);
          if (!j.contains("trace") || !j["trace"].is_string()) {
            throw ParseError("trace", "missing or not a string");
          }
        } catch (const std::exception& e) {
          outcome.error = "line " + std::to_string(i + 1) + ": " + e.what();
          return outcome;
        }
        const std::string question = j.value("question", std::string{});
        const std::string trace = j["trace"].get<std::string>();
        std::vector<std::string> snippets;
        if (j.contains("snippets")) {
          snippets = j["snippets"].get<std::vector<std::string>>();
        } else if (config.annotate.annotator.empty()) {
          outcome.error = "no snippets and no annotator configured";
        } else {
          const auto backend = make_backend(config.backend(config.annotate.annotator));
          for (std::size_t attempt = 0; attempt <= config.annotate.retries; ++attempt) {
            try {
              BackendSession session = backend->open_session(ModelRole::annotator);
              snippets = request_snippets(trace, session, config.annotate.prompt_template,
                                          config.annotate.max_tokens, config.annotate.delimiters);
              outcome.error.clear();
              break;
            } catch (const BackendError& e) {
              outcome.error = e.what();
              if (!e.retriable()) break;
            } catch (const AnnotationFormatError& e) {
              outcome.error = e.what();
              break;
            }
          }
        }
        outcome.record = annotate_record(question, trace, snippets, config.match, config.reward.tags);
        return outcome;
      });

  std::vector<AnnotationRecord> records;
  std::string out;
  int errors = 0;
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    const auto& o = outcomes[i];
    json line;
    if (o.record) {
      line = *o.record;
      records.push_back(*o.record);
    } else {
      line = json{{"line", i + 1}};
    }
    if (!o.error.empty()) {
      line["error"] = o.error;
      ++errors;
      io.err << "record " << i + 1 << ": " << o.error << "\n";
    }
    out += line.dump() + "\n";
  }

  const fs::path dir = output_dir(config, overrides);
  write_file(dir / "annotated.jsonl", out);
  const StatsSummary stats = dataset_stats(records);
  const std::string header = "bin_start,bin_end,mass\n";
  write_file(dir / "position_hist.csv", stats.empty ? header : stats.position_histogram.to_csv());
  write_file(dir / "offload_hist.csv",
             stats.empty ? header : stats.offload_fraction_histogram.to_csv());
  io.out << "records=" << lines.size() << " ok=" << stats.ok << " partial=" << stats.partial
         << " rejected=" << stats.rejected << " errors=" << errors << "\n";
  return errors == 0 ? 0 : 1;
}

// ---------------------------------------------------------------------------
// reward
// ---------------------------------------------------------------------------

int cmd_reward(const ToolConfig& config, const fs::path& completions, const Overrides& overrides,
               Streams io) {
  const auto lines = read_lines(completions);
  const auto rows = parallel_map<json>(
      lines.size(), worker_count(config, overrides), [&](std::size_t i) {
        try {
          const json j = parse_line(lines[i]);
          if (!j.contains("completion") || !j["completion"].is_string()) {
            throw ParseError("completion", "missing or not a string");
          }
          if (!j.contains("gold") || !j["gold"].is_string()) {
            throw ParseError("gold", "missing or not a string");
          }
          json row = total_reward(j["completion"].get<std::string>(), j["gold"].get<std::string>(),
                                  config.reward);
          row["line"] = i + 1;
          return row;
        } catch (const std::exception& e) {
          return json{{"line", i + 1}, {"error", e.what()}};
        }
      });

  std::string out;
  int errors = 0;
  for (const auto& r : rows) {
    out += r.dump() + "\n";
    if (r.contains("error")) {
      ++errors;
      io.err << "line " << r["line"].get<std::size_t>() << ": " << r["error"].get<std::string>()
             << "\n";
    }
  }
  const fs::path dir = output_dir(config, overrides);
  write_file(dir / "rewards.jsonl", out);
  io.out << "scored=" << rows.size() - errors << " errors=" << errors << "\n";
  return errors == 0 ? 0 : 1;
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

int cmd_simulate(const ToolConfig& config, const fs::path& scenarios, const Overrides& overrides,
                 Streams io) {
  json file;
  try {
    file = json::parse(read_file(scenarios));
  } catch (const json::parse_error& e) {
    throw ParseError(scenarios.string(), e.what());
  }
  require_known_keys(file, {"small_profile", "large_profile", "scenarios"}, "scenarios file");
  const fs::path base = fs::absolute(scenarios).parent_path();
  auto profile = [&](const char* key, const std::optional<fs::path>& fallback) {
    if (file.contains(key)) {
      const fs::path p(file[key].get<std::string>());
      return load_profile(p.is_absolute() ? p : base / p);
    }
    if (!fallback) throw ConfigError(std::string("no ") + key + " in config or scenario file");
    return load_profile(*fallback);
  };
  const ThroughputProfile small = profile("small_profile", config.sim.small_profile);
  const ThroughputProfile large = profile("large_profile", config.sim.large_profile);
  if (!file.contains("scenarios") || !file["scenarios"].is_array()) {
    throw ParseError("scenarios", "expected a list");
  }

  std::vector<SimResult> results;
  std::ostringstream speedups;
  speedups.precision(10);
  speedups << "label,mode,total_seconds,small_only_seconds,large_only_seconds,speedup_vs_large,"
              "speedup_vs_small\n";
  for (const auto& s : file["scenarios"]) {
    const std::string name = s.value("name", "scenario" + std::to_string(results.size()));
    try {
      require_known_keys(s, {"name", "segments", "total_tokens", "calibrate_small_seconds",
                             "offload_fraction", "spans", "sim"},
                         name);
      SimConfig sim = config.sim.config;
      if (s.contains("sim")) {
        json merged = sim;
        merged.update(s["sim"]);
        sim = merged.get<SimConfig>();
      }
      if (overrides.mode) sim.mode = sim_mode_from_string(*overrides.mode);

      SegmentedTrace trace;
      if (s.contains("segments")) {
        trace = s["segments"].get<SegmentedTrace>();
        trace.normalize();
      } else {
        std::size_t total = 0;
        if (s.contains("total_tokens")) {
          total = s["total_tokens"].get<std::size_t>();
        } else if (s.contains("calibrate_small_seconds")) {
          // Token count whose small-only decode time equals the given seconds.
          const double seconds = s["calibrate_small_seconds"].get<double>();
          total = static_cast<std::size_t>(
              std::llround(seconds * small.decode_rate.at(static_cast<double>(sim.prompt_tokens))));
        } else {
          throw ParseError("total_tokens", "missing (or give segments / calibrate_small_seconds)");
        }
        const double fraction = s.value("offload_fraction", 0.0);
        if (!(fraction >= 0.0 && fraction <= 1.0)) {
          throw ParseError("offload_fraction", "must lie in [0, 1]");
        }
        trace = segmented_trace(total, fraction, s.value("spans", 1));
      }

      SimResult result = simulate(trace, small, large, sim);
      result.label = name;
      const std::size_t total = trace.total_tokens();
      const SimResult small_only = simulate_single_model(total, small, sim.prompt_tokens);
      const SimResult large_only = simulate_single_model(total, large, sim.prompt_tokens);
      const double vs_large = large_only.total_seconds / result.total_seconds;
      const double vs_small = small_only.total_seconds / result.total_seconds;
      result.speedup_vs[large.model_name] = vs_large;
      result.speedup_vs[small.model_name] = vs_small;
      speedups << name << ',' << to_string(sim.mode) << ',' << result.total_seconds << ','
               << small_only.total_seconds << ',' << large_only.total_seconds << ',' << vs_large
               << ',' << vs_small << '\n';
      results.push_back(std::move(result));
    } catch (const Error& e) {
      throw ConfigError("scenario '" + name + "': " + e.what());
    } catch (const json::exception& e) {
      throw ConfigError("scenario '" + name + "': " + e.what());
    }
  }

  const fs::path dir = output_dir(config, overrides);
  write_file(dir / "sim_breakdown.csv", breakdown_csv(results));
  write_file(dir / "speedup.csv", speedups.str());
  io.out << "scenarios=" << results.size() << " -> " << (dir / "speedup.csv").string() << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// trace-plotdata
// ---------------------------------------------------------------------------

std::string plotdata_rows(const std::string& run_id, std::string_view text, std::size_t bins,
                          const ControlTags& tags) {
  const TraceValidation validation = validate_trace(text, tags);
  const TagPairing pairing = pair_offload_tags(text, tags);
  const std::size_t length = strip_offload_tags(text, tags).size();
  std::string reason;
  for (const auto r : validation.illegal_reasons) {
    if (!reason.empty()) reason += ';';
    reason += to_string(r);
  }
  const int legal = validation.ok() ? 1 : 0;

  std::ostringstream os;
  for (std::size_t b = 0; b < bins; ++b) {
    bool offloaded = false;
    for (const auto& region : pairing.regions) {
      // Bin b covers stripped offsets [b*L/bins, (b+1)*L/bins).
      if (region.start * bins < (b + 1) * length && region.end * bins > b * length) {
        offloaded = true;
        break;
      }
    }
    os << run_id << ',' << b << ',' << (offloaded ? 1 : 0) << ',' << legal << ',' << reason << '\n';
  }
  return os.str();
}

int cmd_trace_plotdata(const ToolConfig& config, const fs::path& runs, std::size_t bins,
                       const Overrides& overrides, Streams io) {
  if (bins < 1) throw ConfigError("bins must be at least 1");
  const auto lines = read_lines(runs);
  std::string out = "run_id,bin,offloaded,legal,reason\n";
  int errors = 0;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    try {
      const json j = parse_line(lines[i]);
      std::string id = "run" + std::to_string(i);
      if (j.contains("id")) id = j["id"].is_string() ? j["id"].get<std::string>() : j["id"].dump();
      const json* text = nullptr;
      if (j.contains("result") && j["result"].contains("trace")) {
        text = &j["result"]["trace"]["text"];
      } else if (j.contains("trace") && j["trace"].is_object()) {
        text = &j["trace"]["text"];
      } else if (j.contains("annotated_text")) {
        text = &j["annotated_text"];
      } else if (j.contains("text")) {
        text = &j["text"];
      }
      if (text == nullptr || !text->is_string()) throw ParseError("text", "no trace text in record");
      out += plotdata_rows(id, text->get<std::string>(), bins, config.run.tags);
    } catch (const std::exception& e) {
      ++errors;
      io.err << "line " << i + 1 << ": " << e.what() << "\n";
    }
  }
  const fs::path dir = output_dir(config, overrides);
  write_file(dir / "plotdata.csv", out);
  io.out << "runs=" << lines.size() - errors << " bins=" << bins << " -> "
         << (dir / "plotdata.csv").string() << "\n";
  return errors == 0 ? 0 : 1;
}

}  // namespace handoff::cli
