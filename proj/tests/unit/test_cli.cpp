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

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "commands.hpp"
#include "doctest.h"
#include "handoff/errors.hpp"
#include "handoff/serialize.hpp"
#include "tool_config.hpp"

namespace fs = std::filesystem;
using namespace handoff;
using namespace handoff::cli;

namespace {

const fs::path kFixtures = HANDOFF_FIXTURE_DIR;

class TempDir {
 public:
  TempDir() {
    static std::mt19937_64 rng(std::random_device{}());
    path_ = fs::temp_directory_path() / ("handoff_cli_" + std::to_string(rng()));
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

struct Captured {
  std::ostringstream out;
  std::ostringstream err;
  Streams streams() { return {out, err}; }
};

void write(const fs::path& file, const std::string& text) {
  std::ofstream os(file, std::ios::binary | std::ios::trunc);
  os << text;
}

std::vector<json> read_jsonl(const fs::path& file) {
  std::vector<json> rows;
  std::istringstream in(read_file(file));
  for (std::string line; std::getline(in, line);) {
    if (!line.empty()) rows.push_back(json::parse(line));
  }
  return rows;
}

std::vector<std::vector<std::string>> read_csv(const fs::path& file) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(read_file(file));
  for (std::string line; std::getline(in, line);) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    rows.push_back(std::move(cells));
  }
  return rows;
}

Overrides to(const fs::path& dir) {
  Overrides o;
  o.out = dir;
  return o;
}

std::string words(const std::string& prefix, int count) {
  std::string out;
  for (int i = 1; i <= count; ++i) out += " " + prefix + std::to_string(i);
  return out;
}

ToolConfig endless_config() {
  const json small{{"name", "small"},
                   {"behavior",
                    {{"entries",
                      {{{"trigger", {{"on_turn", 1}}}, {"emission", "<think>" + words("s", 12000)}}}}}}};
  const json large{{"name", "large"},
                   {"behavior",
                    {{"entries",
                      {{{"trigger", {{"on_turn", 1}}}, {"emission", words("L", 12000)}}}}}}};
  const json config{{"backends", {small, large}},
                    {"run", {{"small", "small"}, {"large", "large"}, {"chunk_size", 16},
                             {"max_total_tokens", 8000}}},
                    {"workers", 1}};
  return parse_tool_config(config.dump(), kFixtures);
}

int run_binary(const std::string& args, const fs::path& stderr_file) {
  const std::string command =
      std::string("\"") + HANDOFF_CLI_BINARY + "\" " + args + " >/dev/null 2>\"" + stderr_file.string() + "\"";
  const int status = std::system(command.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("tool config resolves paths relative to its file") {
  const ToolConfig config = load_tool_config(kFixtures / "configs" / "scripted.json");
  CHECK(config.small_backend == "small");
  CHECK(config.backends.size() == 3);
  CHECK(config.run.chunk_size == 4);
  CHECK(config.annotate.prompt_template.find("{trace}") != std::string::npos);
  REQUIRE(config.sim.small_profile);
  CHECK(fs::exists(*config.sim.small_profile));
  CHECK(config.seed == 7);
  CHECK(config.workers == 2);
}

TEST_CASE("tool config errors name the offending field") {
  try {
    (void)parse_tool_config(R"({"backends": [], "colour": 1})", kFixtures);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("colour") != std::string::npos);
  }
  try {
    (void)parse_tool_config(R"({"backends": [{"name": "a", "kind": "scripted", "script": "nope.json"}]})",
                            kFixtures);
    FAIL("expected an error");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("nope.json") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_tool_config(R"({"backends": [{"name": "a"}, {"name": "a"}]})", kFixtures),
                  ConfigError);
  CHECK_THROWS_AS(parse_tool_config("{not json", kFixtures), Error);
  CHECK_THROWS_AS(parse_tool_config(R"({"backends": [{"name": "a", "behavior": {"entries": []}}],
                                        "annotate": {"annotator": "a"}})",
                                    kFixtures),
                  ConfigError);
}

TEST_CASE("run writes one record per question and is reproducible") {
  const ToolConfig config = load_tool_config(kFixtures / "configs" / "scripted.json");
  TempDir a, b;
  const fs::path questions = a.path() / "questions.jsonl";
  write(questions, "{\"id\": \"first\", \"question\": \"Evaluate the series.\"}\n"
                   "{\"question\": \"Evaluate the series again.\"}\n");
  Captured ca, cb;
  CHECK(cmd_run(config, questions, std::nullopt, to(a.path()), ca.streams()) == 0);
  CHECK(cmd_run(config, questions, std::nullopt, to(b.path()), cb.streams()) == 0);
  const std::string first = read_file(a.path() / "runs.jsonl");
  CHECK(first == read_file(b.path() / "runs.jsonl"));

  const auto rows = read_jsonl(a.path() / "runs.jsonl");
  REQUIRE(rows.size() == 2);
  CHECK(rows[0]["id"] == "first");
  CHECK(rows[1]["id"] == "q1");
  for (const auto& r : rows) {
    CHECK_FALSE(r.contains("error"));
    CHECK(r["coverage"].get<double>() > 0.0);
    const auto trace = r["result"]["trace"].get<GenerationTrace>();
    CHECK(trace.text.find("telescopes to 42.") != std::string::npos);
    CHECK(r["result"]["termination"] == "answer-close");
    CHECK(trace.spans.size() == 1);
  }
  CHECK(ca.out.str().find("runs=2 failed=0") != std::string::npos);
}

TEST_CASE("run accepts an inline question") {
  const ToolConfig config = load_tool_config(kFixtures / "configs" / "scripted.json");
  TempDir dir;
  Captured io;
  CHECK(cmd_run(config, std::nullopt, std::string("Sum it."), to(dir.path()), io.streams()) == 0);
  const auto rows = read_jsonl(dir.path() / "runs.jsonl");
  REQUIRE(rows.size() == 1);
  CHECK(rows[0]["question"] == "Sum it.");
}

TEST_CASE("run reports bad question lines without aborting the batch") {
  const ToolConfig config = load_tool_config(kFixtures / "configs" / "scripted.json");
  TempDir dir;
  const fs::path questions = dir.path() / "questions.jsonl";
  write(questions, "{\"question\": \"ok\"}\n{\"prompt\": \"wrong key\"}\n{\"question\": \"also ok\"}\n");
  Captured io;
  CHECK(cmd_run(config, questions, std::nullopt, to(dir.path()), io.streams()) == 1);
  const auto rows = read_jsonl(dir.path() / "runs.jsonl");
  REQUIRE(rows.size() == 3);
  CHECK_FALSE(rows[0].contains("error"));
  CHECK(rows[1]["error"].get<std::string>().find("question") != std::string::npos);
  CHECK_FALSE(rows[2].contains("error"));
  CHECK(io.err.str().find("failed") != std::string::npos);
}

TEST_CASE("run with a missing backend names it") {
  ToolConfig config = load_tool_config(kFixtures / "configs" / "scripted.json");
  config.large_backend = "oracle-70b";
  TempDir dir;
  Captured io;
  try {
    (void)cmd_run(config, std::nullopt, std::string("q"), to(dir.path()), io.streams());
    FAIL("expected a config error");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("oracle-70b") != std::string::npos);
  }
}

TEST_CASE("random offload policy over ten questions") {
  const ToolConfig config = endless_config();
  TempDir dir;
  const fs::path questions = dir.path() / "questions.jsonl";
  std::string lines;
  for (int i = 0; i < 10; ++i) lines += "{\"question\": \"question " + std::to_string(i) + "\"}\n";
  write(questions, lines);
  Overrides o = to(dir.path());
  o.policy = "random-offload:p=0.05,seed=7";
  Captured io;
  REQUIRE(cmd_run(config, questions, std::nullopt, o, io.streams()) == 0);
  const auto rows = read_jsonl(dir.path() / "runs.jsonl");
  REQUIRE(rows.size() == 10);
  double sum = 0.0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(rows[i]["config"]["policy"].get<std::string>().find("seed=" + std::to_string(7 + i)) !=
          std::string::npos);
    sum += rows[i]["coverage"].get<double>();
  }
  const double mean = sum / 10.0;
  CAPTURE(mean);
  CHECK(mean >= 0.02);
  CHECK(mean <= 0.08);
}

TEST_CASE("annotate the fixture corpus") {
  const ToolConfig config = load_tool_config(kFixtures / "configs" / "scripted.json");
  TempDir dir;
  Captured io;
  CHECK(cmd_annotate(config, kFixtures / "annotation" / "corpus.jsonl", to(dir.path()), io.streams()) == 0);
  const auto rows = read_jsonl(dir.path() / "annotated.jsonl");
  REQUIRE(rows.size() == 7);
  std::map<std::string, std::string> status;
  for (const auto& r : rows) status[r["question"].get<std::string>()] = r["status"].get<std::string>();
  CHECK(status["Q4"] == "partial");
  CHECK(status["Q6"] == "rejected");
  CHECK(status["Q7"] == "partial");
  CHECK(status["Q1"] == "ok");
  CHECK(status["Q2"] == "ok");
  const auto position = read_csv(dir.path() / "position_hist.csv");
  const auto offload = read_csv(dir.path() / "offload_hist.csv");
  CHECK(position.size() == 21);
  CHECK(offload.size() == 21);
  CHECK(position[0] == std::vector<std::string>{"bin_start", "bin_end", "mass"});
  CHECK(io.out.str().find("records=7") != std::string::npos);
  CHECK(io.out.str().find("rejected=1") != std::string::npos);
}

TEST_CASE("annotate with pre-supplied snippets never contacts the annotator") {
  const json config_json{
      {"backends", {{{"name", "remote"}, {"kind", "http"}, {"endpoint", "http://127.0.0.1:1"},
                     {"model", "m"}, {"timeout_seconds", 1}}}},
      {"annotate", {{"annotator", "remote"}, {"prompt_template", "annotation/prompt.txt"}, {"retries", 0}}}};
  const ToolConfig config = parse_tool_config(config_json.dump(), kFixtures);
  TempDir dir;
  const fs::path corpus = dir.path() / "corpus.jsonl";
  write(corpus,
        json{{"question", "a"},
             {"trace", "first compute the sum then check the bound against the earlier estimate and "
                       "confirm that nothing was lost while rearranging the terms of the series"},
             {"snippets", {"compute the sum"}}}.dump() + "\n" +
            json{{"question", "b"}, {"trace", "expand the product and collect like terms carefully before simplifying the "
                           "remaining fraction and checking the sign of every coefficient"},
                 {"snippets", {"collect like terms"}}}.dump() + "\n");
  Captured io;
  CHECK(cmd_annotate(config, corpus, to(dir.path()), io.streams()) == 0);
  for (const auto& r : read_jsonl(dir.path() / "annotated.jsonl")) {
    CHECK(r["status"] == "ok");
    CHECK_FALSE(r.contains("error"));
  }
  CHECK(io.err.str().empty());
}

TEST_CASE("annotate asks the annotator for traces without snippets") {
  const ToolConfig config = load_tool_config(kFixtures / "configs" / "scripted.json");
  TempDir dir;
  Captured io;
  CHECK(cmd_annotate(config, kFixtures / "annotation" / "traces.jsonl", to(dir.path()), io.streams()) == 0);
  const auto rows = read_jsonl(dir.path() / "annotated.jsonl");
  REQUIRE(rows.size() == 3);
  for (const auto& r : rows) {
    CHECK(r["snippets"].size() >= 1);
    CHECK(r["status"] == "ok");
    CHECK(r["annotated_text"].get<std::string>().find("<bigmodel>") != std::string::npos);
  }
}

TEST_CASE("annotate marks an unreachable annotator as partial") {
  const json config_json{
      {"backends", {{{"name", "remote"}, {"kind", "http"}, {"endpoint", "http://127.0.0.1:1"},
                     {"model", "m"}, {"timeout_seconds", 1}}}},
      {"annotate", {{"annotator", "remote"}, {"prompt_template", "annotation/prompt.txt"}, {"retries", 1}}}};
  const ToolConfig config = parse_tool_config(config_json.dump(), kFixtures);
  TempDir dir;
  const fs::path corpus = dir.path() / "corpus.jsonl";
  write(corpus, json{{"question", "a"}, {"trace", "some reasoning"}}.dump() + "\n");
  Captured io;
  CHECK(cmd_annotate(config, corpus, to(dir.path()), io.streams()) == 1);
  const auto rows = read_jsonl(dir.path() / "annotated.jsonl");
  REQUIRE(rows.size() == 1);
  CHECK(rows[0]["status"] == "partial");
  CHECK(rows[0].contains("error"));
}

TEST_CASE("annotate an empty corpus") {
  TempDir dir;
  const fs::path corpus = dir.path() / "empty.jsonl";
  write(corpus, "");
  Captured io;
  CHECK(cmd_annotate(ToolConfig{}, corpus, to(dir.path()), io.streams()) == 0);
  CHECK(read_file(dir.path() / "annotated.jsonl").empty());
  CHECK(read_file(dir.path() / "position_hist.csv") == "bin_start,bin_end,mass\n");
  CHECK(read_file(dir.path() / "offload_hist.csv") == "bin_start,bin_end,mass\n");
  CHECK(io.err.str().find("warning") != std::string::npos);
}

TEST_CASE("annotate statistics match histograms built from known spans") {
  // Forty four-character words; word k spans [5k, 5k + 4) of a 199-character trace.
  constexpr int kWords = 40;
  constexpr std::size_t kLength = kWords * 5 - 1;
  constexpr int kBins = 20;
  std::string trace;
  for (int k = 0; k < kWords; ++k) {
    std::ostringstream w;
    w << 'w' << std::setw(3) << std::setfill('0') << k;
    trace += (k == 0 ? "" : " ") + w.str();
  }
  REQUIRE(trace.size() == kLength);

  std::mt19937_64 rng(2024);
  std::vector<int> position_counts(kBins, 0), fraction_counts(kBins, 0);
  int positions = 0;
  std::string corpus;
  for (int r = 0; r < 100; ++r) {
    const int n = 1 + static_cast<int>(rng() % 8);
    std::vector<int> chosen;
    int k = static_cast<int>(rng() % 3);
    for (int i = 0; i < n && k < kWords; ++i) {
      chosen.push_back(k);
      k += 2 + static_cast<int>(rng() % 3);
    }
    json snippets = json::array();
    for (int c : chosen) {
      snippets.push_back(trace.substr(static_cast<std::size_t>(5 * c), 4));
      // Midpoint (10c + 4) / 2 over kLength, binned by integer division.
      position_counts[static_cast<std::size_t>(kBins * (10 * c + 4) / (2 * kLength))]++;
      ++positions;
    }
    const int m = static_cast<int>(chosen.size());
    fraction_counts[static_cast<std::size_t>(std::min(kBins - 1, kBins * m / kWords))]++;
    corpus += json{{"question", "r" + std::to_string(r)}, {"trace", trace}, {"snippets", snippets}}.dump() + "\n";
  }
  auto expected_csv = [&](const std::vector<int>& counts, int samples) {
    std::ostringstream os;
    os.precision(12);
    os << "bin_start,bin_end,mass\n";
    for (int b = 0; b < kBins; ++b) {
      os << static_cast<double>(b) / kBins << ',' << static_cast<double>(b + 1) / kBins << ','
         << static_cast<double>(counts[static_cast<std::size_t>(b)]) / samples << '\n';
    }
    return os.str();
  };

  TempDir dir;
  write(dir.path() / "corpus.jsonl", corpus);
  Captured io;
  REQUIRE(cmd_annotate(ToolConfig{}, dir.path() / "corpus.jsonl", to(dir.path()), io.streams()) == 0);
  CHECK(io.out.str().find("ok=100") != std::string::npos);
  CHECK(read_file(dir.path() / "position_hist.csv") == expected_csv(position_counts, positions));
  CHECK(read_file(dir.path() / "offload_hist.csv") == expected_csv(fraction_counts, 100));
}

TEST_CASE("reward scores the completion fixture") {
  TempDir dir;
  Captured io;
  CHECK(cmd_reward(ToolConfig{}, kFixtures / "completions" / "completions.jsonl", to(dir.path()),
                   io.streams()) == 0);
  const auto rows = read_jsonl(dir.path() / "rewards.jsonl");
  REQUIRE(rows.size() == 4);
  CHECK(rows[0]["total"].get<double>() == doctest::Approx(5.0));
  CHECK(rows[0]["accuracy"].get<double>() == 1.0);
  for (std::size_t i = 0; i < rows.size(); ++i) CHECK(rows[i]["line"] == i + 1);
}

TEST_CASE("reward keeps going past malformed lines") {
  TempDir dir;
  const fs::path file = dir.path() / "completions.jsonl";
  write(file, "{\"completion\": \"\", \"gold\": \"1\"}\nnot json\n{\"completion\": \"x\"}\n"
              "{\"completion\": \"<answer>1</answer>\", \"gold\": \"1\"}\n");
  Captured io;
  CHECK(cmd_reward(ToolConfig{}, file, to(dir.path()), io.streams()) == 1);
  const auto rows = read_jsonl(dir.path() / "rewards.jsonl");
  REQUIRE(rows.size() == 4);
  CHECK(rows[0]["total"].get<double>() == 0.0);
  CHECK(rows[1].contains("error"));
  CHECK(rows[2]["error"].get<std::string>().find("gold") != std::string::npos);
  CHECK(rows[3]["accuracy"].get<double>() == 1.0);
  CHECK(io.out.str().find("scored=2 errors=2") != std::string::npos);
}

TEST_CASE("reward batch equals line-by-line scoring") {
  std::mt19937_64 rng(5);
  const std::vector<std::string> pieces = {"<think>", "</think>", "<bigmodel>", "</bigmodel>",
                                           "<answer>", "</answer>", "7", "8", "step", "so"};
  std::vector<std::string> lines;
  for (int i = 0; i < 1000; ++i) {
    std::string completion;
    const int n = static_cast<int>(rng() % 12);
    for (int k = 0; k < n; ++k) completion += pieces[rng() % pieces.size()] + " ";
    lines.push_back(json{{"completion", completion}, {"gold", rng() % 2 ? "7" : "8"}}.dump());
  }
  TempDir batch_dir;
  std::string all;
  for (const auto& l : lines) all += l + "\n";
  write(batch_dir.path() / "batch.jsonl", all);
  Captured io;
  ToolConfig config;
  config.workers = 3;
  REQUIRE(cmd_reward(config, batch_dir.path() / "batch.jsonl", to(batch_dir.path()), io.streams()) == 0);
  const auto batch = read_jsonl(batch_dir.path() / "rewards.jsonl");
  REQUIRE(batch.size() == lines.size());

  TempDir single_dir;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    write(single_dir.path() / "one.jsonl", lines[i] + "\n");
    Captured one;
    REQUIRE(cmd_reward(ToolConfig{}, single_dir.path() / "one.jsonl", to(single_dir.path()),
                       one.streams()) == 0);
    json row = read_jsonl(single_dir.path() / "rewards.jsonl").at(0);
    row["line"] = i + 1;
    if (row != batch[i]) {
      CAPTURE(i);
      CHECK(row == batch[i]);
    }
  }
}

TEST_CASE("simulate the fixture scenarios") {
  const ToolConfig config = load_tool_config(kFixtures / "configs" / "scripted.json");
  TempDir dir;
  Captured io;
  REQUIRE(cmd_simulate(config, kFixtures / "sim" / "scenarios.json", to(dir.path()), io.streams()) == 0);
  const auto table = read_csv(dir.path() / "speedup.csv");
  REQUIRE(table.size() == 6);
  CHECK(table[0][0] == "label");
  CHECK(table[0][5] == "speedup_vs_large");
  const auto& one_span = table[1];
  CHECK(one_span[0] == "one-span-1.35pct");
  const double speedup = std::stod(one_span[5]);
  CHECK(speedup >= 8.0);
  CHECK(speedup <= 9.0);
  CHECK(fs::file_size(dir.path() / "sim_breakdown.csv") > 0);
}

TEST_CASE("simulate without offloading matches the small model") {
  TempDir dir;
  const json scenarios{{"small_profile", (kFixtures / "profiles" / "small.json").string()},
                       {"large_profile", (kFixtures / "profiles" / "large.json").string()},
                       {"scenarios", {{{"name", "none"}, {"total_tokens", 5000}, {"offload_fraction", 0.0}}}}};
  write(dir.path() / "s.json", scenarios.dump());
  Captured io;
  REQUIRE(cmd_simulate(ToolConfig{}, dir.path() / "s.json", to(dir.path()), io.streams()) == 0);
  const auto table = read_csv(dir.path() / "speedup.csv");
  REQUIRE(table.size() == 2);
  CHECK(std::stod(table[1][6]) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("non-pipelined totals are never below pipelined ones") {
  const ToolConfig config = load_tool_config(kFixtures / "configs" / "scripted.json");
  TempDir a, b;
  Overrides pipelined = to(a.path());
  pipelined.mode = "pipelined";
  Overrides sequential = to(b.path());
  sequential.mode = "non-pipelined";
  Captured ca, cb;
  REQUIRE(cmd_simulate(config, kFixtures / "sim" / "scenarios.json", pipelined, ca.streams()) == 0);
  REQUIRE(cmd_simulate(config, kFixtures / "sim" / "scenarios.json", sequential, cb.streams()) == 0);
  const auto p = read_csv(a.path() / "speedup.csv");
  const auto s = read_csv(b.path() / "speedup.csv");
  REQUIRE(p.size() == s.size());
  for (std::size_t i = 1; i < p.size(); ++i) {
    CAPTURE(p[i][0]);
    CHECK(p[i][1] == "pipelined");
    CHECK(s[i][1] == "non-pipelined");
    CHECK(std::stod(s[i][2]) >= std::stod(p[i][2]));
  }
}

TEST_CASE("simulate validation names scenario and field") {
  TempDir dir;
  const json scenarios{{"small_profile", (kFixtures / "profiles" / "small.json").string()},
                       {"large_profile", (kFixtures / "profiles" / "large.json").string()},
                       {"scenarios", {{{"name", "broken"}, {"total_tokens", 100}, {"offload_fraction", 1.5}}}}};
  write(dir.path() / "s.json", scenarios.dump());
  Captured io;
  try {
    (void)cmd_simulate(ToolConfig{}, dir.path() / "s.json", to(dir.path()), io.streams());
    FAIL("expected a config error");
  } catch (const ConfigError& e) {
    const std::string what = e.what();
    CHECK(what.find("broken") != std::string::npos);
    CHECK(what.find("offload_fraction") != std::string::npos);
  }
  const json missing{{"small_profile", (kFixtures / "profiles" / "small.json").string()},
                     {"large_profile", (kFixtures / "profiles" / "large.json").string()},
                     {"scenarios", {{{"name", "empty"}}}}};
  write(dir.path() / "m.json", missing.dump());
  try {
    (void)cmd_simulate(ToolConfig{}, dir.path() / "m.json", to(dir.path()), io.streams());
    FAIL("expected a config error");
  } catch (const ConfigError& e) {
    const std::string what = e.what();
    CHECK(what.find("empty") != std::string::npos);
    CHECK(what.find("total_tokens") != std::string::npos);
  }
}

TEST_CASE("plotdata raster for a span over the middle tenth") {
  // 100 characters once offload tags are stripped; the span covers [45, 55).
  const std::string text = "<think>" + std::string(38, 'a') + "<bigmodel>" + std::string(10, 'b') +
                           "</bigmodel>" + std::string(19, 'c') + "</think><answer>1</answer>";
  std::istringstream rows(plotdata_rows("r", text, 20, ControlTags{}));
  std::size_t bin = 0;
  for (std::string line; std::getline(rows, line); ++bin) {
    const bool high = bin == 9 || bin == 10;
    CHECK(line == "r," + std::to_string(bin) + "," + (high ? "1" : "0") + ",1,");
  }
  CHECK(bin == 20);
}

TEST_CASE("plotdata flags unclosed offloads on every bin") {
  TempDir dir;
  write(dir.path() / "runs.jsonl",
        json{{"id", "bad"}, {"text", "<think> a <bigmodel> b c d"}}.dump() + "\n");
  Captured io;
  REQUIRE(cmd_trace_plotdata(ToolConfig{}, dir.path() / "runs.jsonl", 20, to(dir.path()), io.streams()) == 0);
  const auto rows = read_csv(dir.path() / "plotdata.csv");
  REQUIRE(rows.size() == 21);
  CHECK(rows[0] == std::vector<std::string>{"run_id", "bin", "offloaded", "legal", "reason"});
  for (std::size_t i = 1; i < rows.size(); ++i) {
    CHECK(rows[i][0] == "bad");
    CHECK(rows[i][3] == "0");
    CHECK(rows[i][4].find("unclosed-offload") != std::string::npos);
  }
}

TEST_CASE("plotdata keeps stacked runs in order") {
  const ToolConfig config = load_tool_config(kFixtures / "configs" / "scripted.json");
  TempDir dir;
  const fs::path questions = dir.path() / "questions.jsonl";
  std::string lines;
  for (int i = 0; i < 10; ++i) lines += "{\"id\": \"run" + std::to_string(i) + "\", \"question\": \"q\"}\n";
  write(questions, lines);
  Captured io;
  REQUIRE(cmd_run(config, questions, std::nullopt, to(dir.path()), io.streams()) == 0);
  REQUIRE(cmd_trace_plotdata(config, dir.path() / "runs.jsonl", 10, to(dir.path()), io.streams()) == 0);
  const auto rows = read_csv(dir.path() / "plotdata.csv");
  REQUIRE(rows.size() == 1 + 10 * 10);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    CHECK(rows[i][0] == "run" + std::to_string((i - 1) / 10));
    CHECK(rows[i][1] == std::to_string((i - 1) % 10));
    CHECK(rows[i][3] == "1");
  }
  bool any_high = false;
  for (std::size_t i = 1; i < rows.size(); ++i) any_high = any_high || rows[i][2] == "1";
  CHECK(any_high);
}

TEST_CASE("binary exit codes") {
  TempDir dir;
  const fs::path err = dir.path() / "stderr.txt";
  const fs::path bad = dir.path() / "bad.json";
  write(bad, R"({"backends": [], "unknown_section": {}})");
  CHECK(run_binary("reward --config \"" + bad.string() + "\" \"" +
                       (kFixtures / "completions" / "completions.jsonl").string() + "\"",
                   err) == 2);
  CHECK(read_file(err).find("unknown_section") != std::string::npos);

  CHECK(run_binary("reward --out \"" + dir.path().string() + "\" \"" +
                       (kFixtures / "completions" / "completions.jsonl").string() + "\"",
                   err) == 0);
  CHECK(fs::exists(dir.path() / "rewards.jsonl"));

  CHECK(run_binary("run --config \"" + (kFixtures / "configs" / "scripted.json").string() + "\" --out \"" +
                       dir.path().string() + "\"",
                   err) == 2);
  CHECK(run_binary("frobnicate", err) != 0);
}
