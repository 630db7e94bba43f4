/*
 * Copyright 2026 The hscurate Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <sstream>

#include "hscurate/cli.h"
#include "hscurate/hash.h"
#include "json.hpp"
#include "test_util.h"

namespace hscurate::cli {
namespace {

namespace fs = std::filesystem;
using hscurate::testing::read_file;
using hscurate::testing::TempDir;
using hscurate::testing::write_file;

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome run(std::vector<std::string> args) {
  args.insert(args.begin(), "hscurate");
  std::ostringstream out, err;
  const int code = dispatch(args, out, err);
  return {code, out.str(), err.str()};
}

// Runs the installed binary through the shell, in dir.
int shell(const fs::path& dir, const std::string& args) {
  const std::string cmd = "cd '" + dir.string() + "' && " + HSC_CLI + " " + args +
                          " >/dev/null 2>&1";
  const int st = std::system(cmd.c_str());
  return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

// A small synthetic corpus plus a noisy copy of its training snapshot.
void make_corpus(const fs::path& out) {
  ASSERT_EQ(run({"--out", out.string(), "import", "--synthetic", "--topics", "120", "--trusted",
                 "60", "--heldout-per-topic", "4"})
                .code,
            0);
  ASSERT_EQ(run({"--out", out.string(), "inject-noise", "--input", (out / "train").string(),
                 "--rate", "0.15", "--seed", "7"})
                .code,
            0);
}

std::vector<std::string> curate_args(const fs::path& out) {
  return {"--out", out.string(), "curate",
          "--train", (out / "noisy").string(),
          "--tsd", (out / "trusted.jsonl").string(),
          "--epochs", "40", "--batch-size", "8", "--lr", "1.0", "--feature-dim", "8192",
          "--train-seed", "1"};
}

TEST(Cli, UnknownSubcommandIsUsageError) {
  const auto r = run({"frobnicate"});
  EXPECT_EQ(r.code, kExitUsage);
  EXPECT_NE(r.err.find("Usage"), std::string::npos);
  EXPECT_EQ(run({}).code, kExitUsage);
  EXPECT_EQ(run({"curate", "--nope"}).code, kExitUsage);
  EXPECT_EQ(run({"--help"}).code, kExitOk);
}

TEST(Cli, LexiconHappyPath) {
  TempDir dir;
  write_file(dir / "d.jsonl",
             R"({"id":"1","text":"you are trash","label":1})" "\n"
             R"({"id":"2","text":"they never help","label":1})" "\n"
             R"({"id":"3","text":"nice day","label":0})" "\n");
  write_file(dir / "lex.txt", "trash\n");
  const auto r = run({"--out", (dir / "o").string(), "lexicon", "--dataset",
                      (dir / "d.jsonl").string(), "--lexicon", (dir / "lex.txt").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j.at("dataset"), "d");
  EXPECT_EQ(j.at("positives"), 2);
  EXPECT_DOUBLE_EQ(j.at("rate").get<double>(), 0.5);
  EXPECT_EQ(read_file(dir / "o" / "lexicon_report.jsonl"), r.out);
  EXPECT_TRUE(fs::exists(dir / "o" / "lexicon.resolved.toml"));
  EXPECT_EQ(run({"--out", (dir / "o").string(), "lexicon", "--dataset",
                 (dir / "missing.jsonl").string(), "--lexicon", (dir / "lex.txt").string()})
                .code,
            kExitUsage);
}

TEST(Cli, ImportCsvWithMapping) {
  TempDir dir;
  write_file(dir / "raw.csv", "id,tweet,class\n1,Hello @bob http://x.co/a,hate\n2,It's fine,none\n");
  write_file(dir / "map.json", R"({"hate":1,"none":0})");
  const auto r = run({"--out", (dir / "o").string(), "import", "--input", (dir / "raw.csv").string(),
                      "--mapping", (dir / "map.json").string(), "--text-col", "tweet",
                      "--label-col", "class", "--name", "ds"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto lines = read_file(dir / "o" / "ds" / "samples.jsonl");
  EXPECT_NE(lines.find("\"text\":\"Hello\""), std::string::npos) << lines;
  EXPECT_NE(lines.find("It is fine"), std::string::npos);
  write_file(dir / "map2.json", R"({"hate":1})");
  EXPECT_EQ(run({"--out", (dir / "o").string(), "import", "--input", (dir / "raw.csv").string(),
                 "--mapping", (dir / "map2.json").string(), "--text-col", "tweet", "--label-col",
                 "class"})
                .code,
            kExitUsage);
}

TEST(Cli, CurateWithLookupOracle) {
  TempDir dir;
  const fs::path out = dir / "o";
  make_corpus(out);
  auto args = curate_args(out);
  args.insert(args.end(), {"--oracle-kind", "mock_lookup", "--oracle-lookup",
                           (out / "oracle_lookup.json").string()});
  const auto r = run(args);
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_GE(j.at("loops").get<int>(), 2);
  EXPECT_TRUE(fs::exists(fs::path(j.at("run_dir").get<std::string>()) / "run.json"));
}

TEST(Cli, UnreachableLlmExitsThree) {
  TempDir dir;
  const fs::path out = dir / "o";
  make_corpus(out);
  auto args = curate_args(out);
  // Nothing listens on the discard port.
  args.insert(args.end(), {"--oracle-kind", "http_llm", "--oracle-endpoint",
                           "http://127.0.0.1:9/v1/chat/completions", "--oracle-model", "m",
                           "--oracle-retries", "2", "--oracle-backoff-ms", "1",
                           "--oracle-timeout-ms", "500"});
  const auto r = run(args);
  EXPECT_EQ(r.code, kExitOracleFailure) << r.out;
  EXPECT_EQ(nlohmann::json::parse(r.out).at("stop_reason"), "aborted");
}

TEST(Cli, AdapterProtocolErrorExitsTwo) {
  TempDir dir;
  const fs::path out = dir / "o";
  make_corpus(out);
  auto args = curate_args(out);
  args.insert(args.end(), {"--strategy", "drop", "--backend", "external", "--adapter",
                           std::string("stdio:") + HSC_FAKE_ADAPTER + " --garbage"});
  EXPECT_EQ(run(args).code, kExitAborted);
}

TEST(Cli, CurateThroughFakeAdapter) {
  TempDir dir;
  const fs::path out = dir / "o";
  make_corpus(out);
  auto args = curate_args(out);
  args.insert(args.end(), {"--strategy", "drop", "--max-loops", "2", "--backend", "external",
                           "--adapter", std::string("stdio:") + HSC_FAKE_ADAPTER});
  const auto r = run(args);
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(nlohmann::json::parse(r.out).at("loops"), 2);
}

TEST(Cli, InvalidTrustedSetRejected) {
  TempDir dir;
  const fs::path out = dir / "o";
  make_corpus(out);
  auto args = curate_args(out);
  args.insert(args.end(), {"--tsd-size", "500"});
  EXPECT_EQ(run(args).code, kExitUsage);
}

TEST(Cli, ConfigFilePrecedence) {
  TempDir dir;
  const fs::path out = dir / "o";
  make_corpus(out);
  write_file(dir / "c.toml", "[curate]\nstrategy = \"drop\"\nmax-loops = 2\ntop-x = 3\n");
  auto args = curate_args(out);
  args.insert(args.begin(), {"--config", (dir / "c.toml").string()});
  args.insert(args.end(), {"--top-x", "4"});
  ASSERT_EQ(run(args).code, 0);
  const auto resolved = read_file(out / "curate.resolved.toml");
  EXPECT_NE(resolved.find("curate.strategy=\"drop\""), std::string::npos) << resolved;
  EXPECT_NE(resolved.find("curate.max-loops=2"), std::string::npos);
  EXPECT_NE(resolved.find("curate.top-x=4"), std::string::npos);
  EXPECT_EQ(resolved.find("import."), std::string::npos);

  write_file(dir / "bad.toml", "[curate]\nbogus = 1\n");
  args = curate_args(out);
  args.insert(args.begin(), {"--config", (dir / "bad.toml").string()});
  EXPECT_EQ(run(args).code, kExitUsage);
}

TEST(Cli, ResolvedConfigReplays) {
  TempDir dir;
  const fs::path out = dir / "o";
  make_corpus(out);
  auto args = curate_args(out);
  args.insert(args.end(), {"--strategy", "drop", "--max-loops", "2"});
  const auto first = run(args);
  ASSERT_EQ(first.code, 0);
  fs::copy_file(out / "curate.resolved.toml", dir / "replay.toml");
  const auto again = run({"--config", (dir / "replay.toml").string(), "curate"});
  ASSERT_EQ(again.code, 0) << again.err;
  EXPECT_EQ(again.out, first.out);
}

TEST(Cli, ReferencePresets) {
  struct Preset {
    const char* name;
    int top_x;
    int loops;
  };
  for (const Preset p : {Preset{"waseem", 10, 16}, Preset{"davidson", 10, 3},
                         Preset{"founta", 20, 13}, Preset{"hatexplain", 10, 7}}) {
    TempDir dir;
    const fs::path out = dir / "o";
    make_corpus(out);
    auto args = curate_args(out);
    args.insert(args.begin(),
                {"--config", (fs::path(HSC_SOURCE_DIR) / "configs" / (std::string(p.name) + ".toml")).string()});
    ASSERT_EQ(run(args).code, 0) << p.name;
    const auto resolved = read_file(out / "curate.resolved.toml");
    EXPECT_NE(resolved.find("curate.strategy=\"drop\""), std::string::npos);
    EXPECT_NE(resolved.find("curate.top-x=" + std::to_string(p.top_x) + "\n"), std::string::npos);
    EXPECT_NE(resolved.find("curate.max-loops=" + std::to_string(p.loops) + "\n"), std::string::npos);
    EXPECT_NE(resolved.find("curate.stop-rule=\"fixed_loops\""), std::string::npos);
  }
}

TEST(Cli, EvaluateAndReport) {
  TempDir dir;
  const fs::path out = dir / "o";
  make_corpus(out);
  auto args = curate_args(out);
  args.insert(args.end(), {"--oracle-kind", "mock_lookup", "--oracle-lookup",
                           (out / "oracle_lookup.json").string()});
  const auto cur = run(args);
  ASSERT_EQ(cur.code, 0);
  const std::string run_dir = nlohmann::json::parse(cur.out).at("run_dir");
  const auto ev = run({"--out", out.string(), "evaluate", "--model",
                       "syn/noisy=" + (out / "noisy").string(), "--model", "syn/curated=" + run_dir,
                       "--tests", "held=" + (out / "heldout").string(), "--seeds", "3", "--n",
                       "50", "--epochs", "40", "--batch-size", "8", "--lr", "1.0",
                       "--feature-dim", "8192", "--train-seed", "1"});
  ASSERT_EQ(ev.code, 0) << ev.err;
  EXPECT_EQ(ev.out.rfind("| Train | Approach | held R | held F1 |", 0), 0u) << ev.out;
  EXPECT_NE(ev.out.find("| syn | curated |"), std::string::npos);
  EXPECT_EQ(read_file(out / "report.md"), ev.out);
  const auto csv = run({"--out", out.string(), "report", "--matrix", (out / "eval.json").string(),
                        "--format", "csv"});
  ASSERT_EQ(csv.code, 0);
  EXPECT_EQ(csv.out.rfind("train,test,approach,seed,recall,precision,f1\n", 0), 0u);
  // Two models x one test x three seeds.
  EXPECT_EQ(std::count(csv.out.begin(), csv.out.end(), '\n'), 7);
  EXPECT_EQ(run({"--out", out.string(), "evaluate", "--model", run_dir, "--tests",
                 (out / "heldout").string(), "--variant", "reannotated"})
                .code,
            kExitUsage);
}

// Same commands from two directories with pinned timestamps: every artifact
// matches byte for byte.
TEST(Cli, RerunIsByteIdentical) {
  TempDir a, b;
  ::setenv("SOURCE_DATE_EPOCH", "1700000000", 1);
  const std::string steps[] = {
      "--out o import --synthetic --topics 120 --trusted 60 --heldout-per-topic 2",
      "--out o inject-noise --input o/train --rate 0.15 --seed 7",
      "--out o curate --strategy reannotate-augment --max-loops 3 --train o/noisy "
      "--tsd o/trusted.jsonl --epochs 40 --batch-size 8 --lr 1.0 --feature-dim 8192 "
      "--oracle-kind mock_lookup --oracle-lookup o/oracle_lookup.json --oracle-cache o/cache.jsonl "
      "--para-keywords trash,vermin --para-cache o/cache.jsonl",
      "--out o evaluate --model o/noisy --tests o/heldout --seeds 2 --n 20 --format csv"};
  for (const auto& s : steps) {
    ASSERT_EQ(shell(a.path(), s), 0) << s;
    ASSERT_EQ(shell(b.path(), s), 0) << s;
  }
  ::unsetenv("SOURCE_DATE_EPOCH");
  std::size_t files = 0;
  for (const auto& e : fs::recursive_directory_iterator(a / "o")) {
    if (!e.is_regular_file()) continue;
    const auto rel = fs::relative(e.path(), a.path());
    ASSERT_TRUE(fs::exists(b.path() / rel)) << rel;
    EXPECT_EQ(sha256_hex(read_file(e.path())), sha256_hex(read_file(b.path() / rel))) << rel;
    ++files;
  }
  EXPECT_GT(files, 20u);
  EXPECT_TRUE(fs::exists(a / "o" / "cache.jsonl"));
}

}  // namespace
}  // namespace hscurate::cli
