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

#include <cmath>
#include <set>

#include "hscurate/errors.h"
#include "hscurate/pipeline.h"
#include "hscurate/synthetic.h"
#include "test_util.h"

namespace hscurate::pipeline {
namespace {

namespace fs = std::filesystem;
using hscurate::testing::read_file;
using hscurate::testing::sample;
using hscurate::testing::TempDir;

synthetic::Corpus small_corpus() {
  synthetic::Spec spec;
  spec.topics = 200;
  spec.trusted = 160;
  spec.heldout_per_topic = 1;
  return synthetic::generate(spec);
}

CurationConfig base_config(Strategy s) {
  CurationConfig c;
  c.strategy = s;
  c.top_x = 10;
  c.max_loops = 6;
  c.stop_rule = StopRule::kFixedLoops;
  c.train = synthetic::train_config(1);
  return c;
}

class DownAnnotator final : public oracle::Annotator {
 public:
  int annotate(std::string_view) override { throw TransportError("service unreachable"); }
  std::string fingerprint() const override { return "down"; }
};

TEST(CurationConfig, Validation) {
  CurationConfig c;
  EXPECT_NO_THROW(c.validate());
  c.top_x = 0;
  EXPECT_THROW(c.validate(), PreconditionError);
  c = {};
  c.max_loops = 0;
  EXPECT_THROW(c.validate(), PreconditionError);
  c = {};
  c.train.epochs = 0;
  EXPECT_THROW(c.validate(), PreconditionError);
  EXPECT_EQ(parse_strategy("reannotate-augment"), Strategy::kReannotateAugment);
  EXPECT_EQ(parse_stop_rule("fixed_loops"), StopRule::kFixedLoops);
  EXPECT_EQ(parse_criterion("last"), SelectCriterion::kLast);
  EXPECT_THROW(parse_strategy("burn"), PreconditionError);
}

TEST(InjectNoise, FlipCounts) {
  std::vector<corpus::Sample> s;
  for (int i = 0; i < 100; ++i) s.push_back(sample("s" + std::to_string(i), "t" + std::to_string(i), i % 2));
  const auto ds = corpus::DatasetSnapshot::create(std::move(s));
  const auto a = inject_noise(ds, 0.1, 3);
  EXPECT_EQ(a.corrupted_ids.size(), 10u);
  EXPECT_EQ(still_corrupted(a.snapshot, a.corrupted_ids, ds), 10u);
  std::size_t differ = 0;
  for (std::size_t i = 0; i < ds.size(); ++i) differ += a.snapshot[i].label != ds[i].label;
  EXPECT_EQ(differ, 10u);
  EXPECT_TRUE(std::is_sorted(a.corrupted_ids.begin(), a.corrupted_ids.end()));
  EXPECT_EQ(inject_noise(ds, 0.1, 3).corrupted_ids, a.corrupted_ids);
  EXPECT_EQ(inject_noise(ds, 0.1, 3).snapshot.snapshot_id(), a.snapshot.snapshot_id());
  EXPECT_NE(inject_noise(ds, 0.1, 4).corrupted_ids, a.corrupted_ids);
  EXPECT_EQ(inject_noise(ds, 0.011, 3).corrupted_ids.size(), 2u);
  EXPECT_THROW(inject_noise(ds, 0.0, 1), PreconditionError);
  EXPECT_THROW(inject_noise(ds, 1.0, 1), PreconditionError);
  EXPECT_EQ(a.snapshot.lineage()->parent_snapshot_id, ds.snapshot_id());
}

TEST(InjectNoise, SyntheticTwoHundred) {
  synthetic::Spec spec;
  spec.topics = 200;
  spec.trusted = 100;
  const auto c = synthetic::generate(spec);
  ASSERT_EQ(c.train.size(), 200u);
  const auto n = inject_noise(c.train, 0.15, 7);
  EXPECT_EQ(n.corrupted_ids.size(), 30u);
  EXPECT_EQ(still_corrupted(n.snapshot, n.corrupted_ids, c.train), 30u);
}

TEST(StillCorrupted, IgnoresMissingIds) {
  const auto truth = corpus::DatasetSnapshot::create({sample("a", "x", 1), sample("b", "y", 0)});
  const auto ds = corpus::DatasetSnapshot::create({sample("a", "x", 0)});
  EXPECT_EQ(still_corrupted(ds, {"a", "b"}, truth), 1u);
}

CurationRun run_with(std::vector<double> acc) {
  CurationRun r;
  for (std::size_t i = 0; i < acc.size(); ++i) {
    LoopSummary s;
    s.loop = static_cast<int>(i + 1);
    s.snapshot_id = "snap-" + std::to_string(i + 1);
    s.tsd_accuracy = acc[i];
    r.loops.push_back(s);
  }
  return r;
}

TEST(SelectBestLoop, Examples) {
  EXPECT_EQ(select_best_loop(run_with({0.7, 0.8, 0.8}), SelectCriterion::kMaxTsdAccuracy), "snap-2");
  EXPECT_EQ(select_best_loop_index(run_with({0.7, 0.8, 0.8}), SelectCriterion::kMaxTsdAccuracy), 2);
  EXPECT_EQ(select_best_loop(run_with({0.7, 0.8, 0.6}), SelectCriterion::kLast), "snap-3");
  EXPECT_EQ(select_best_loop(run_with({0.5}), SelectCriterion::kMaxTsdAccuracy), "snap-1");
  EXPECT_EQ(select_best_loop(run_with({0.5}), SelectCriterion::kLast), "snap-1");
  EXPECT_THROW(select_best_loop(run_with({}), SelectCriterion::kLast), PreconditionError);
}

TEST(PlateauRule, TwoLoopsWithoutImprovement) {
  EXPECT_FALSE(plateau_reached({0.5}));
  EXPECT_FALSE(plateau_reached({0.5, 0.5}));
  EXPECT_FALSE(plateau_reached({0.5, 0.6, 0.5}));
  EXPECT_TRUE(plateau_reached({0.5, 0.6, 0.6, 0.55}));
  EXPECT_FALSE(plateau_reached({0.5, 0.6, 0.6, 0.61}));
  EXPECT_TRUE(plateau_reached({0.9, 0.8, 0.7}));
}

TEST(RunCuration, NoErrorsMeansOneLoop) {
  const auto c = small_corpus();
  TempDir dir;
  model::BuiltinTrainer trainer;
  RunEnv env{dir.path(), "", &trainer, nullptr, nullptr, {}};
  const auto run = run_curation(base_config(Strategy::kDrop), c.train, c.trusted, env);
  ASSERT_EQ(run.loops.size(), 1u);
  EXPECT_EQ(run.stop_reason, "no_errors");
  EXPECT_EQ(run.loops[0].errors, 0u);
  EXPECT_FALSE(run.loops[0].next_snapshot_id);
  EXPECT_EQ(run.selected_loop, 1);
  EXPECT_FALSE(fs::exists(loop_dir(run_dir(dir.path(), run.run_id), 2)));
}

TEST(RunCuration, DropShrinksSnapshotEveryLoop) {
  const auto c = small_corpus();
  const auto noisy = inject_noise(c.train, 0.15, 7).snapshot;
  TempDir dir;
  model::BuiltinTrainer trainer;
  RunEnv env{dir.path(), "", &trainer, nullptr, nullptr, {}};
  const auto run = run_curation(base_config(Strategy::kDrop), noisy, c.trusted, env);
  ASSERT_GE(run.loops.size(), 2u);
  EXPECT_LE(run.loops.size(), 6u);
  const fs::path rdir = run_dir(dir.path(), run.run_id);
  for (std::size_t i = 0; i + 1 < run.loops.size(); ++i) {
    const auto& l = run.loops[i];
    ASSERT_GT(l.union_size, 0u);
    EXPECT_EQ(run.loops[i + 1].snapshot_size, l.snapshot_size - l.union_size);
    EXPECT_LT(run.loops[i + 1].snapshot_size, l.snapshot_size);
    EXPECT_EQ(*l.next_snapshot_id, run.loops[i + 1].snapshot_id);
    // Lineage follows loop order.
    const auto next = corpus::read_snapshot(loop_dir(rdir, l.loop + 1) / "snapshot");
    EXPECT_EQ(next.lineage()->parent_snapshot_id, l.snapshot_id);
    EXPECT_EQ(next.lineage()->intervention, "drop@loop" + std::to_string(l.loop));
    // Union members come from that loop's snapshot.
    const auto snap = corpus::read_snapshot(loop_dir(rdir, l.loop) / "snapshot");
    const auto rep = influence::InfluenceReport::from_json(
        nlohmann::json::parse(read_file(loop_dir(rdir, l.loop) / "influence.json")));
    for (const auto& id : rep.union_ids) EXPECT_NE(snap.find(id), nullptr) << id;
  }
}

TEST(RunCuration, LayoutAndRunFiles) {
  const auto c = small_corpus();
  const auto noisy = inject_noise(c.train, 0.15, 7).snapshot;
  TempDir dir;
  model::BuiltinTrainer trainer;
  auto cfg = base_config(Strategy::kDrop);
  cfg.max_loops = 2;
  cfg.top_x = 1;  // leaves errors for loop 2
  RunEnv env{dir.path(), "", &trainer, nullptr, nullptr, {}};
  const auto run = run_curation(cfg, noisy, c.trusted, env);
  EXPECT_EQ(run.run_id, derive_run_id(cfg, noisy, c.trusted));
  EXPECT_EQ(run.run_id.rfind("run-", 0), 0u);
  ASSERT_EQ(run.loops.size(), 2u);
  EXPECT_EQ(run.stop_reason, "max_loops");
  const fs::path rdir = run_dir(dir.path(), run.run_id);
  for (const char* f : {"snapshot/samples.jsonl", "snapshot/meta.json", "model.json",
                        "influence.json", "provenance.jsonl", "metrics.json"}) {
    EXPECT_TRUE(fs::exists(loop_dir(rdir, 1) / f)) << f;
  }
  EXPECT_FALSE(fs::exists(loop_dir(rdir, 2) / "provenance.jsonl"));
  EXPECT_FALSE(fs::exists(loop_dir(rdir, 3)));
  const auto j = nlohmann::json::parse(read_file(rdir / "run.json"));
  EXPECT_EQ(j.at("run_id"), run.run_id);
  EXPECT_EQ(j.at("final_snapshot_id"), run.loops[1].snapshot_id);
  EXPECT_EQ(j.at("config").at("strategy"), "drop");
  EXPECT_EQ(CurationRun::from_json(j).loops.size(), 2u);
  EXPECT_EQ(interventions::read_provenance(rdir / "provenance.jsonl").size(),
            run.loops[0].records);
  // Each epoch checkpoint got a trusted-set accuracy.
  EXPECT_EQ(run.loops[0].epochs.size(), static_cast<std::size_t>(cfg.train.epochs));
  EXPECT_EQ(run.loops[0].epochs.back().tsd_accuracy, run.loops[0].tsd_accuracy);
}

TEST(RunCuration, ReannotateNeverIncreasesCorruption) {
  const auto c = small_corpus();
  const auto noise = inject_noise(c.train, 0.15, 7);
  auto oracle = oracle::LookupAnnotator::from_samples(c.train.samples());
  TempDir dir;
  model::BuiltinTrainer trainer;
  RunEnv env{dir.path(), "", &trainer, oracle.get(), nullptr, {}};
  const auto run = run_curation(base_config(Strategy::kReannotate), noise.snapshot, c.trusted, env);
  const fs::path rdir = run_dir(dir.path(), run.run_id);
  std::size_t prev = noise.corrupted_ids.size();
  for (const auto& l : run.loops) {
    const auto snap = corpus::read_snapshot(loop_dir(rdir, l.loop) / "snapshot");
    const std::size_t now = still_corrupted(snap, noise.corrupted_ids, c.train);
    EXPECT_LE(now, prev) << "loop " << l.loop;
    prev = now;
  }
  EXPECT_LT(prev, noise.corrupted_ids.size() / 2);
}

TEST(RunCuration, ResumeMatchesUninterruptedRun) {
  const auto c = small_corpus();
  const auto noisy = inject_noise(c.train, 0.15, 7).snapshot;
  auto cfg = base_config(Strategy::kReannotate);
  cfg.max_loops = 4;
  auto oracle = oracle::LookupAnnotator::from_samples(c.train.samples());
  model::BuiltinTrainer trainer;

  TempDir whole;
  const auto full = run_curation(cfg, noisy, c.trusted,
                                 {whole.path(), "", &trainer, oracle.get(), nullptr, {}});

  TempDir cut;
  RunEnv env{cut.path(), "", &trainer, oracle.get(), nullptr, {}};
  env.after_loop = [](const LoopSummary& s) { return s.loop < 2; };
  const auto first = run_curation(cfg, noisy, c.trusted, env);
  EXPECT_EQ(first.stop_reason, "interrupted");
  ASSERT_EQ(first.loops.size(), 2u);
  env.after_loop = nullptr;
  const auto resumed = run_curation(cfg, noisy, c.trusted, env);

  ASSERT_EQ(resumed.loops.size(), full.loops.size());
  for (std::size_t i = 0; i < full.loops.size(); ++i) {
    EXPECT_EQ(resumed.loops[i].snapshot_id, full.loops[i].snapshot_id);
    EXPECT_EQ(resumed.loops[i].next_snapshot_id, full.loops[i].next_snapshot_id);
  }
  EXPECT_EQ(resumed.stop_reason, full.stop_reason);
  EXPECT_EQ(resumed.selected_loop, full.selected_loop);
}

TEST(RunCuration, OracleOutageKeepsFinishedLoops) {
  const auto c = small_corpus();
  const auto noisy = inject_noise(c.train, 0.15, 7).snapshot;
  DownAnnotator down;
  model::BuiltinTrainer trainer;
  TempDir dir;
  const auto run = run_curation(base_config(Strategy::kReannotate), noisy, c.trusted,
                                {dir.path(), "", &trainer, &down, nullptr, {}});
  EXPECT_TRUE(run.aborted());
  EXPECT_TRUE(run.oracle_failure);
  EXPECT_NE(run.abort_message.find("unreachable"), std::string::npos);
  EXPECT_TRUE(run.loops.empty());
  const fs::path rdir = run_dir(dir.path(), run.run_id);
  EXPECT_TRUE(fs::exists(loop_dir(rdir, 1) / "snapshot" / "meta.json"));
  EXPECT_FALSE(fs::exists(loop_dir(rdir, 1) / "metrics.json"));
  EXPECT_FALSE(fs::exists(loop_dir(rdir, 2)));
  EXPECT_EQ(nlohmann::json::parse(read_file(rdir / "run.json")).at("stop_reason"), "aborted");
}

TEST(RunCuration, ReannotateAugmentAddsPositives) {
  const auto c = small_corpus();
  const auto noisy = inject_noise(c.train, 0.15, 7).snapshot;
  auto cfg = base_config(Strategy::kReannotateAugment);
  cfg.max_loops = 2;
  auto oracle = oracle::LookupAnnotator::from_samples(c.train.samples());
  oracle::TemplateParaphraser para(synthetic::positive_words(), 1);
  model::BuiltinTrainer trainer;
  TempDir dir;
  const auto run = run_curation(cfg, noisy, c.trusted,
                                {dir.path(), "", &trainer, oracle.get(), &para, {}});
  ASSERT_EQ(run.loops.size(), 2u);
  EXPECT_GT(run.loops[1].snapshot_size, run.loops[0].snapshot_size);
  const auto snap = corpus::read_snapshot(loop_dir(run_dir(dir.path(), run.run_id), 2) / "snapshot");
  std::size_t augmented = 0;
  for (const auto& s : snap.samples()) {
    if (s.origin != corpus::Origin::kAugmented) continue;
    ++augmented;
    EXPECT_EQ(s.label, 1);
    EXPECT_NE(snap.find(*s.parent_id), nullptr);
  }
  EXPECT_EQ(augmented, run.loops[1].snapshot_size - run.loops[0].snapshot_size);
}

TEST(RunCuration, StopsWhenAClassIsGone) {
  const auto c = small_corpus();
  const auto noisy = inject_noise(c.train, 0.15, 7).snapshot;
  auto cfg = base_config(Strategy::kDrop);
  cfg.top_x = 1000;  // every candidate of the predicted class goes
  model::BuiltinTrainer trainer;
  TempDir dir;
  const auto run = run_curation(cfg, noisy, c.trusted, {dir.path(), "", &trainer, nullptr, nullptr, {}});
  EXPECT_EQ(run.stop_reason, "untrainable");
  ASSERT_EQ(run.loops.size(), 1u);
  EXPECT_TRUE(run.loops[0].next_snapshot_id);
  EXPECT_EQ(run.selected_loop, 1);
}

TEST(RunCuration, RejectsForeignRunDirectory) {
  const auto c = small_corpus();
  model::BuiltinTrainer trainer;
  TempDir dir;
  RunEnv env{dir.path(), "fixed", &trainer, nullptr, nullptr, {}};
  run_curation(base_config(Strategy::kDrop), c.train, c.trusted, env);
  const auto other = inject_noise(c.train, 0.1, 1).snapshot;
  EXPECT_THROW(run_curation(base_config(Strategy::kDrop), other, c.trusted, env),
               PreconditionError);
}

TEST(DeriveRunId, DependsOnInputs) {
  const auto c = small_corpus();
  const auto a = derive_run_id(base_config(Strategy::kDrop), c.train, c.trusted);
  EXPECT_EQ(a, derive_run_id(base_config(Strategy::kDrop), c.train, c.trusted));
  EXPECT_NE(a, derive_run_id(base_config(Strategy::kReannotate), c.train, c.trusted));
  EXPECT_EQ(a.size(), 16u);
}

}  // namespace
}  // namespace hscurate::pipeline
