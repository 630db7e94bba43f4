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
#include "hscurate/evalharness.h"
#include "hscurate/pipeline.h"
#include "hscurate/rng.h"
#include "hscurate/synthetic.h"
#include "test_util.h"

namespace hscurate::eval {
namespace {

using hscurate::testing::sample;
using hscurate::testing::TempDir;

corpus::DatasetSnapshot labeled(std::size_t pos, std::size_t neg) {
  std::vector<corpus::Sample> s;
  for (std::size_t i = 0; i < pos; ++i) s.push_back(sample("p" + std::to_string(i), "bad " + std::to_string(i), 1));
  for (std::size_t i = 0; i < neg; ++i) s.push_back(sample("n" + std::to_string(i), "good " + std::to_string(i), 0));
  return corpus::DatasetSnapshot::create(std::move(s));
}

class ConstantModel final : public model::ClassifierModel {
 public:
  explicit ConstantModel(int label) : label_(label) {}
  model::Backend backend() const override { return model::Backend::kBuiltin; }
  const model::TrainConfig& training_config() const override { return cfg_; }
  const std::string& fingerprint() const override { return fp_; }
  std::vector<model::Prediction> predict(std::span<const corpus::Sample> s) const override {
    std::vector<model::Prediction> out;
    for (const auto& x : s) out.push_back({x.id, label_, label_ ? 1.0 : 0.0});
    return out;
  }
  model::EmbeddingMatrix embed(std::span<const corpus::Sample>) const override { return {}; }

 private:
  int label_;
  model::TrainConfig cfg_;
  std::string fp_ = "const";
};

// Says 1 when the text starts with "bad".
class KeywordModel final : public model::ClassifierModel {
 public:
  model::Backend backend() const override { return model::Backend::kBuiltin; }
  const model::TrainConfig& training_config() const override { return cfg_; }
  const std::string& fingerprint() const override { return fp_; }
  std::vector<model::Prediction> predict(std::span<const corpus::Sample> s) const override {
    std::vector<model::Prediction> out;
    for (const auto& x : s) {
      const int l = x.text.rfind("bad", 0) == 0;
      out.push_back({x.id, l, l ? 1.0 : 0.0});
    }
    return out;
  }
  model::EmbeddingMatrix embed(std::span<const corpus::Sample>) const override { return {}; }

 private:
  model::TrainConfig cfg_;
  std::string fp_ = "kw";
};

TEST(Metrics, HandExample) {
  const auto m = metrics_from_counts(3, 1, 1);
  EXPECT_DOUBLE_EQ(m.precision, 0.75);
  EXPECT_DOUBLE_EQ(m.recall, 0.75);
  EXPECT_DOUBLE_EQ(m.f1, 0.75);
  EXPECT_EQ(metrics_from_counts(5, 0, 0), (Metrics{1, 1, 1}));
  EXPECT_EQ(metrics_from_counts(0, 0, 4), (Metrics{0, 0, 0}));
  EXPECT_EQ(metrics_from_counts(0, 0, 0), (Metrics{0, 0, 0}));
}

TEST(Metrics, ConstantPositiveOnBalancedSample) {
  const auto ds = labeled(50, 50);
  const auto s = balanced_sample(ds, 20, 1);
  const auto m = compute_metrics(ConstantModel(1).predict(s), s);
  EXPECT_DOUBLE_EQ(m.recall, 1.0);
  EXPECT_DOUBLE_EQ(m.precision, 0.5);
  EXPECT_NEAR(m.f1, 2.0 / 3.0, 1e-15);
}

TEST(Metrics, MismatchRejected) {
  const std::vector<corpus::Sample> g = {sample("a", "x", 1)};
  const std::vector<model::Prediction> p = {{"b", 1, 1.0}};
  EXPECT_THROW(compute_metrics(p, g), PreconditionError);
  EXPECT_THROW(compute_metrics({}, g), PreconditionError);
}

// Random label/prediction vectors against a direct count.
TEST(Metrics, RandomAgainstDirectCount) {
  CounterRng rng(99);
  for (int t = 0; t < 500; ++t) {
    const std::size_t n = 1 + rng.bounded(60);
    std::vector<corpus::Sample> g;
    std::vector<model::Prediction> p;
    double tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const int y = static_cast<int>(rng.bounded(2)), yh = static_cast<int>(rng.bounded(2));
      g.push_back(sample("s" + std::to_string(i), "x", y));
      p.push_back({"s" + std::to_string(i), yh, yh ? 0.9 : 0.1});
      tp += y && yh;
      fp += !y && yh;
      fn += y && !yh;
    }
    const auto m = compute_metrics(p, g);
    const double P = tp + fp > 0 ? tp / (tp + fp) : 0.0;
    const double R = tp + fn > 0 ? tp / (tp + fn) : 0.0;
    const double F = P + R > 0 ? 2 * P * R / (P + R) : 0.0;
    EXPECT_NEAR(m.precision, P, 1e-12);
    EXPECT_NEAR(m.recall, R, 1e-12);
    EXPECT_NEAR(m.f1, F, 1e-12);
    for (double v : {m.precision, m.recall, m.f1}) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
    if (m.precision > 0 && m.recall > 0) {
      EXPECT_LE(m.f1, std::max(m.precision, m.recall) + 1e-15);
      EXPECT_GE(m.f1, std::min(m.precision, m.recall) - 1e-15);
    }
  }
}

TEST(Summarize, SampleStandardDeviation) {
  const std::vector<double> v = {1, 2, 3, 4};
  const auto s = summarize(v);
  EXPECT_DOUBLE_EQ(s.mean, 2.5);
  EXPECT_NEAR(s.sd, std::sqrt(5.0 / 3.0), 1e-15);
  const std::vector<double> one = {0.3};
  EXPECT_EQ(summarize(one), (Stat{0.3, 0.0}));
}

TEST(BalancedSample, SizesAndDeterminism) {
  const auto ds = labeled(6000, 4000);
  const auto s = balanced_sample(ds, 500, 1);
  ASSERT_EQ(s.size(), 1000u);
  std::size_t pos = 0;
  std::set<std::string> ids;
  for (const auto& x : s) {
    pos += x.label;
    ids.insert(x.id);
  }
  EXPECT_EQ(pos, 500u);
  EXPECT_EQ(ids.size(), 1000u);
  const auto again = balanced_sample(ds, 500, 1);
  EXPECT_TRUE(std::equal(s.begin(), s.end(), again.begin(), again.end()));
  EXPECT_FALSE(std::equal(s.begin(), s.end(), balanced_sample(ds, 500, 2).begin()));
  // Not sorted by class.
  EXPECT_FALSE(std::is_sorted(s.begin(), s.end(),
                              [](const auto& a, const auto& b) { return a.label > b.label; }));
}

TEST(BalancedSample, ShortClassReported) {
  const auto ds = labeled(2, 10);
  try {
    balanced_sample(ds, 3, 1);
    FAIL();
  } catch (const PreconditionError& e) {
    EXPECT_NE(std::string(e.what()).find("2 < 3 positives"), std::string::npos) << e.what();
  }
  try {
    balanced_sample(labeled(10, 1), 3, 1);
    FAIL();
  } catch (const PreconditionError& e) {
    EXPECT_NE(std::string(e.what()).find("1 < 3 negatives"), std::string::npos) << e.what();
  }
}

TEST(EvalConfig, Validation) {
  EvalConfig c;
  EXPECT_NO_THROW(c.validate());
  c.n_per_class = 0;
  EXPECT_THROW(c.validate(), PreconditionError);
  c = {};
  c.seeds.clear();
  EXPECT_THROW(c.validate(), PreconditionError);
  c = {};
  c.seeds = {1, 1};
  EXPECT_THROW(c.validate(), PreconditionError);
}

TEST(CrossEvaluate, CellCountsAndFailures) {
  ConstantModel always(1);
  KeywordModel kw;
  const std::vector<ModelEntry> models = {{"w", "original", &always}, {"w", "curated", &kw}};
  const std::vector<TestEntry> tests = {
      {"a", labeled(30, 30)}, {"b", labeled(40, 25)}, {"tiny", labeled(3, 30)}};
  EvalConfig cfg;
  cfg.n_per_class = 10;
  const auto m = cross_evaluate(models, tests, cfg);
  ASSERT_EQ(m.cells.size(), 6u);
  std::size_t evaluations = 0;
  for (const auto& [k, c] : m.cells) {
    if (k.test == "tiny") {
      EXPECT_TRUE(c.failed);
      EXPECT_NE(c.error.find("3 < 10 positives"), std::string::npos);
      continue;
    }
    EXPECT_FALSE(c.failed);
    ASSERT_EQ(c.per_seed.size(), 5u);
    evaluations += c.per_seed.size();
    if (k.approach == "original") {
      EXPECT_DOUBLE_EQ(c.recall.mean, 1.0);
      EXPECT_DOUBLE_EQ(c.precision.mean, 0.5);
      EXPECT_NEAR(c.f1.mean, 2.0 / 3.0, 1e-12);
      EXPECT_EQ(c.f1.sd, 0.0);
    } else {
      EXPECT_DOUBLE_EQ(c.f1.mean, 1.0);
    }
  }
  EXPECT_EQ(evaluations, 20u);
}

TEST(CrossEvaluate, ModelsShareTheDraw) {
  // Per-seed draws depend only on the test set and seed, so two identical
  // models give identical cells.
  KeywordModel a, b;
  const std::vector<ModelEntry> models = {{"x", "a", &a}, {"x", "b", &b}};
  const std::vector<TestEntry> tests = {{"t", labeled(50, 50)}};
  EvalConfig cfg;
  cfg.n_per_class = 5;
  const auto m = cross_evaluate(models, tests, cfg);
  EXPECT_EQ(m.cells.at({"x", "t", "a"}), m.cells.at({"x", "t", "b"}));
}

EvalMatrix one_cell() {
  EvalMatrix m;
  Cell c;
  c.per_seed = {{1, {0.5, 0.75, 0.6}}, {2, {1.0, 0.25, 0.4}}};
  c.recall = {0.5, 0.353553};
  c.precision = {0.75, 0.0};
  c.f1 = {0.5, 0.141421};
  m.cells[{"waseem", "ihc", "original"}] = c;
  return m;
}

TEST(Report, GoldenCsv) {
  EXPECT_EQ(emit_report(one_cell(), ReportFormat::kCsv),
            "train,test,approach,seed,recall,precision,f1\n"
            "waseem,ihc,original,1,0.750000,0.500000,0.600000\n"
            "waseem,ihc,original,2,0.250000,1.000000,0.400000\n");
}

TEST(Report, MarkdownOneRow) {
  const auto md = emit_report(one_cell(), ReportFormat::kMarkdown);
  EXPECT_EQ(md,
            "| Train | Approach | ihc R | ihc F1 |\n"
            "|---|---|---|---|\n"
            "| waseem | original | 0.500 ± 0.354 | 0.500 ± 0.141 |\n");
  auto m = one_cell();
  m.cells[{"waseem", "sbic", "original"}] = {{}, {}, {}, {}, true, "boom"};
  const auto md2 = emit_report(m, ReportFormat::kMarkdown);
  EXPECT_NE(md2.find("| failed | failed |"), std::string::npos);
  EXPECT_THROW(emit_report(EvalMatrix{}, ReportFormat::kCsv), PreconditionError);
}

TEST(Report, JsonRoundTrip) {
  TempDir dir;
  auto m = one_cell();
  m.cells[{"a,b", "t", "x"}] = {{}, {}, {}, {}, true, "boom"};
  testing::write_file(dir / "m.json", emit_report(m, ReportFormat::kJson));
  EXPECT_EQ(read_matrix(dir / "m.json"), m);
  testing::write_file(dir / "bad.json", "{");
  EXPECT_THROW(read_matrix(dir / "bad.json"), FormatError);
  EXPECT_EQ(parse_format("markdown"), ReportFormat::kMarkdown);
  EXPECT_EQ(format_extension(ReportFormat::kMarkdown), "md");
}

TEST(CrossEvaluate, ReannotatedVariantNeedsOracle) {
  KeywordModel kw;
  const std::vector<ModelEntry> models = {{"x", "a", &kw}};
  const std::vector<TestEntry> tests = {{"t", labeled(20, 20)}};
  EvalConfig cfg;
  cfg.n_per_class = 5;
  cfg.variant = TestVariant::kReannotated;
  EXPECT_THROW(cross_evaluate(models, tests, cfg), PreconditionError);
}

TEST(CrossEvaluate, ReannotatedVariantRuns) {
  synthetic::Spec spec;
  spec.topics = 200;
  spec.trusted = 100;
  const auto c = synthetic::generate(spec);
  const auto noisy = pipeline::inject_noise(c.train, 0.15, 7).snapshot;
  const auto m = model::BuiltinTrainer().train(synthetic::train_config(1), noisy);
  const auto noisy_test = pipeline::inject_noise(c.heldout, 0.2, 3).snapshot;
  auto oracle = oracle::LookupAnnotator::from_samples(c.heldout.samples());
  const std::vector<ModelEntry> models = {{"syn", "noisy", m.get()}};
  const std::vector<TestEntry> tests = {{"held", noisy_test}};
  EvalConfig cfg;
  cfg.n_per_class = 50;
  cfg.variant = TestVariant::kReannotated;
  const auto r = cross_evaluate(models, tests, cfg, {&c.trusted, oracle.get(), 10});
  const auto& cell = r.cells.at({"syn", "held", "noisy"});
  EXPECT_FALSE(cell.failed) << cell.error;
  EXPECT_EQ(cell.per_seed.size(), 5u);
}

}  // namespace
}  // namespace hscurate::eval
