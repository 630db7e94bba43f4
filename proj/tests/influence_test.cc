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

#include "hscurate/errors.h"
#include "hscurate/influence.h"
#include "hscurate/model.h"
#include "influence_oracle.h"
#include "test_util.h"

namespace hscurate::influence {
namespace {

using hscurate::testing::sample;

model::EmbeddingMatrix matrix(std::vector<std::string> ids, std::size_t dim,
                              std::vector<double> values) {
  model::EmbeddingMatrix m{std::move(ids), dim, std::move(values), {}};
  m.zero_rows.assign(m.ids.size(), false);
  return m;
}

// Predicts a fixed label for everything.
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

TEST(ErrorSet, ConstantPositiveOnBalancedTen) {
  corpus::TrustedSet ts;
  for (int i = 0; i < 10; ++i) ts.samples.push_back(sample("g" + std::to_string(i), "t", i % 2));
  const auto es = error_set(ConstantModel(1), ts);
  ASSERT_EQ(es.size(), 5u);
  for (const auto& e : es.entries) {
    EXPECT_EQ(e.true_label, 0);
    EXPECT_EQ(e.predicted_label, 1);
  }
  EXPECT_EQ(es.entries[0].trusted_id, "g0");
  EXPECT_EQ(es.entries[4].trusted_id, "g8");
}

TEST(ErrorSet, PerfectModelGivesEmpty) {
  corpus::TrustedSet ts;
  for (int i = 0; i < 4; ++i) ts.samples.push_back(sample("g" + std::to_string(i), "t", 1));
  EXPECT_TRUE(error_set(ConstantModel(1), ts).empty());
}

TEST(ErrorSet, MisalignedPredictionsRejected) {
  const std::vector<corpus::Sample> s = {sample("a", "t", 0)};
  const std::vector<model::Prediction> p = {{"b", 1, 1.0}};
  EXPECT_THROW(error_set_from_predictions(s, p), PreconditionError);
  EXPECT_THROW(error_set_from_predictions(s, {}), PreconditionError);
}

TEST(CosineSimilarity, Examples) {
  const std::vector<double> e1 = {1, 0}, e2 = {0, 1}, d = {1, 1}, z = {0, 0};
  EXPECT_EQ(cosine_similarity(e1, e1), 1.0);
  EXPECT_EQ(cosine_similarity(e1, e2), 0.0);
  EXPECT_NEAR(cosine_similarity(e1, d), 0.70710678, 1e-8);
  EXPECT_EQ(cosine_similarity(e1, z), 0.0);
  EXPECT_EQ(cosine_similarity(z, z), 0.0);
  const std::vector<double> three = {1, 0, 0};
  EXPECT_THROW(cosine_similarity(e1, three), PreconditionError);
}

TEST(CosineSimilarity, RandomSelfAndOpposite) {
  CounterRng rng(5);
  for (int t = 0; t < 200; ++t) {
    std::vector<double> v(1 + rng.bounded(64)), w;
    for (auto& x : v) x = rng.normal() * std::pow(10.0, rng.uniform() * 6 - 3);
    for (double x : v) w.push_back(-2.5 * x);
    EXPECT_NEAR(cosine_similarity(v, v), 1.0, 1e-9);
    EXPECT_NEAR(cosine_similarity(v, w), -1.0, 1e-9);
  }
}

TEST(TopInfluence, ZeroXIsEmpty) {
  const auto ds = corpus::DatasetSnapshot::create({sample("a", "t", 1)});
  const ErrorSet es{{{"g", 0, 1}}};
  const auto rep = top_influence(es, ds, matrix({"a"}, 1, {1}), matrix({"g"}, 1, {1}), 0);
  EXPECT_TRUE(rep.per_error.empty());
  EXPECT_TRUE(rep.union_ids.empty());
}

TEST(TopInfluence, PicksClosestMatchingLabel) {
  // Two candidates carry the predicted label; the other two are closer but
  // have the wrong label.
  const auto ds = corpus::DatasetSnapshot::create(
      {sample("a", "t", 1), sample("b", "t", 1), sample("c", "t", 0), sample("d", "t", 0)});
  const auto train = matrix({"a", "b", "c", "d"}, 2, {0.9, 0.1, 1, 0, 1, 0, 1, 0});
  const ErrorSet es{{{"g", 0, 1}}};
  const auto rep = top_influence(es, ds, train, matrix({"g"}, 2, {1, 0}), 1);
  ASSERT_EQ(rep.per_error.at("g").size(), 1u);
  EXPECT_EQ(rep.per_error.at("g")[0].sample_id, "b");
  EXPECT_EQ(rep.per_error.at("g")[0].score, 1.0);
  EXPECT_EQ(rep.union_ids, std::vector<std::string>{"b"});
}

TEST(TopInfluence, SharedNeighbourDeduplicated) {
  const auto ds = corpus::DatasetSnapshot::create({sample("a", "t", 1), sample("b", "t", 1)});
  const auto train = matrix({"a", "b"}, 2, {1, 0, 0, 1});
  const ErrorSet es{{{"g1", 0, 1}, {"g2", 0, 1}}};
  const auto rep = top_influence(es, ds, train, matrix({"g1", "g2"}, 2, {1, 0.1, 1, -0.1}), 1);
  EXPECT_EQ(rep.per_error.size(), 2u);
  EXPECT_EQ(rep.union_ids, std::vector<std::string>{"a"});
}

TEST(TopInfluence, TiesGoToSmallerId) {
  const auto ds = corpus::DatasetSnapshot::create(
      {sample("z", "t", 1), sample("m", "t", 1), sample("b", "t", 1)});
  const auto train = matrix({"z", "m", "b"}, 1, {2, 3, 1});
  const ErrorSet es{{{"g", 0, 1}}};
  const auto rep = top_influence(es, ds, train, matrix({"g"}, 1, {1}), 2);
  const auto& l = rep.per_error.at("g");
  ASSERT_EQ(l.size(), 2u);
  EXPECT_EQ(l[0].sample_id, "b");
  EXPECT_EQ(l[1].sample_id, "m");
}

TEST(TopInfluence, ZeroRowsNeverSelected) {
  const auto ds = corpus::DatasetSnapshot::create(
      {sample("a", "t", 1), sample("b", "t", 1), sample("c", "t", 1)});
  const auto train = matrix({"a", "b", "c"}, 2, {0, 0, -1, 0, 0, 1});
  const ErrorSet es{{{"g", 0, 1}, {"zero", 0, 1}}};
  const auto rep = top_influence(es, ds, train, matrix({"g", "zero"}, 2, {1, 0, 0, 0}), 3);
  const auto& l = rep.per_error.at("g");
  ASSERT_EQ(l.size(), 2u);
  EXPECT_EQ(l[0].sample_id, "c");
  EXPECT_EQ(l[1].sample_id, "b");
  EXPECT_EQ(l[1].score, -1.0);
  // A zero query scores 0 everywhere, so ties resolve by id.
  const auto& z = rep.per_error.at("zero");
  ASSERT_EQ(z.size(), 2u);
  EXPECT_EQ(z[0].sample_id, "b");
  EXPECT_EQ(z[0].score, 0.0);
}

TEST(TopInfluence, MissingRowsNamed) {
  const auto ds = corpus::DatasetSnapshot::create({sample("a", "t", 1), sample("b", "t", 1)});
  const ErrorSet es{{{"g", 0, 1}}};
  try {
    top_influence(es, ds, matrix({"a"}, 1, {1}), matrix({"g"}, 1, {1}), 1);
    FAIL();
  } catch (const PreconditionError& e) {
    EXPECT_NE(std::string(e.what()).find("'b'"), std::string::npos);
  }
  try {
    top_influence(es, ds, matrix({"a", "b"}, 1, {1, 1}), matrix({"h"}, 1, {1}), 1);
    FAIL();
  } catch (const PreconditionError& e) {
    EXPECT_NE(std::string(e.what()).find("'g'"), std::string::npos);
  }
  EXPECT_THROW(top_influence(es, ds, matrix({"a", "b"}, 1, {1, 1}), matrix({"g"}, 2, {1, 0}), 1),
               PreconditionError);
}

TEST(TopInfluence, MatchesBruteForce) {
  for (std::uint64_t seed = 1; seed <= 300; ++seed) {
    const auto in = testing::random_instance(seed);
    const auto got = top_influence(in.errors, in.ds, in.train, in.trusted, in.x);
    const auto want = testing::brute_force_top(in);
    ASSERT_TRUE(testing::same_report(got, want)) << "seed " << seed;
  }
}

TEST(TopInfluence, Invariants) {
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    const auto in = testing::random_instance(seed);
    const auto rep = top_influence(in.errors, in.ds, in.train, in.trusted, in.x);
    std::size_t listed = 0;
    for (const auto& e : in.errors.entries) {
      if (in.x == 0) break;
      const auto& l = rep.per_error.at(e.trusted_id);
      EXPECT_LE(l.size(), in.x);
      listed += l.size();
      for (std::size_t i = 0; i < l.size(); ++i) {
        EXPECT_EQ(in.ds.find(l[i].sample_id)->label, e.predicted_label);
        if (i > 0) EXPECT_LE(l[i].score, l[i - 1].score);
      }
    }
    EXPECT_LE(rep.union_ids.size(), listed);
    EXPECT_LE(rep.union_ids.size(), in.x * in.errors.size());
    EXPECT_TRUE(std::is_sorted(rep.union_ids.begin(), rep.union_ids.end()));
  }
}

TEST(TopInfluence, ScalingRowsKeepsRanking) {
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    auto in = testing::random_instance(seed);
    const auto before = top_influence(in.errors, in.ds, in.train, in.trusted, in.x);
    CounterRng rng(seed + 1000);
    for (std::size_t r = 0; r < in.train.rows(); ++r) {
      const double f = std::pow(2.0, static_cast<double>(rng.bounded(21)) - 10);
      for (std::size_t k = 0; k < in.train.dim; ++k) in.train.values[r * in.train.dim + k] *= f;
    }
    for (auto& v : in.trusted.values) v *= 0.125;
    const auto after = top_influence(in.errors, in.ds, in.train, in.trusted, in.x);
    for (const auto& [gt, l] : before.per_error) {
      const auto& m = after.per_error.at(gt);
      ASSERT_EQ(l.size(), m.size());
      for (std::size_t i = 0; i < l.size(); ++i) EXPECT_EQ(l[i].sample_id, m[i].sample_id);
    }
  }
}

TEST(TopInfluence, ThreadCountDoesNotChangeResult) {
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    const auto in = testing::random_instance(seed);
    const auto one = top_influence(in.errors, in.ds, in.train, in.trusted, in.x, {1});
    const auto four = top_influence(in.errors, in.ds, in.train, in.trusted, in.x, {4});
    EXPECT_EQ(one, four);
    EXPECT_EQ(one.to_json().dump(), four.to_json().dump());
  }
}

TEST(InfluenceReport, JsonRoundTrip) {
  const auto in = testing::random_instance(11);
  const auto rep = top_influence(in.errors, in.ds, in.train, in.trusted, 3);
  const auto j = rep.to_json();
  EXPECT_EQ(j.begin().key(), "x");
  const auto back = InfluenceReport::from_json(nlohmann::json::parse(j.dump()));
  EXPECT_EQ(back, rep);
  EXPECT_THROW(InfluenceReport::from_json(nlohmann::json::parse(R"({"x":1})")), FormatError);
}

}  // namespace
}  // namespace hscurate::influence
