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
#ifndef HSCURATE_EVALHARNESS_H_
#define HSCURATE_EVALHARNESS_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hscurate/corpus.h"
#include "hscurate/model.h"
#include "hscurate/oracle.h"
#include "json.hpp"

namespace hscurate::eval {

enum class TestVariant { kOriginal, kReannotated };

std::string_view variant_name(TestVariant v);
TestVariant parse_variant(std::string_view name);

struct EvalConfig {
  std::size_t n_per_class = 500;
  std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
  TestVariant variant = TestVariant::kOriginal;

  // Throws PreconditionError: n_per_class < 1, no seeds, repeated seeds.
  void validate() const;
};

// n positives and n negatives drawn without replacement, then shuffled. The
// stream is keyed by the snapshot id and the seed, so every model sees the
// same draw for a given test set and seed. Throws PreconditionError
// ("2 < 3 positives") when a class is short.
std::vector<corpus::Sample> balanced_sample(const corpus::DatasetSnapshot& ds, std::size_t n,
                                            std::uint64_t seed);

struct Metrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;

  bool operator==(const Metrics&) const = default;
};

// Positive-class precision, recall and F1; a zero denominator gives 0.
Metrics metrics_from_counts(std::size_t tp, std::size_t fp, std::size_t fn);
// Predictions aligned with golds by position. Throws PreconditionError on a
// length or id mismatch.
Metrics compute_metrics(std::span<const model::Prediction> preds,
                        std::span<const corpus::Sample> golds);

struct Stat {
  double mean = 0.0;
  double sd = 0.0;  // sample standard deviation; 0 for a single value

  bool operator==(const Stat&) const = default;
};

Stat summarize(std::span<const double> values);

struct SeedResult {
  std::uint64_t seed = 0;
  Metrics metrics;

  bool operator==(const SeedResult&) const = default;
};

struct CellKey {
  std::string train;
  std::string test;
  std::string approach;

  auto operator<=>(const CellKey&) const = default;
};

struct Cell {
  std::vector<SeedResult> per_seed;
  Stat recall;
  Stat precision;
  Stat f1;
  bool failed = false;
  std::string error;

  bool operator==(const Cell&) const = default;
};

struct EvalMatrix {
  std::map<CellKey, Cell> cells;

  bool operator==(const EvalMatrix&) const = default;
  nlohmann::ordered_json to_json() const;
  static EvalMatrix from_json(const nlohmann::json& j);
};

struct ModelEntry {
  std::string train;
  std::string approach;
  const model::ClassifierModel* model = nullptr;
};

struct TestEntry {
  std::string id;
  corpus::DatasetSnapshot data;
};

// Needed for TestVariant::kReannotated: each model's errors on the trusted
// set pick the influential test samples, which the annotator then relabels.
struct TestReannotation {
  const corpus::TrustedSet* trusted = nullptr;
  oracle::Annotator* annotator = nullptr;
  std::size_t top_x = 10;
};

// One cell per (model, test set); each cell holds one result per seed.
// Sampling or prediction errors mark the cell failed and evaluation moves on.
// The reannotated variant without a trusted set and annotator is a
// PreconditionError.
EvalMatrix cross_evaluate(std::span<const ModelEntry> models, std::span<const TestEntry> tests,
                          const EvalConfig& cfg, const TestReannotation& reannotation = {});

enum class ReportFormat { kJson, kCsv, kMarkdown };

ReportFormat parse_format(std::string_view name);
std::string_view format_extension(ReportFormat f);

// Deterministic text rendering. Throws PreconditionError on an empty matrix.
std::string emit_report(const EvalMatrix& m, ReportFormat format);

EvalMatrix read_matrix(const std::filesystem::path& path);

}  // namespace hscurate::eval

#endif  // HSCURATE_EVALHARNESS_H_
