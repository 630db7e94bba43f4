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
#ifndef HSCURATE_INFLUENCE_H_
#define HSCURATE_INFLUENCE_H_

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "hscurate/corpus.h"
#include "hscurate/model.h"
#include "json.hpp"

namespace hscurate::influence {

// A trusted sample the model got wrong: predicted_label != true_label.
struct ErrorEntry {
  std::string trusted_id;
  int true_label = 0;
  int predicted_label = 0;

  bool operator==(const ErrorEntry&) const = default;
};

struct ErrorSet {
  std::vector<ErrorEntry> entries;  // in trusted-set order

  bool empty() const { return entries.empty(); }
  std::size_t size() const { return entries.size(); }
};

// The misclassified trusted samples, in trusted-set order.
ErrorSet error_set(const model::ClassifierModel& m, const corpus::TrustedSet& ts);

// Same, from predictions already computed (aligned with samples by position;
// a mismatched id is a PreconditionError).
ErrorSet error_set_from_predictions(std::span<const corpus::Sample> samples,
                                    std::span<const model::Prediction> predictions);

// <a, b> / (|a| |b|), or 0 when either norm is 0. Throws PreconditionError on
// a dimension mismatch.
double cosine_similarity(std::span<const double> a, std::span<const double> b);

struct ScoredSample {
  std::string sample_id;
  double score = 0.0;

  bool operator==(const ScoredSample&) const = default;
};

struct InfluenceReport {
  std::size_t x = 0;
  // Trusted id -> training samples ranked by (score desc, id asc).
  std::map<std::string, std::vector<ScoredSample>> per_error;
  // Distinct training ids over all lists, sorted.
  std::vector<std::string> union_ids;

  bool operator==(const InfluenceReport&) const = default;

  nlohmann::ordered_json to_json() const;
  static InfluenceReport from_json(const nlohmann::json& j);
};

struct InfluenceOptions {
  // Worker threads over error blocks; 0 means hardware concurrency.
  unsigned threads = 1;
};

// For every error, the x training samples whose label equals the model's
// (wrong) prediction and whose embedding is most cosine-similar to the
// trusted sample's, ties broken by the smaller sample id; plus the union.
// Each error keeps a size-x heap, so the full |D| x |E| score matrix is never
// materialized. Training rows with zero norm are never selected; a trusted
// row with zero norm scores 0 against everything. Throws PreconditionError
// naming any id without an embedding row or on a dimension mismatch between
// the two matrices.
InfluenceReport top_influence(const ErrorSet& errors, const corpus::DatasetSnapshot& ds,
                              const model::EmbeddingMatrix& train_emb,
                              const model::EmbeddingMatrix& trusted_emb, std::size_t x,
                              const InfluenceOptions& opts = {});

}  // namespace hscurate::influence

#endif  // HSCURATE_INFLUENCE_H_
