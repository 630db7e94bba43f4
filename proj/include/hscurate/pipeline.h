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
#ifndef HSCURATE_PIPELINE_H_
#define HSCURATE_PIPELINE_H_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hscurate/corpus.h"
#include "hscurate/interventions.h"
#include "hscurate/model.h"
#include "hscurate/oracle.h"
#include "json.hpp"

namespace hscurate::pipeline {

enum class Strategy { kDrop, kReannotate, kReannotateAugment };
enum class StopRule { kFixedLoops, kPlateau };
enum class SelectCriterion { kMaxTsdAccuracy, kLast };

std::string_view strategy_name(Strategy s);
Strategy parse_strategy(std::string_view name);
std::string_view stop_rule_name(StopRule r);
StopRule parse_stop_rule(std::string_view name);
std::string_view criterion_name(SelectCriterion c);
SelectCriterion parse_criterion(std::string_view name);

struct CurationConfig {
  Strategy strategy = Strategy::kReannotate;
  std::size_t top_x = 10;
  int max_loops = 10;
  StopRule stop_rule = StopRule::kPlateau;
  SelectCriterion select = SelectCriterion::kMaxTsdAccuracy;
  model::Backend backend = model::Backend::kBuiltin;
  std::string adapter;  // external backend: "stdio:<cmd>" or "tcp:host:port"
  model::TrainConfig train;
  oracle::OracleConfig annotator;
  oracle::OracleConfig paraphraser;
  interventions::AugmentMode augment_mode = interventions::AugmentMode::kDuplicate;
  unsigned oracle_parallelism = 4;
  unsigned threads = 1;  // similarity search workers

  // Throws PreconditionError: top_x < 1, max_loops < 1, bad train config.
  void validate() const;
  nlohmann::ordered_json to_json() const;
};

struct EpochMetrics {
  int epoch = 0;
  double train_loss = 0.0;
  double tsd_accuracy = 0.0;
};

struct LoopSummary {
  int loop = 0;  // 1-based
  std::string snapshot_id;
  std::size_t snapshot_size = 0;
  std::size_t errors = 0;
  std::size_t union_size = 0;
  double tsd_accuracy = 0.0;
  std::vector<EpochMetrics> epochs;
  // Set when the loop ended with an intervention.
  std::size_t records = 0;
  std::optional<std::string> next_snapshot_id;

  nlohmann::ordered_json to_json() const;
  static LoopSummary from_json(const nlohmann::json& j);
};

struct CurationRun {
  std::string run_id;
  std::vector<LoopSummary> loops;
  int selected_loop = 0;
  // "no_errors", "empty_union", "max_loops", "plateau", "untrainable"
  // (an intervention left a single class), "aborted", "interrupted"
  std::string stop_reason;
  std::string abort_message;
  bool oracle_failure = false;

  bool aborted() const { return stop_reason == "aborted"; }
  nlohmann::ordered_json to_json() const;
  static CurationRun from_json(const nlohmann::json& j);
};

// Everything run_curation needs besides the configuration. Null oracles are
// built from the configuration on first use.
struct RunEnv {
  std::filesystem::path out_dir;  // the run lives in out_dir/runs/<run_id>
  std::string run_id;             // empty: derived from config and inputs
  model::Trainer* trainer = nullptr;
  oracle::Annotator* annotator = nullptr;
  oracle::Paraphraser* paraphraser = nullptr;
  // Called after each loop is persisted; returning false stops the run as
  // if the process had been killed (used to test resumption).
  std::function<bool(const LoopSummary&)> after_loop;
};

// The closed loop: train on the current snapshot, predict the trusted set,
// find influential samples for the errors, intervene, repeat. Loop k trains
// on the k-th snapshot; a loop without errors, without influential samples,
// at max_loops, or where the plateau rule fires makes no intervention. Loops
// already persisted under the run directory are reused, so an interrupted
// run resumes where it stopped. Intervention aborts end the run with
// stop_reason "aborted" and the finished loops preserved; a snapshot left
// with a single class ends it with "untrainable".
CurationRun run_curation(const CurationConfig& cfg, const corpus::DatasetSnapshot& train,
                         const corpus::TrustedSet& ts, const RunEnv& env);

std::string derive_run_id(const CurationConfig& cfg, const corpus::DatasetSnapshot& train,
                          const corpus::TrustedSet& ts);

std::filesystem::path run_dir(const std::filesystem::path& out_dir, const std::string& run_id);
std::filesystem::path loop_dir(const std::filesystem::path& run_dir, int loop);

// Plateau rule: the last two loops did not improve on the best accuracy seen
// before them.
bool plateau_reached(const std::vector<double>& tsd_accuracies);

// Snapshot id of the best loop (ties go to the earliest loop). Throws
// PreconditionError on a run without loops.
std::string select_best_loop(const CurationRun& run, SelectCriterion criterion);
int select_best_loop_index(const CurationRun& run, SelectCriterion criterion);

struct NoiseResult {
  corpus::DatasetSnapshot snapshot;
  std::vector<std::string> corrupted_ids;  // sorted
};

// Flips ceil(rate * |ds|) labels chosen uniformly from a seeded stream.
// Throws PreconditionError unless 0 < rate < 1.
NoiseResult inject_noise(const corpus::DatasetSnapshot& ds, double rate, std::uint64_t seed);

// Ids among the given ones whose label in ds differs from truth (ids missing
// from ds do not count).
std::size_t still_corrupted(const corpus::DatasetSnapshot& ds,
                            const std::vector<std::string>& corrupted_ids,
                            const corpus::DatasetSnapshot& truth);

}  // namespace hscurate::pipeline

#endif  // HSCURATE_PIPELINE_H_
