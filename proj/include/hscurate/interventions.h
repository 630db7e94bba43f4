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
#ifndef HSCURATE_INTERVENTIONS_H_
#define HSCURATE_INTERVENTIONS_H_

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hscurate/corpus.h"
#include "hscurate/influence.h"
#include "hscurate/oracle.h"
#include "json.hpp"

namespace hscurate::interventions {

enum class Kind { kDrop, kReannotate, kAugment };

std::string_view kind_name(Kind k);
Kind parse_kind(std::string_view name);

// detail values: "dropped", "relabeled", "augmented", "replaced",
// "skipped-empty".
struct ProvenanceRecord {
  int loop_index = 0;
  Kind intervention = Kind::kDrop;
  std::string sample_id;
  std::string detail;
  // relabeled
  std::optional<int> old_label;
  std::optional<int> new_label;
  std::optional<int> verdict;
  // relabeled, augmented, replaced
  std::string template_id;
  // augmented, replaced
  std::optional<std::string> new_id;
  std::optional<std::string> text;

  bool operator==(const ProvenanceRecord&) const = default;

  nlohmann::ordered_json to_json() const;
  static ProvenanceRecord from_json(const nlohmann::json& j);
};

void append_provenance(std::span<const ProvenanceRecord> records,
                       const std::filesystem::path& path);
std::vector<ProvenanceRecord> read_provenance(const std::filesystem::path& path);

struct Result {
  corpus::DatasetSnapshot snapshot;
  std::vector<ProvenanceRecord> records;
};

// Removes every union member. Throws PreconditionError on an id that is not
// in the snapshot.
Result drop(const corpus::DatasetSnapshot& ds, const influence::InfluenceReport& rep,
            int loop_index = 0);

struct ReannotateOptions {
  unsigned parallelism = 4;
};

// Asks the annotator about every union member and flips the labels it
// disagrees with (either direction); flipped samples get origin reannotated.
// Augmented samples and empty texts are left alone. An oracle or transport
// failure throws InterventionAborted and no snapshot is produced.
Result reannotate(const corpus::DatasetSnapshot& ds, const influence::InfluenceReport& rep,
                  oracle::Annotator& annotator, int loop_index = 0,
                  const ReannotateOptions& opts = {});

enum class AugmentMode {
  kDuplicate,  // keep the source, append the paraphrase
  kReplace,    // put the paraphrase in the source's place
};

// Paraphrases the positive union members. New samples get id
// "<source>::aug<k>" (smallest unused k >= 1) and are appended in union order.
Result augment(const corpus::DatasetSnapshot& ds, const influence::InfluenceReport& rep,
               oracle::Paraphraser& paraphraser, int loop_index = 0,
               AugmentMode mode = AugmentMode::kDuplicate);

// Reannotation followed by augmentation of the union members that are still
// positive, as one snapshot.
Result reannotate_then_augment(const corpus::DatasetSnapshot& ds,
                               const influence::InfluenceReport& rep,
                               oracle::Annotator& annotator, oracle::Paraphraser& paraphraser,
                               int loop_index = 0, const ReannotateOptions& opts = {},
                               AugmentMode mode = AugmentMode::kDuplicate);

// Applies records to the parent's samples in order and derives the child
// with the given intervention descriptor. Throws FormatError when a record
// does not fit the parent.
corpus::DatasetSnapshot replay(const corpus::DatasetSnapshot& parent,
                               std::string descriptor,
                               std::span<const ProvenanceRecord> records);

// "drop@loop3", "reannotate+augment@loop2", ...
std::string descriptor(std::string_view strategy, int loop_index);

}  // namespace hscurate::interventions

#endif  // HSCURATE_INTERVENTIONS_H_
