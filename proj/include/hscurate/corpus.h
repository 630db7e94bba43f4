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
#ifndef HSCURATE_CORPUS_H_
#define HSCURATE_CORPUS_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "json.hpp"

namespace hscurate::corpus {

enum class Origin { kSource, kReannotated, kAugmented };

std::string_view origin_name(Origin o);
Origin parse_origin(std::string_view name);

// One labeled text record. label is 0 (negative) or 1 (positive).
struct Sample {
  std::string id;
  std::string text;
  int label = 0;
  Origin origin = Origin::kSource;
  std::optional<std::string> parent_id;
  std::optional<std::string> raw_label;

  bool operator==(const Sample&) const = default;
};

// Throws PreconditionError when a single sample breaks its own invariants
// (label range, origin/parent consistency).
void check_sample(const Sample& s);

// JSONL record with keys in the documented order.
nlohmann::ordered_json sample_to_json(const Sample& s);
Sample sample_from_json(const nlohmann::json& j);

struct Lineage {
  std::string parent_snapshot_id;
  std::string intervention;

  bool operator==(const Lineage&) const = default;
};

using LabelMapping = std::map<std::string, int>;

// Immutable versioned corpus. Copies share the same underlying storage.
class DatasetSnapshot {
 public:
  DatasetSnapshot();

  // Validates sample invariants and id uniqueness. When snapshot_id is empty
  // it is derived from the content and lineage (see content_id()).
  static DatasetSnapshot create(std::vector<Sample> samples,
                                std::optional<Lineage> lineage = std::nullopt,
                                LabelMapping label_mapping = {},
                                std::string snapshot_id = {},
                                std::optional<std::int64_t> created_unix = std::nullopt);

  // New snapshot whose lineage points at this one; the label mapping carries
  // over.
  DatasetSnapshot derive(std::vector<Sample> samples,
                         std::string intervention) const;

  // "snap-" followed by 16 hex chars of SHA-256 over the serialized samples,
  // label mapping and lineage. Timestamps do not participate.
  static std::string content_id(std::span<const Sample> samples,
                                const std::optional<Lineage>& lineage,
                                const LabelMapping& label_mapping);

  const std::string& snapshot_id() const { return data_->snapshot_id; }
  std::span<const Sample> samples() const { return data_->samples; }
  const std::optional<Lineage>& lineage() const { return data_->lineage; }
  const LabelMapping& label_mapping() const { return data_->label_mapping; }
  std::int64_t created_unix() const { return data_->created_unix; }

  std::size_t size() const { return data_->samples.size(); }
  bool empty() const { return data_->samples.empty(); }
  const Sample& operator[](std::size_t i) const { return data_->samples[i]; }

  // nullptr if absent.
  const Sample* find(std::string_view id) const;
  std::optional<std::size_t> index_of(std::string_view id) const;

  // {negatives, positives}
  std::pair<std::size_t, std::size_t> class_counts() const;

 private:
  struct Data {
    std::string snapshot_id;
    std::vector<Sample> samples;
    std::optional<Lineage> lineage;
    LabelMapping label_mapping;
    std::int64_t created_unix = 0;
    std::unordered_map<std::string, std::size_t> index;
  };
  explicit DatasetSnapshot(std::shared_ptr<const Data> data)
      : data_(std::move(data)) {}

  std::shared_ptr<const Data> data_;
};

// Unix seconds stamped into new snapshots: $SOURCE_DATE_EPOCH when set,
// otherwise the wall clock.
std::int64_t artifact_timestamp();

// Returns a description of the first cycle found in the parent links among
// the given snapshots, or nullopt if the lineage graph is acyclic.
std::optional<std::string> find_lineage_cycle(
    std::span<const DatasetSnapshot> snapshots);

// Snapshot directory: samples.jsonl + meta.json.
void write_snapshot(const DatasetSnapshot& ds, const std::filesystem::path& dir);

// Accepts a snapshot directory or a bare samples JSONL file. A bare file gets
// a content-derived id and no lineage.
DatasetSnapshot read_snapshot(const std::filesystem::path& path);

std::vector<Sample> read_samples_jsonl(const std::filesystem::path& path);
void write_samples_jsonl(std::span<const Sample> samples,
                         const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Preprocessing

// Case-insensitive contraction -> expansion table.
class ContractionTable {
 public:
  // Lines of "contraction<TAB>expansion"; '#' lines and blank lines ignored.
  static ContractionTable parse(std::string_view table_text);
  // The table shipped in data/contractions.txt.
  static const ContractionTable& builtin();

  // Expansion for a lowercased contraction; U+2019 is accepted in place of
  // the ASCII apostrophe.
  const std::string* lookup(std::string_view lowered) const;
  std::size_t size() const { return table_.size(); }

 private:
  std::unordered_map<std::string, std::string> table_;
};

// URL pattern removed by preprocess_text. Scheme-prefixed URLs, "www." hosts
// and bare links on common shorteners (t.co/..., bit.ly/...):
inline constexpr std::string_view kUrlPattern =
    R"((?:https?://|www\.)\S+|\b(?:t\.co|bit\.ly|goo\.gl|tinyurl\.com|ow\.ly|buff\.ly|dlvr\.it|ift\.tt)/\S*)";

// Removes URLs, @-mentions and hashtag tokens, expands contractions, collapses
// whitespace and trims. Idempotent.
std::string preprocess_text(std::string_view raw,
                            const ContractionTable& table = ContractionTable::builtin());

// ---------------------------------------------------------------------------
// Import and label unification

struct RawRecord {
  std::string id;
  std::string text;
  std::string raw_label;
};

// Maps every raw label to {0,1}; throws PreconditionError naming the first
// unmapped label and its row id. Row order and count are preserved.
DatasetSnapshot unify_labels(std::span<const RawRecord> records,
                             const LabelMapping& mapping);

struct CsvColumns {
  std::string id = "id";
  std::string text = "text";
  std::string label = "label";
};

// RFC 4180 CSV with a header row. An empty id column value becomes the
// 1-based row number.
std::vector<RawRecord> read_raw_csv(const std::filesystem::path& path,
                                    const CsvColumns& columns);
std::vector<RawRecord> read_raw_jsonl(const std::filesystem::path& path,
                                      const CsvColumns& keys);

// Parses a CSV document into rows of fields.
std::vector<std::vector<std::string>> parse_csv(std::string_view doc);

LabelMapping read_label_mapping(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Trusted samples

struct TrustedSet {
  std::vector<Sample> samples;
  std::size_t intended_size = 500;

  // {negatives, positives}
  std::pair<std::size_t, std::size_t> balance() const;
};

enum class ViolationKind { kSizeMismatch, kClassImbalance, kDuplicateId, kDuplicateText };

std::string_view violation_name(ViolationKind k);

struct Violation {
  ViolationKind kind;
  std::string detail;
};

// Empty result means the set is valid.
std::vector<Violation> validate_trusted_set(const TrustedSet& ts);

TrustedSet read_trusted_set(const std::filesystem::path& path,
                            std::size_t intended_size);

}  // namespace hscurate::corpus

#endif  // HSCURATE_CORPUS_H_
