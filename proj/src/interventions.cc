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
#include "hscurate/interventions.h"

#include <algorithm>
#include <atomic>
#include <exception>
#include <fstream>
#include <thread>
#include <unordered_map>
#include <unordered_set>

#include "hscurate/errors.h"
#include "hscurate/log.h"
#include "hscurate/text.h"

namespace hscurate::interventions {

using corpus::DatasetSnapshot;
using corpus::Origin;
using corpus::Sample;
using nlohmann::json;
using nlohmann::ordered_json;

std::string_view kind_name(Kind k) {
  switch (k) {
    case Kind::kDrop: return "drop";
    case Kind::kReannotate: return "reannotate";
    case Kind::kAugment: return "augment";
  }
  return "?";
}

Kind parse_kind(std::string_view name) {
  if (name == "drop") return Kind::kDrop;
  if (name == "reannotate") return Kind::kReannotate;
  if (name == "augment") return Kind::kAugment;
  throw FormatError("unknown intervention '" + std::string(name) + "'");
}

ordered_json ProvenanceRecord::to_json() const {
  ordered_json j;
  j["loop_index"] = loop_index;
  j["intervention"] = kind_name(intervention);
  j["sample_id"] = sample_id;
  ordered_json d;
  d["kind"] = detail;
  if (old_label) d["old_label"] = *old_label;
  if (new_label) d["new_label"] = *new_label;
  if (verdict) d["verdict"] = *verdict;
  if (new_id) d["new_id"] = *new_id;
  if (new_id) d["source_id"] = sample_id;
  if (text) d["text"] = *text;
  if (!template_id.empty()) d["template_id"] = template_id;
  j["detail"] = d;
  return j;
}

ProvenanceRecord ProvenanceRecord::from_json(const json& j) {
  try {
    ProvenanceRecord r;
    r.loop_index = j.at("loop_index").get<int>();
    r.intervention = parse_kind(j.at("intervention").get<std::string>());
    r.sample_id = j.at("sample_id").get<std::string>();
    const json& d = j.at("detail");
    r.detail = d.at("kind").get<std::string>();
    if (d.contains("old_label")) r.old_label = d["old_label"].get<int>();
    if (d.contains("new_label")) r.new_label = d["new_label"].get<int>();
    if (d.contains("verdict")) r.verdict = d["verdict"].get<int>();
    if (d.contains("new_id")) r.new_id = d["new_id"].get<std::string>();
    if (d.contains("text")) r.text = d["text"].get<std::string>();
    if (d.contains("template_id")) r.template_id = d["template_id"].get<std::string>();
    return r;
  } catch (const json::exception& e) {
    throw FormatError(std::string("bad provenance record: ") + e.what());
  }
}

void append_provenance(std::span<const ProvenanceRecord> records,
                       const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::app | std::ios::binary);
  for (const auto& r : records) out << r.to_json().dump() << '\n';
  if (!out) throw FormatError("cannot write provenance '" + path.string() + "'");
}

std::vector<ProvenanceRecord> read_provenance(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open provenance '" + path.string() + "'");
  std::vector<ProvenanceRecord> out;
  std::string line;
  while (std::getline(in, line)) {
    if (text::trim(line).empty()) continue;
    try {
      out.push_back(ProvenanceRecord::from_json(json::parse(line)));
    } catch (const json::exception& e) {
      throw FormatError("bad provenance line in '" + path.string() + "': " + e.what());
    }
  }
  return out;
}

std::string descriptor(std::string_view strategy, int loop_index) {
  return std::string(strategy) + "@loop" + std::to_string(loop_index);
}

namespace {

void check_union(const DatasetSnapshot& ds, const influence::InfluenceReport& rep) {
  for (const auto& id : rep.union_ids) {
    if (!ds.find(id)) {
      throw PreconditionError("influential id '" + id + "' is not in snapshot " +
                              ds.snapshot_id());
    }
  }
}

// Working copy of a snapshot's samples that the record kinds are applied to.
class Editor {
 public:
  explicit Editor(std::span<const Sample> samples) : samples_(samples.begin(), samples.end()) {
    for (std::size_t i = 0; i < samples_.size(); ++i) index_[samples_[i].id] = i;
  }

  Sample& at(const std::string& id) {
    auto it = index_.find(id);
    if (it == index_.end() || removed_.count(id)) {
      throw FormatError("record refers to unknown sample '" + id + "'");
    }
    return samples_[it->second];
  }

  bool contains(const std::string& id) const {
    return index_.count(id) && !removed_.count(id);
  }

  void apply(const ProvenanceRecord& r) {
    if (r.detail == "dropped") {
      at(r.sample_id);
      removed_.insert(r.sample_id);
    } else if (r.detail == "relabeled") {
      if (!r.old_label || !r.new_label || *r.old_label == *r.new_label) {
        throw FormatError("relabel record for '" + r.sample_id + "' lacks a label change");
      }
      Sample& s = at(r.sample_id);
      if (s.label != *r.old_label) {
        throw FormatError("relabel record for '" + r.sample_id + "' does not match its label");
      }
      s.label = *r.new_label;
      s.origin = Origin::kReannotated;
    } else if (r.detail == "augmented" || r.detail == "replaced") {
      if (!r.new_id || !r.text) {
        throw FormatError("augment record for '" + r.sample_id + "' lacks id or text");
      }
      if (contains(*r.new_id)) throw FormatError("augmented id '" + *r.new_id + "' exists");
      at(r.sample_id);
      Sample a{*r.new_id, *r.text, 1, Origin::kAugmented, r.sample_id, std::nullopt};
      if (r.detail == "augmented") {
        index_[a.id] = samples_.size();
        samples_.push_back(std::move(a));
      } else {
        // The paraphrase takes over the source's slot.
        const std::size_t pos = index_[r.sample_id];
        index_.erase(r.sample_id);
        index_[a.id] = pos;
        samples_[pos] = std::move(a);
      }
    } else if (r.detail != "skipped-empty") {
      throw FormatError("unknown provenance detail '" + r.detail + "'");
    }
  }

  std::string next_aug_id(const std::string& source) const {
    for (int k = 1;; ++k) {
      std::string id = source + "::aug" + std::to_string(k);
      if (!index_.count(id)) return id;
    }
  }

  std::vector<Sample> finish() && {
    std::vector<Sample> out;
    out.reserve(samples_.size() - std::min(removed_.size(), samples_.size()));
    for (auto& s : samples_) {
      if (!removed_.count(s.id)) out.push_back(std::move(s));
    }
    return out;
  }

 private:
  std::vector<Sample> samples_;
  std::unordered_map<std::string, std::size_t> index_;
  std::unordered_set<std::string> removed_;
};

// Verdicts for the given texts, index-aligned; nullopt where no question was
// asked.
std::vector<std::optional<int>> ask_oracle(const std::vector<const Sample*>& targets,
                                           oracle::Annotator& annotator, unsigned parallelism) {
  std::vector<std::optional<int>> verdicts(targets.size());
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr first_error;
  std::mutex err_mu;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= targets.size() || failed.load()) return;
      try {
        verdicts[i] = annotator.annotate(targets[i]->text);
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mu);
        if (!first_error) first_error = std::current_exception();
        failed = true;
      }
    }
  };
  const unsigned n = std::max(1u, std::min<unsigned>(parallelism, targets.size()));
  if (n == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < n; ++t) pool.emplace_back(worker);
  }
  if (first_error) {
    try {
      std::rethrow_exception(first_error);
    } catch (const TransportError& e) {
      throw InterventionAborted(std::string("reannotation aborted: ") + e.what(), true);
    } catch (const OracleError& e) {
      throw InterventionAborted(std::string("reannotation aborted: ") + e.what(), true);
    }
  }
  return verdicts;
}

std::vector<ProvenanceRecord> relabel_records(const DatasetSnapshot& ds,
                                              const influence::InfluenceReport& rep,
                                              oracle::Annotator& annotator, int loop_index,
                                              const ReannotateOptions& opts) {
  std::vector<const Sample*> targets;
  for (const auto& id : rep.union_ids) {
    const Sample* s = ds.find(id);
    if (s->origin == Origin::kAugmented || s->text.empty()) continue;
    targets.push_back(s);
  }
  const auto verdicts = ask_oracle(targets, annotator, opts.parallelism);
  std::vector<ProvenanceRecord> records;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    const Sample& s = *targets[i];
    if (!verdicts[i] || *verdicts[i] == s.label) continue;
    ProvenanceRecord r;
    r.loop_index = loop_index;
    r.intervention = Kind::kReannotate;
    r.sample_id = s.id;
    r.detail = "relabeled";
    r.old_label = s.label;
    r.new_label = *verdicts[i];
    r.verdict = *verdicts[i];
    r.template_id = annotator.template_id();
    records.push_back(std::move(r));
  }
  return records;
}

std::vector<ProvenanceRecord> augment_records(Editor& ed, const influence::InfluenceReport& rep,
                                              oracle::Paraphraser& para, int loop_index,
                                              AugmentMode mode) {
  std::vector<ProvenanceRecord> records;
  for (const auto& id : rep.union_ids) {
    const Sample& s = ed.at(id);
    if (s.label != 1 || s.text.empty()) continue;
    ProvenanceRecord r;
    r.loop_index = loop_index;
    r.intervention = Kind::kAugment;
    r.sample_id = id;
    std::string p;
    try {
      p = para.paraphrase(s.text);
    } catch (const TransportError& e) {
      throw InterventionAborted(std::string("augmentation aborted: ") + e.what(), true);
    } catch (const OracleError& e) {
      throw InterventionAborted(std::string("augmentation aborted: ") + e.what(), true);
    }
    if (text::trim(p).empty()) {
      r.detail = "skipped-empty";
      log::info("augment_skipped", {{"sample_id", id}});
    } else {
      r.detail = mode == AugmentMode::kDuplicate ? "augmented" : "replaced";
      r.new_id = ed.next_aug_id(id);
      r.text = std::move(p);
      r.template_id = para.template_id();
    }
    ed.apply(r);
    records.push_back(std::move(r));
  }
  return records;
}

}  // namespace

Result drop(const DatasetSnapshot& ds, const influence::InfluenceReport& rep, int loop_index) {
  check_union(ds, rep);
  std::vector<ProvenanceRecord> records;
  Editor ed(ds.samples());
  for (const auto& id : rep.union_ids) {
    ProvenanceRecord r;
    r.loop_index = loop_index;
    r.intervention = Kind::kDrop;
    r.sample_id = id;
    r.detail = "dropped";
    ed.apply(r);
    records.push_back(std::move(r));
  }
  auto child = ds.derive(std::move(ed).finish(), descriptor("drop", loop_index));
  return {std::move(child), std::move(records)};
}

Result reannotate(const DatasetSnapshot& ds, const influence::InfluenceReport& rep,
                  oracle::Annotator& annotator, int loop_index, const ReannotateOptions& opts) {
  check_union(ds, rep);
  auto records = relabel_records(ds, rep, annotator, loop_index, opts);
  Editor ed(ds.samples());
  for (const auto& r : records) ed.apply(r);
  auto child = ds.derive(std::move(ed).finish(), descriptor("reannotate", loop_index));
  return {std::move(child), std::move(records)};
}

Result augment(const DatasetSnapshot& ds, const influence::InfluenceReport& rep,
               oracle::Paraphraser& paraphraser, int loop_index, AugmentMode mode) {
  check_union(ds, rep);
  Editor ed(ds.samples());
  auto records = augment_records(ed, rep, paraphraser, loop_index, mode);
  auto child = ds.derive(std::move(ed).finish(), descriptor("augment", loop_index));
  return {std::move(child), std::move(records)};
}

Result reannotate_then_augment(const DatasetSnapshot& ds, const influence::InfluenceReport& rep,
                               oracle::Annotator& annotator, oracle::Paraphraser& paraphraser,
                               int loop_index, const ReannotateOptions& opts,
                               AugmentMode mode) {
  check_union(ds, rep);
  auto records = relabel_records(ds, rep, annotator, loop_index, opts);
  Editor ed(ds.samples());
  for (const auto& r : records) ed.apply(r);
  auto more = augment_records(ed, rep, paraphraser, loop_index, mode);
  records.insert(records.end(), std::make_move_iterator(more.begin()),
                 std::make_move_iterator(more.end()));
  auto child =
      ds.derive(std::move(ed).finish(), descriptor("reannotate+augment", loop_index));
  return {std::move(child), std::move(records)};
}

DatasetSnapshot replay(const DatasetSnapshot& parent, std::string desc,
                       std::span<const ProvenanceRecord> records) {
  Editor ed(parent.samples());
  for (const auto& r : records) ed.apply(r);
  try {
    return parent.derive(std::move(ed).finish(), std::move(desc));
  } catch (const PreconditionError& e) {
    throw FormatError(std::string("replay produced an invalid snapshot: ") + e.what());
  }
}

}  // namespace hscurate::interventions
