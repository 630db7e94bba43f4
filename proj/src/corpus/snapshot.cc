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
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include "hscurate/corpus.h"
#include "hscurate/errors.h"
#include "hscurate/hash.h"

namespace hscurate::corpus {

using nlohmann::json;
using nlohmann::ordered_json;

std::string_view origin_name(Origin o) {
  switch (o) {
    case Origin::kSource: return "source";
    case Origin::kReannotated: return "reannotated";
    case Origin::kAugmented: return "augmented";
  }
  return "source";
}

Origin parse_origin(std::string_view name) {
  if (name == "source") return Origin::kSource;
  if (name == "reannotated") return Origin::kReannotated;
  if (name == "augmented") return Origin::kAugmented;
  throw FormatError("unknown origin '" + std::string(name) + "'");
}

void check_sample(const Sample& s) {
  if (s.id.empty()) throw PreconditionError("sample with empty id");
  if (s.label != 0 && s.label != 1) {
    throw PreconditionError("sample '" + s.id + "' has non-binary label " +
                            std::to_string(s.label));
  }
  if (s.origin == Origin::kAugmented && (!s.parent_id || s.label != 1)) {
    throw PreconditionError("augmented sample '" + s.id +
                            "' must have a parent_id and label 1");
  }
  if (s.origin == Origin::kSource && s.parent_id) {
    throw PreconditionError("source sample '" + s.id + "' must not have a parent_id");
  }
}

ordered_json sample_to_json(const Sample& s) {
  ordered_json j;
  j["id"] = s.id;
  j["text"] = s.text;
  j["label"] = s.label;
  j["origin"] = origin_name(s.origin);
  j["parent_id"] = s.parent_id ? ordered_json(*s.parent_id) : ordered_json(nullptr);
  j["raw_label"] = s.raw_label ? ordered_json(*s.raw_label) : ordered_json(nullptr);
  return j;
}

Sample sample_from_json(const json& j) {
  if (!j.is_object()) throw FormatError("sample record is not a JSON object");
  Sample s;
  try {
    s.id = j.at("id").get<std::string>();
    s.text = j.at("text").get<std::string>();
    s.label = j.at("label").get<int>();
    if (auto it = j.find("origin"); it != j.end() && !it->is_null()) {
      s.origin = parse_origin(it->get<std::string>());
    }
    if (auto it = j.find("parent_id"); it != j.end() && !it->is_null()) {
      s.parent_id = it->get<std::string>();
    }
    if (auto it = j.find("raw_label"); it != j.end() && !it->is_null()) {
      s.raw_label = it->get<std::string>();
    }
  } catch (const json::exception& e) {
    throw FormatError(std::string("bad sample record: ") + e.what());
  }
  return s;
}

namespace {

std::string dump_line(const ordered_json& j) {
  return j.dump(-1, ' ', false, ordered_json::error_handler_t::replace);
}

std::string format_utc(std::int64_t unix_seconds) {
  const std::time_t t = static_cast<std::time_t>(unix_seconds);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::int64_t parse_utc(const std::string& s) {
  std::tm tm{};
  std::istringstream in(s);
  in >> std::get_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  if (in.fail()) throw FormatError("bad timestamp '" + s + "'");
  return static_cast<std::int64_t>(timegm(&tm));
}

}  // namespace

std::int64_t artifact_timestamp() {
  if (const char* env = std::getenv("SOURCE_DATE_EPOCH"); env && *env) {
    char* end = nullptr;
    const long long v = std::strtoll(env, &end, 10);
    if (end && *end == '\0') return v;
  }
  return std::chrono::duration_cast<std::chrono::seconds>(
             std::chrono::system_clock::now().time_since_epoch())
      .count();
}

DatasetSnapshot::DatasetSnapshot()
    : data_(std::make_shared<const Data>()) {}

std::string DatasetSnapshot::content_id(std::span<const Sample> samples,
                                        const std::optional<Lineage>& lineage,
                                        const LabelMapping& label_mapping) {
  std::string buf;
  for (const Sample& s : samples) {
    buf += dump_line(sample_to_json(s));
    buf += '\n';
  }
  buf += "mapping:";
  buf += json(label_mapping).dump();
  buf += "\nlineage:";
  if (lineage) {
    buf += lineage->parent_snapshot_id;
    buf += '\x1f';
    buf += lineage->intervention;
  }
  return "snap-" + sha256_hex(buf).substr(0, 16);
}

DatasetSnapshot DatasetSnapshot::create(std::vector<Sample> samples,
                                        std::optional<Lineage> lineage,
                                        LabelMapping label_mapping,
                                        std::string snapshot_id,
                                        std::optional<std::int64_t> created_unix) {
  auto data = std::make_shared<Data>();
  data->index.reserve(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    check_sample(samples[i]);
    if (!data->index.emplace(samples[i].id, i).second) {
      throw PreconditionError("duplicate sample id '" + samples[i].id + "'");
    }
  }
  if (snapshot_id.empty()) snapshot_id = content_id(samples, lineage, label_mapping);
  if (lineage && lineage->parent_snapshot_id == snapshot_id) {
    throw PreconditionError("snapshot '" + snapshot_id + "' lists itself as parent");
  }
  data->snapshot_id = std::move(snapshot_id);
  data->samples = std::move(samples);
  data->lineage = std::move(lineage);
  data->label_mapping = std::move(label_mapping);
  data->created_unix = created_unix.value_or(artifact_timestamp());
  return DatasetSnapshot(std::move(data));
}

DatasetSnapshot DatasetSnapshot::derive(std::vector<Sample> samples,
                                        std::string intervention) const {
  return create(std::move(samples), Lineage{snapshot_id(), std::move(intervention)},
                label_mapping());
}

const Sample* DatasetSnapshot::find(std::string_view id) const {
  auto it = data_->index.find(std::string(id));
  return it == data_->index.end() ? nullptr : &data_->samples[it->second];
}

std::optional<std::size_t> DatasetSnapshot::index_of(std::string_view id) const {
  auto it = data_->index.find(std::string(id));
  if (it == data_->index.end()) return std::nullopt;
  return it->second;
}

std::pair<std::size_t, std::size_t> DatasetSnapshot::class_counts() const {
  std::size_t pos = 0;
  for (const Sample& s : data_->samples) pos += s.label == 1;
  return {size() - pos, pos};
}

std::optional<std::string> find_lineage_cycle(
    std::span<const DatasetSnapshot> snapshots) {
  std::map<std::string, std::string> parent;
  for (const auto& ds : snapshots) {
    if (ds.lineage()) parent[ds.snapshot_id()] = ds.lineage()->parent_snapshot_id;
  }
  for (const auto& ds : snapshots) {
    std::set<std::string> seen;
    std::string cur = ds.snapshot_id();
    while (true) {
      if (!seen.insert(cur).second) return "lineage cycle through '" + cur + "'";
      auto it = parent.find(cur);
      if (it == parent.end()) break;
      cur = it->second;
    }
  }
  return std::nullopt;
}

std::vector<Sample> read_samples_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open '" + path.string() + "'");
  std::vector<Sample> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw FormatError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
    out.push_back(sample_from_json(j));
  }
  return out;
}

void write_samples_jsonl(std::span<const Sample> samples,
                         const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot write '" + path.string() + "'");
  for (const Sample& s : samples) out << dump_line(sample_to_json(s)) << '\n';
  if (!out) throw FormatError("write failed for '" + path.string() + "'");
}

void write_snapshot(const DatasetSnapshot& ds, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_samples_jsonl(ds.samples(), dir / "samples.jsonl");
  ordered_json meta;
  meta["snapshot_id"] = ds.snapshot_id();
  if (ds.lineage()) {
    meta["lineage"] = {{"parent_snapshot_id", ds.lineage()->parent_snapshot_id},
                       {"intervention", ds.lineage()->intervention}};
  } else {
    meta["lineage"] = nullptr;
  }
  meta["label_mapping"] = ds.label_mapping();
  meta["created"] = format_utc(ds.created_unix());
  std::ofstream out(dir / "meta.json", std::ios::binary | std::ios::trunc);
  out << meta.dump(2) << '\n';
  if (!out) throw FormatError("cannot write meta.json in '" + dir.string() + "'");
}

DatasetSnapshot read_snapshot(const std::filesystem::path& path) {
  if (!std::filesystem::is_directory(path)) {
    return DatasetSnapshot::create(read_samples_jsonl(path), std::nullopt, {}, {}, 0);
  }
  std::ifstream in(path / "meta.json");
  if (!in) throw FormatError("missing meta.json in '" + path.string() + "'");
  json meta;
  try {
    meta = json::parse(in);
    std::optional<Lineage> lineage;
    if (const auto& l = meta.at("lineage"); !l.is_null()) {
      lineage = Lineage{l.at("parent_snapshot_id").get<std::string>(),
                        l.at("intervention").get<std::string>()};
    }
    LabelMapping mapping = meta.value("label_mapping", LabelMapping{});
    std::int64_t created = meta.contains("created")
                               ? parse_utc(meta.at("created").get<std::string>())
                               : 0;
    return DatasetSnapshot::create(read_samples_jsonl(path / "samples.jsonl"),
                                   std::move(lineage), std::move(mapping),
                                   meta.at("snapshot_id").get<std::string>(), created);
  } catch (const json::exception& e) {
    throw FormatError("bad meta.json in '" + path.string() + "': " + e.what());
  }
}

}  // namespace hscurate::corpus
