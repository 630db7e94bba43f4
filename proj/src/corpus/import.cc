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
#include <algorithm>
#include <fstream>
#include <sstream>

#include "hscurate/corpus.h"
#include "hscurate/errors.h"

namespace hscurate::corpus {

using nlohmann::json;

DatasetSnapshot unify_labels(std::span<const RawRecord> records,
                             const LabelMapping& mapping) {
  for (const auto& [raw, bin] : mapping) {
    if (bin != 0 && bin != 1) {
      throw PreconditionError("label mapping sends '" + raw + "' to non-binary " +
                              std::to_string(bin));
    }
  }
  std::vector<Sample> samples;
  samples.reserve(records.size());
  for (const RawRecord& r : records) {
    auto it = mapping.find(r.raw_label);
    if (it == mapping.end()) {
      throw PreconditionError("unmapped raw label '" + r.raw_label + "' in row '" +
                              r.id + "'");
    }
    samples.push_back(Sample{r.id, r.text, it->second, Origin::kSource, std::nullopt,
                             r.raw_label});
  }
  return DatasetSnapshot::create(std::move(samples), std::nullopt, mapping);
}

std::vector<std::vector<std::string>> parse_csv(std::string_view doc) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false;
  bool field_started = false;
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const char c = doc[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < doc.size() && doc[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field.push_back(c);
      }
      continue;
    }
    switch (c) {
      case '"':
        quoted = true;
        field_started = true;
        break;
      case ',':
        row.push_back(std::move(field));
        field.clear();
        field_started = true;
        break;
      case '\r':
        break;
      case '\n':
        if (field_started || !field.empty() || !row.empty()) {
          row.push_back(std::move(field));
          rows.push_back(std::move(row));
        }
        row.clear();
        field.clear();
        field_started = false;
        break;
      default:
        field.push_back(c);
        field_started = true;
    }
  }
  if (quoted) throw FormatError("unterminated quoted CSV field");
  if (field_started || !field.empty() || !row.empty()) {
    row.push_back(std::move(field));
    rows.push_back(std::move(row));
  }
  return rows;
}

namespace {

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::size_t column_index(const std::vector<std::string>& header, const std::string& name,
                         const std::filesystem::path& path) {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  throw FormatError("column '" + name + "' not found in '" + path.string() + "'");
}

std::string scalar_to_string(const json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_null()) return "";
  return v.dump();
}

}  // namespace

std::vector<RawRecord> read_raw_csv(const std::filesystem::path& path,
                                    const CsvColumns& columns) {
  auto rows = parse_csv(slurp(path));
  if (rows.empty()) throw FormatError("empty CSV '" + path.string() + "'");
  const auto& header = rows.front();
  const std::size_t text_col = column_index(header, columns.text, path);
  const std::size_t label_col = column_index(header, columns.label, path);
  std::optional<std::size_t> id_col;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == columns.id) id_col = i;
  }
  std::vector<RawRecord> out;
  out.reserve(rows.size() - 1);
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    const std::size_t need = std::max(text_col, label_col);
    if (row.size() <= need) {
      throw FormatError(path.string() + ": row " + std::to_string(r) + " has " +
                        std::to_string(row.size()) + " fields");
    }
    RawRecord rec;
    rec.id = (id_col && *id_col < row.size() && !row[*id_col].empty())
                 ? row[*id_col]
                 : std::to_string(r);
    rec.text = row[text_col];
    rec.raw_label = row[label_col];
    out.push_back(std::move(rec));
  }
  return out;
}

std::vector<RawRecord> read_raw_jsonl(const std::filesystem::path& path,
                                      const CsvColumns& keys) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open '" + path.string() + "'");
  std::vector<RawRecord> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const json j = json::parse(line);
      RawRecord rec;
      rec.id = j.contains(keys.id) ? scalar_to_string(j.at(keys.id)) : std::to_string(lineno);
      rec.text = j.at(keys.text).get<std::string>();
      rec.raw_label = scalar_to_string(j.at(keys.label));
      out.push_back(std::move(rec));
    } catch (const json::exception& e) {
      throw FormatError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

LabelMapping read_label_mapping(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open '" + path.string() + "'");
  try {
    return json::parse(in).get<LabelMapping>();
  } catch (const json::exception& e) {
    throw FormatError("bad label mapping '" + path.string() + "': " + e.what());
  }
}

}  // namespace hscurate::corpus
