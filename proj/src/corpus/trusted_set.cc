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
#include <map>
#include <unordered_map>

#include "hscurate/corpus.h"

namespace hscurate::corpus {

std::pair<std::size_t, std::size_t> TrustedSet::balance() const {
  std::size_t pos = 0;
  for (const Sample& s : samples) pos += s.label == 1;
  return {samples.size() - pos, pos};
}

std::string_view violation_name(ViolationKind k) {
  switch (k) {
    case ViolationKind::kSizeMismatch: return "size_mismatch";
    case ViolationKind::kClassImbalance: return "class_imbalance";
    case ViolationKind::kDuplicateId: return "duplicate_id";
    case ViolationKind::kDuplicateText: return "duplicate_text";
  }
  return "?";
}

std::vector<Violation> validate_trusted_set(const TrustedSet& ts) {
  std::vector<Violation> out;
  if (ts.samples.size() != ts.intended_size) {
    out.push_back({ViolationKind::kSizeMismatch,
                   "expected " + std::to_string(ts.intended_size) + " samples, found " +
                       std::to_string(ts.samples.size())});
  }
  const auto [neg, pos] = ts.balance();
  const bool balanced = ts.intended_size % 2 == 0 ? pos == neg
                                                  : (pos > neg ? pos - neg : neg - pos) == 1;
  if (!balanced) {
    out.push_back({ViolationKind::kClassImbalance,
                   std::to_string(pos) + " positive vs " + std::to_string(neg) +
                       " negative"});
  }
  std::map<std::string, std::size_t> ids;
  std::unordered_map<std::string, std::size_t> texts;
  for (const Sample& s : ts.samples) {
    ++ids[s.id];
    ++texts[s.text];
  }
  for (const auto& [id, n] : ids) {
    if (n > 1) {
      out.push_back({ViolationKind::kDuplicateId,
                     "id '" + id + "' appears " + std::to_string(n) + " times"});
    }
  }
  std::map<std::string, std::size_t> dup_texts(texts.begin(), texts.end());
  for (const auto& [t, n] : dup_texts) {
    if (n > 1) {
      out.push_back({ViolationKind::kDuplicateText,
                     "text '" + t + "' appears " + std::to_string(n) + " times"});
    }
  }
  return out;
}

TrustedSet read_trusted_set(const std::filesystem::path& path, std::size_t intended_size) {
  TrustedSet ts;
  ts.samples = std::filesystem::is_directory(path)
                   ? read_samples_jsonl(path / "samples.jsonl")
                   : read_samples_jsonl(path);
  for (const Sample& s : ts.samples) check_sample(s);
  ts.intended_size = intended_size == 0 ? ts.samples.size() : intended_size;
  return ts;
}

}  // namespace hscurate::corpus
