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
#ifndef HSCURATE_LEXICON_H_
#define HSCURATE_LEXICON_H_

#include <filesystem>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "hscurate/corpus.h"

namespace hscurate::lexicon {

// Offensive-term lexicon. Terms are stored lowercased and trimmed; a term
// that spans several word tokens ("go back") matches as a contiguous token
// sequence.
class Lexicon {
 public:
  // Throws PreconditionError if no usable term remains.
  static Lexicon from_terms(const std::vector<std::string>& terms, std::string name);
  // One term per line, UTF-8, '#' comment lines ignored.
  static Lexicon load(const std::filesystem::path& path);

  const std::string& name() const { return name_; }
  const std::set<std::string>& terms() const { return terms_; }
  std::size_t size() const { return terms_.size(); }

  // Whether any term occurs in the (already tokenized) text.
  bool matches(const std::vector<std::string>& tokens) const;

 private:
  std::string name_;
  std::set<std::string> terms_;
  // First token -> token sequences beginning with it.
  std::unordered_map<std::string, std::vector<std::vector<std::string>>> by_head_;
};

// Token-boundary match after preprocessing and lowercasing; a term inside a
// longer word ("fool" in "foolish") does not count.
bool contains_offensive(std::string_view text, const Lexicon& lex);

struct RateReport {
  std::string dataset;
  std::size_t positives = 0;
  std::size_t lexicon_free = 0;
  double rate = 0.0;
};

// Share of positive samples with no lexicon hit. Throws PreconditionError
// ("no positive samples") when the snapshot has none.
RateReport lexicon_free_positive_rate(const corpus::DatasetSnapshot& ds,
                                      const Lexicon& lex);

}  // namespace hscurate::lexicon

#endif  // HSCURATE_LEXICON_H_
