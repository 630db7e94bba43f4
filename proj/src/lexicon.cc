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
#include "hscurate/lexicon.h"

#include <fstream>

#include "hscurate/errors.h"
#include "hscurate/text.h"

namespace hscurate::lexicon {

Lexicon Lexicon::from_terms(const std::vector<std::string>& terms, std::string name) {
  Lexicon lex;
  lex.name_ = std::move(name);
  for (const std::string& raw : terms) {
    std::string term = text::to_lower_ascii(text::trim(raw));
    std::vector<std::string> toks = text::word_tokens(term);
    if (toks.empty()) continue;
    if (!lex.terms_.insert(term).second) continue;
    const std::string head = toks.front();
    lex.by_head_[head].push_back(std::move(toks));
  }
  if (lex.terms_.empty()) {
    throw PreconditionError("lexicon '" + lex.name_ + "' has no terms");
  }
  return lex;
}

Lexicon Lexicon::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open lexicon '" + path.string() + "'");
  std::vector<std::string> terms;
  std::string line;
  while (std::getline(in, line)) {
    std::string_view t = text::trim(line);
    if (t.empty() || t.front() == '#') continue;
    terms.emplace_back(t);
  }
  return from_terms(terms, path.stem().string());
}

bool Lexicon::matches(const std::vector<std::string>& tokens) const {
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    auto it = by_head_.find(tokens[i]);
    if (it == by_head_.end()) continue;
    for (const auto& seq : it->second) {
      if (i + seq.size() > tokens.size()) continue;
      bool ok = true;
      for (std::size_t k = 1; k < seq.size() && ok; ++k) ok = tokens[i + k] == seq[k];
      if (ok) return true;
    }
  }
  return false;
}

bool contains_offensive(std::string_view text, const Lexicon& lex) {
  return lex.matches(text::word_tokens(corpus::preprocess_text(text)));
}

RateReport lexicon_free_positive_rate(const corpus::DatasetSnapshot& ds,
                                      const Lexicon& lex) {
  RateReport r;
  r.dataset = ds.snapshot_id();
  for (const corpus::Sample& s : ds.samples()) {
    if (s.label != 1) continue;
    ++r.positives;
    if (!contains_offensive(s.text, lex)) ++r.lexicon_free;
  }
  if (r.positives == 0) throw PreconditionError("no positive samples");
  r.rate = static_cast<double>(r.lexicon_free) / static_cast<double>(r.positives);
  return r;
}

}  // namespace hscurate::lexicon
