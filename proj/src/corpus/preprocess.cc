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
#include <regex>

#include "hscurate/corpus.h"
#include "hscurate/embedded_data.h"
#include "hscurate/errors.h"
#include "hscurate/text.h"

namespace hscurate::corpus {
namespace {

bool is_alnum_ascii(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9');
}

bool may_contain_url(std::string_view s) {
  return s.find('/') != std::string_view::npos ||
         text::to_lower_ascii(s).find("www.") != std::string::npos;
}

const std::regex& url_regex() {
  static const std::regex re(std::string(kUrlPattern),
                             std::regex::ECMAScript | std::regex::icase |
                                 std::regex::optimize);
  return re;
}

std::string normalize_apostrophes(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i + 2 < s.size() && static_cast<unsigned char>(s[i]) == 0xE2 &&
        static_cast<unsigned char>(s[i + 1]) == 0x80 &&
        static_cast<unsigned char>(s[i + 2]) == 0x99) {
      out.push_back('\'');
      i += 2;
    } else {
      out.push_back(s[i]);
    }
  }
  return out;
}

// Appends the token to out, expanding a contraction found in its core. The
// core is the token minus leading/trailing non-alphanumeric ASCII bytes.
void append_expanded(std::string_view tok, const ContractionTable& table,
                     std::string& out) {
  std::size_t b = 0;
  std::size_t e = tok.size();
  while (b < e && !is_alnum_ascii(tok[b])) ++b;
  while (e > b && !is_alnum_ascii(tok[e - 1])) --e;
  if (!out.empty()) out.push_back(' ');
  const std::string_view core = tok.substr(b, e - b);
  const std::string* expansion =
      core.empty() ? nullptr : table.lookup(text::to_lower_ascii(core));
  if (!expansion) {
    out.append(tok);
    return;
  }
  out.append(tok.substr(0, b));
  std::string exp = *expansion;
  if (!exp.empty() && core[0] >= 'A' && core[0] <= 'Z' && exp[0] >= 'a' && exp[0] <= 'z') {
    exp[0] = static_cast<char>(exp[0] - 'a' + 'A');
  }
  out.append(exp);
  out.append(tok.substr(e));
}

}  // namespace

ContractionTable ContractionTable::parse(std::string_view table_text) {
  ContractionTable t;
  std::size_t pos = 0;
  while (pos <= table_text.size()) {
    std::size_t nl = table_text.find('\n', pos);
    if (nl == std::string_view::npos) nl = table_text.size();
    std::string_view line = text::trim(table_text.substr(pos, nl - pos));
    pos = nl + 1;
    if (line.empty() || line.front() == '#') continue;
    const std::size_t tab = line.find('\t');
    if (tab == std::string_view::npos) {
      throw FormatError("contraction table line without a tab: '" + std::string(line) + "'");
    }
    std::string key = text::to_lower_ascii(text::trim(line.substr(0, tab)));
    std::string value(text::trim(line.substr(tab + 1)));
    t.table_[normalize_apostrophes(key)] = std::move(value);
  }
  return t;
}

const ContractionTable& ContractionTable::builtin() {
  static const ContractionTable table = parse(embedded::contractions_table());
  return table;
}

const std::string* ContractionTable::lookup(std::string_view lowered) const {
  auto it = table_.find(normalize_apostrophes(lowered));
  return it == table_.end() ? nullptr : &it->second;
}

std::string preprocess_text(std::string_view raw, const ContractionTable& table) {
  std::string stripped;
  if (may_contain_url(raw)) {
    stripped = std::regex_replace(std::string(raw), url_regex(), " ");
    raw = stripped;
  }
  std::string out;
  out.reserve(raw.size());
  for (std::string_view tok : text::split_whitespace(raw)) {
    if (tok.front() == '@' || tok.front() == '#') continue;
    append_expanded(tok, table, out);
  }
  return out;
}

}  // namespace hscurate::corpus
