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
#ifndef HSCURATE_TEXT_H_
#define HSCURATE_TEXT_H_

#include <string>
#include <string_view>
#include <vector>

namespace hscurate::text {

bool is_ascii_space(char c);

std::string to_lower_ascii(std::string_view s);

std::string_view trim(std::string_view s);

// Splits on runs of ASCII whitespace.
std::vector<std::string_view> split_whitespace(std::string_view s);

// Word tokens: maximal runs of ASCII letters, digits and non-ASCII bytes,
// lowercased. Everything else (whitespace, punctuation) is a delimiter, so
// "FOOLish!" yields {"foolish"} and "f*ck" yields {"f", "ck"}.
std::vector<std::string> word_tokens(std::string_view s);

}  // namespace hscurate::text

#endif  // HSCURATE_TEXT_H_
