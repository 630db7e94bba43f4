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
#ifndef HSCURATE_EMBEDDED_DATA_H_
#define HSCURATE_EMBEDDED_DATA_H_

#include <string_view>

namespace hscurate::embedded {

// Contents of data/contractions.txt and data/prompts.json at build time.
std::string_view contractions_table();
std::string_view prompt_templates();

}  // namespace hscurate::embedded

#endif  // HSCURATE_EMBEDDED_DATA_H_
