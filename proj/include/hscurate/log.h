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
#ifndef HSCURATE_LOG_H_
#define HSCURATE_LOG_H_

#include <string_view>

#include "json.hpp"

namespace hscurate::log {

enum class Level { kDebug = 0, kInfo = 1, kWarn = 2, kError = 3, kOff = 4 };

// Throws PreconditionError on an unknown name.
Level parse_level(std::string_view name);
void set_level(Level level);
Level level();

// Writes one JSON object per line to stderr:
// {"level":..., "event":..., <fields>}. Thread-safe.
void emit(Level level, std::string_view event,
          const nlohmann::ordered_json& fields = nlohmann::ordered_json::object());

inline void debug(std::string_view e, const nlohmann::ordered_json& f = {}) {
  emit(Level::kDebug, e, f);
}
inline void info(std::string_view e, const nlohmann::ordered_json& f = {}) {
  emit(Level::kInfo, e, f);
}
inline void warn(std::string_view e, const nlohmann::ordered_json& f = {}) {
  emit(Level::kWarn, e, f);
}
inline void error(std::string_view e, const nlohmann::ordered_json& f = {}) {
  emit(Level::kError, e, f);
}

}  // namespace hscurate::log

#endif  // HSCURATE_LOG_H_
