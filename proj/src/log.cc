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
#include "hscurate/log.h"

#include <atomic>
#include <iostream>
#include <mutex>

#include "hscurate/errors.h"

namespace hscurate::log {
namespace {

std::atomic<Level> g_level{Level::kWarn};
std::mutex g_mu;

const char* level_name(Level l) {
  switch (l) {
    case Level::kDebug: return "debug";
    case Level::kInfo: return "info";
    case Level::kWarn: return "warn";
    case Level::kError: return "error";
    case Level::kOff: return "off";
  }
  return "?";
}

}  // namespace

Level parse_level(std::string_view name) {
  if (name == "debug") return Level::kDebug;
  if (name == "info") return Level::kInfo;
  if (name == "warn") return Level::kWarn;
  if (name == "error") return Level::kError;
  if (name == "off") return Level::kOff;
  throw PreconditionError("unknown log level '" + std::string(name) + "'");
}

void set_level(Level l) { g_level.store(l); }
Level level() { return g_level.load(); }

void emit(Level l, std::string_view event, const nlohmann::ordered_json& fields) {
  if (l < g_level.load() || g_level.load() == Level::kOff) return;
  nlohmann::ordered_json line;
  line["level"] = level_name(l);
  line["event"] = event;
  if (fields.is_object()) {
    for (const auto& [k, v] : fields.items()) line[k] = v;
  }
  const std::string s = line.dump(-1, ' ', false,
                                  nlohmann::ordered_json::error_handler_t::replace);
  std::lock_guard<std::mutex> lock(g_mu);
  std::cerr << s << '\n';
}

}  // namespace hscurate::log
