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
#include "httplib.h"

#include "hscurate/oracle.h"

namespace hscurate::oracle {

HttpChatTransport::HttpChatTransport(std::string url, std::string api_key,
                                     std::chrono::milliseconds timeout)
    : api_key_(std::move(api_key)), timeout_(timeout) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw PreconditionError("endpoint '" + url + "' lacks a scheme");
  }
  const std::string scheme = url.substr(0, scheme_end);
  if (scheme != "http" && scheme != "https") {
    throw PreconditionError("endpoint '" + url + "' is not http or https");
  }
  const auto path_start = url.find('/', scheme_end + 3);
  origin_ = url.substr(0, path_start);
  path_ = path_start == std::string::npos ? "/" : url.substr(path_start);
}

std::string HttpChatTransport::complete(const ChatRequest& request) {
  httplib::Client client(origin_);
  const auto secs = timeout_.count() / 1000;
  const auto usecs = (timeout_.count() % 1000) * 1000;
  client.set_connection_timeout(secs, usecs);
  client.set_read_timeout(secs, usecs);
  client.set_write_timeout(secs, usecs);
  httplib::Headers headers;
  if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);
  auto res = client.Post(path_, headers, request.to_json().dump(), "application/json");
  if (!res) {
    throw TransportError("chat endpoint " + origin_ + " unreachable: " +
                         httplib::to_string(res.error()));
  }
  if (res->status == 429 || res->status >= 500) {
    throw TransportError("chat endpoint answered HTTP " + std::to_string(res->status));
  }
  if (res->status != 200) {
    throw OracleError("chat endpoint answered HTTP " + std::to_string(res->status));
  }
  return first_choice_text(res->body);
}

}  // namespace hscurate::oracle
