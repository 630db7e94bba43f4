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
#include "hscurate/oracle.h"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <thread>

#include "hscurate/embedded_data.h"
#include "hscurate/hash.h"
#include "hscurate/log.h"
#include "hscurate/text.h"

namespace hscurate::oracle {

using nlohmann::json;
using nlohmann::ordered_json;

std::string_view kind_name(OracleKind k) {
  switch (k) {
    case OracleKind::kHttpLlm: return "http_llm";
    case OracleKind::kMockLookup: return "mock_lookup";
    case OracleKind::kMockRule: return "mock_rule";
  }
  return "?";
}

OracleKind parse_kind(std::string_view name) {
  if (name == "http_llm" || name == "http-llm") return OracleKind::kHttpLlm;
  if (name == "mock_lookup" || name == "mock-lookup") return OracleKind::kMockLookup;
  if (name == "mock_rule" || name == "mock-rule") return OracleKind::kMockRule;
  throw PreconditionError("unknown oracle kind '" + std::string(name) + "'");
}

void OracleConfig::validate() const {
  if (max_retries < 0) throw PreconditionError("max_retries must be >= 0");
  if (kind == OracleKind::kHttpLlm && (endpoint.empty() || model_name.empty())) {
    throw PreconditionError("http_llm oracle needs an endpoint and a model name");
  }
  if (kind == OracleKind::kMockLookup && lookup_path.empty()) {
    throw PreconditionError("mock_lookup oracle needs a lookup table path");
  }
}

std::string OracleConfig::fingerprint() const {
  ordered_json j;
  j["kind"] = kind_name(kind);
  switch (kind) {
    case OracleKind::kHttpLlm:
      j["endpoint"] = endpoint;
      j["model"] = model_name;
      j["template"] = prompt_template_id;
      j["temperature"] = temperature;
      break;
    case OracleKind::kMockLookup:
      j["lookup"] = lookup_path.string();
      break;
    case OracleKind::kMockRule: {
      std::vector<std::string> k = keywords;
      std::sort(k.begin(), k.end());
      j["keywords"] = k;
      j["seed"] = seed;
      break;
    }
  }
  return sha256_hex(j.dump()).substr(0, 16);
}

std::chrono::milliseconds RetryPolicy::delay(int retry) const {
  auto d = base;
  for (int i = 0; i < retry && d < max; ++i) d *= 2;
  return std::min(d, max);
}

Sleeper real_sleeper() {
  return [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
}

std::optional<int> parse_verdict(std::string_view completion) {
  const auto words = text::word_tokens(completion);
  if (words.empty()) return std::nullopt;
  if (words.front() == "harmful") return 1;
  if (words.front() == "normal") return 0;
  return std::nullopt;
}

// ---------------------------------------------------------------------------

std::string PromptTemplate::render_user(std::string_view text) const {
  std::string out = user;
  const std::string key = "{text}";
  if (auto pos = out.find(key); pos != std::string::npos) {
    out.replace(pos, key.size(), text);
  }
  return out;
}

PromptLibrary PromptLibrary::parse(std::string_view json_text) {
  PromptLibrary lib;
  try {
    const json j = json::parse(json_text);
    for (const auto& [id, t] : j.items()) {
      lib.templates_[id] = PromptTemplate{id, t.at("system").get<std::string>(),
                                          t.at("user").get<std::string>()};
    }
  } catch (const json::exception& e) {
    throw FormatError(std::string("bad prompt templates: ") + e.what());
  }
  return lib;
}

const PromptLibrary& PromptLibrary::builtin() {
  static const PromptLibrary lib = parse(embedded::prompt_templates());
  return lib;
}

const PromptTemplate& PromptLibrary::get(const std::string& id) const {
  auto it = templates_.find(id);
  if (it == templates_.end()) throw PreconditionError("unknown prompt template '" + id + "'");
  return it->second;
}

ordered_json ChatRequest::to_json() const {
  ordered_json j;
  j["model"] = model;
  j["messages"] = ordered_json::array();
  for (const auto& m : messages) j["messages"].push_back({{"role", m.role}, {"content", m.content}});
  j["temperature"] = temperature;
  return j;
}

std::string first_choice_text(std::string_view body) {
  try {
    const json j = json::parse(body);
    const auto& content = j.at("choices").at(0).at("message").at("content");
    return content.is_null() ? std::string() : content.get<std::string>();
  } catch (const json::exception& e) {
    throw OracleError(std::string("chat response without a usable choice: ") + e.what());
  }
}

// ---------------------------------------------------------------------------

LookupAnnotator::LookupAnnotator(std::unordered_map<std::string, int> by_sha256)
    : table_(std::move(by_sha256)) {
  std::map<std::string, int> sorted(table_.begin(), table_.end());
  fingerprint_ = "lookup-" + sha256_hex(json(sorted).dump()).substr(0, 16);
}

std::unique_ptr<LookupAnnotator> LookupAnnotator::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open lookup table '" + path.string() + "'");
  try {
    auto table = json::parse(in).get<std::unordered_map<std::string, int>>();
    for (const auto& [sha, label] : table) {
      if (label != 0 && label != 1) {
        throw FormatError("lookup table '" + path.string() + "' maps " + sha + " to " +
                          std::to_string(label));
      }
    }
    return std::make_unique<LookupAnnotator>(std::move(table));
  } catch (const json::exception& e) {
    throw FormatError("bad lookup table '" + path.string() + "': " + e.what());
  }
}

std::unique_ptr<LookupAnnotator> LookupAnnotator::from_samples(
    std::span<const corpus::Sample> samples) {
  std::unordered_map<std::string, int> table;
  for (const auto& s : samples) table[sha256_hex(s.text)] = s.label;
  return std::make_unique<LookupAnnotator>(std::move(table));
}

int LookupAnnotator::annotate(std::string_view text) {
  if (text.empty()) throw PreconditionError("cannot annotate empty text");
  const std::string sha = sha256_hex(text);
  auto it = table_.find(sha);
  if (it == table_.end()) throw OracleError("lookup oracle has no entry for text " + sha);
  return it->second;
}

RuleAnnotator::RuleAnnotator(const std::vector<std::string>& keywords) {
  for (const auto& k : keywords) {
    for (auto& tok : text::word_tokens(k)) keywords_.insert(std::move(tok));
  }
  fingerprint_ = "rule-" + sha256_hex(json(keywords_).dump()).substr(0, 16);
}

int RuleAnnotator::annotate(std::string_view text) {
  if (text.empty()) throw PreconditionError("cannot annotate empty text");
  for (const auto& tok : text::word_tokens(text)) {
    if (keywords_.count(tok)) return 1;
  }
  return 0;
}

LlmAnnotator::LlmAnnotator(OracleConfig cfg, std::shared_ptr<ChatTransport> transport,
                           Sleeper sleeper)
    : cfg_(std::move(cfg)), transport_(std::move(transport)), sleeper_(std::move(sleeper)) {
  cfg_.temperature = 0.0;
  fingerprint_ = "llm-" + cfg_.fingerprint();
  PromptLibrary::builtin().get(cfg_.prompt_template_id);
}

int LlmAnnotator::annotate(std::string_view text) {
  if (text.empty()) throw PreconditionError("cannot annotate empty text");
  const PromptTemplate& t = PromptLibrary::builtin().get(cfg_.prompt_template_id);
  ChatRequest req{cfg_.model_name,
                  {{"system", t.system}, {"user", t.render_user(text)}},
                  0.0};
  const RetryPolicy policy{cfg_.max_retries, cfg_.backoff_base, cfg_.backoff_max};
  return with_retries(policy, sleeper_, [&] {
    const std::string reply = transport_->complete(req);
    auto v = parse_verdict(reply);
    if (!v) throw OracleError("unparseable annotation reply: '" + reply.substr(0, 80) + "'");
    return *v;
  });
}

LlmParaphraser::LlmParaphraser(OracleConfig cfg, std::shared_ptr<ChatTransport> transport,
                               Sleeper sleeper)
    : cfg_(std::move(cfg)), transport_(std::move(transport)), sleeper_(std::move(sleeper)) {
  fingerprint_ = "llm-" + cfg_.fingerprint();
  PromptLibrary::builtin().get(cfg_.prompt_template_id);
}

std::string LlmParaphraser::paraphrase(std::string_view text) {
  if (text.empty()) throw PreconditionError("cannot paraphrase empty text");
  const PromptTemplate& t = PromptLibrary::builtin().get(cfg_.prompt_template_id);
  ChatRequest req{cfg_.model_name,
                  {{"system", t.system}, {"user", t.render_user(text)}},
                  cfg_.temperature};
  const RetryPolicy policy{cfg_.max_retries, cfg_.backoff_base, cfg_.backoff_max};
  try {
    return with_retries(policy, sleeper_, [&] {
      const std::string reply = transport_->complete(req);
      std::string_view first = reply;
      first = first.substr(0, first.find('\n'));
      const std::string out(text::trim(first));
      if (out.empty()) throw OracleError("blank paraphrase");
      return out;
    });
  } catch (const OracleError&) {
    return {};
  }
}

namespace {

constexpr std::string_view kTemplates[] = {
    "some people never contribute anything, you know the type",
    "funny how {rest} always comes up with certain people",
    "not saying anything, but we all know who {rest} is really about",
    "{rest}, some folks just are what they are",
    "interesting how it is always the same crowd, {rest}",
};

}  // namespace

TemplateParaphraser::TemplateParaphraser(const std::vector<std::string>& strip_terms,
                                         std::uint64_t seed)
    : seed_(seed) {
  for (const auto& t : strip_terms) {
    for (auto& tok : text::word_tokens(t)) strip_.insert(std::move(tok));
  }
  fingerprint_ = "template-" + sha256_hex(json(strip_).dump() + std::to_string(seed)).substr(0, 16);
}

std::span<const std::string_view> TemplateParaphraser::templates() { return kTemplates; }

std::string TemplateParaphraser::paraphrase(std::string_view in) {
  if (in.empty()) throw PreconditionError("cannot paraphrase empty text");
  std::string rest;
  for (auto word : text::split_whitespace(in)) {
    bool stripped = false;
    for (const auto& tok : text::word_tokens(word)) stripped = stripped || strip_.count(tok);
    if (stripped) continue;
    if (!rest.empty()) rest.push_back(' ');
    rest.append(word);
  }
  const std::size_t n = std::size(kTemplates);
  std::size_t pick = mix64(fnv1a64(in) ^ seed_) % n;
  if (rest.empty()) pick = 0;
  std::string out(kTemplates[pick]);
  if (auto pos = out.find("{rest}"); pos != std::string::npos) out.replace(pos, 6, rest);
  return out;
}

// ---------------------------------------------------------------------------

OracleCache::OracleCache(std::filesystem::path path) : path_(std::move(path)) {
  std::ifstream in(path_);
  if (!in) return;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (text::trim(line).empty()) continue;
    try {
      const json j = json::parse(line);
      auto key = std::make_pair(j.at("oracle_fingerprint").get<std::string>(),
                                j.at("text_sha256").get<std::string>());
      if (j.contains("verdict")) verdicts_[key] = j.at("verdict").get<int>();
      if (j.contains("paraphrase")) paraphrases_[key] = j.at("paraphrase").get<std::string>();
    } catch (const json::exception& e) {
      log::warn("oracle_cache_bad_line", {{"path", path_.string()}, {"line", lineno}});
    }
  }
}

std::optional<int> OracleCache::find_verdict(const std::string& fp, const std::string& sha) const {
  std::lock_guard<std::mutex> lock(mu_);
  auto it = verdicts_.find({fp, sha});
  if (it == verdicts_.end()) return std::nullopt;
  return it->second;
}

std::optional<std::string> OracleCache::find_paraphrase(const std::string& fp,
                                                        const std::string& sha) const {
  std::lock_guard<std::mutex> lock(mu_);
  auto it = paraphrases_.find({fp, sha});
  if (it == paraphrases_.end()) return std::nullopt;
  return it->second;
}

void OracleCache::append(const ordered_json& record) {
  if (path_.empty()) return;
  if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
  std::ofstream out(path_, std::ios::app | std::ios::binary);
  out << record.dump(-1, ' ', false, ordered_json::error_handler_t::replace) << '\n';
  if (!out) throw FormatError("cannot append to oracle cache '" + path_.string() + "'");
}

void OracleCache::store_verdict(const std::string& fp, const std::string& sha, int verdict,
                                const std::string& template_id) {
  std::lock_guard<std::mutex> lock(mu_);
  if (!verdicts_.emplace(std::make_pair(fp, sha), verdict).second) return;
  ordered_json r;
  r["oracle_fingerprint"] = fp;
  r["text_sha256"] = sha;
  r["verdict"] = verdict;
  r["template_id"] = template_id;
  r["timestamp"] = corpus::artifact_timestamp();
  append(r);
}

void OracleCache::store_paraphrase(const std::string& fp, const std::string& sha,
                                   const std::string& paraphrase,
                                   const std::string& template_id) {
  std::lock_guard<std::mutex> lock(mu_);
  if (!paraphrases_.emplace(std::make_pair(fp, sha), paraphrase).second) return;
  ordered_json r;
  r["oracle_fingerprint"] = fp;
  r["text_sha256"] = sha;
  r["paraphrase"] = paraphrase;
  r["template_id"] = template_id;
  r["timestamp"] = corpus::artifact_timestamp();
  append(r);
}

std::size_t OracleCache::size() const {
  std::lock_guard<std::mutex> lock(mu_);
  return verdicts_.size() + paraphrases_.size();
}

CachedAnnotator::CachedAnnotator(std::unique_ptr<Annotator> inner,
                                 std::shared_ptr<OracleCache> cache)
    : inner_(std::move(inner)), cache_(std::move(cache)) {}

int CachedAnnotator::annotate(std::string_view text) {
  if (text.empty()) throw PreconditionError("cannot annotate empty text");
  const std::string sha = sha256_hex(text);
  const std::string fp = inner_->fingerprint();
  if (auto hit = cache_->find_verdict(fp, sha)) return *hit;
  ++misses_;
  const int v = inner_->annotate(text);
  cache_->store_verdict(fp, sha, v, inner_->template_id());
  return v;
}

CachedParaphraser::CachedParaphraser(std::unique_ptr<Paraphraser> inner,
                                     std::shared_ptr<OracleCache> cache)
    : inner_(std::move(inner)), cache_(std::move(cache)) {}

std::string CachedParaphraser::paraphrase(std::string_view text) {
  if (text.empty()) throw PreconditionError("cannot paraphrase empty text");
  const std::string sha = sha256_hex(text);
  const std::string fp = inner_->fingerprint();
  if (auto hit = cache_->find_paraphrase(fp, sha)) return *hit;
  ++misses_;
  std::string p = inner_->paraphrase(text);
  if (!p.empty()) cache_->store_paraphrase(fp, sha, p, inner_->template_id());
  return p;
}

namespace {

std::shared_ptr<OracleCache> shared_cache(const std::filesystem::path& path) {
  static std::mutex mu;
  static std::map<std::string, std::weak_ptr<OracleCache>> open;
  std::lock_guard<std::mutex> lock(mu);
  const std::string key = std::filesystem::absolute(path).lexically_normal().string();
  if (auto c = open[key].lock()) return c;
  auto c = std::make_shared<OracleCache>(path);
  open[key] = c;
  return c;
}

std::shared_ptr<ChatTransport> http_transport(const OracleConfig& cfg) {
  std::string key;
  if (!cfg.api_key_env.empty()) {
    if (const char* v = std::getenv(cfg.api_key_env.c_str())) key = v;
  }
  return std::make_shared<HttpChatTransport>(cfg.endpoint, std::move(key), cfg.timeout);
}

}  // namespace

std::unique_ptr<Annotator> make_annotator(const OracleConfig& cfg) {
  cfg.validate();
  std::unique_ptr<Annotator> a;
  switch (cfg.kind) {
    case OracleKind::kHttpLlm:
      a = std::make_unique<LlmAnnotator>(cfg, http_transport(cfg));
      break;
    case OracleKind::kMockLookup:
      a = LookupAnnotator::load(cfg.lookup_path);
      break;
    case OracleKind::kMockRule:
      a = std::make_unique<RuleAnnotator>(cfg.keywords);
      break;
  }
  if (cfg.cache_path.empty()) return a;
  return std::make_unique<CachedAnnotator>(std::move(a), shared_cache(cfg.cache_path));
}

std::unique_ptr<Paraphraser> make_paraphraser(const OracleConfig& cfg) {
  if (cfg.kind == OracleKind::kHttpLlm) cfg.validate();
  if (cfg.max_retries < 0) throw PreconditionError("max_retries must be >= 0");
  std::unique_ptr<Paraphraser> p;
  if (cfg.kind == OracleKind::kHttpLlm) {
    p = std::make_unique<LlmParaphraser>(cfg, http_transport(cfg));
  } else {
    p = std::make_unique<TemplateParaphraser>(cfg.keywords, cfg.seed);
  }
  if (cfg.cache_path.empty()) return p;
  return std::make_unique<CachedParaphraser>(std::move(p), shared_cache(cfg.cache_path));
}

}  // namespace hscurate::oracle
