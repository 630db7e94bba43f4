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
#ifndef HSCURATE_ORACLE_H_
#define HSCURATE_ORACLE_H_

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "hscurate/corpus.h"
#include "hscurate/errors.h"
#include "json.hpp"

namespace hscurate::oracle {

enum class OracleKind { kHttpLlm, kMockLookup, kMockRule };

std::string_view kind_name(OracleKind k);
OracleKind parse_kind(std::string_view name);

struct OracleConfig {
  OracleKind kind = OracleKind::kMockRule;
  // Full chat-completions URL, e.g. http://localhost:8000/v1/chat/completions.
  std::string endpoint;
  std::string model_name;
  std::string prompt_template_id = "annotate-v1";
  int max_retries = 3;
  std::chrono::milliseconds timeout{30000};
  std::chrono::milliseconds backoff_base{500};
  std::chrono::milliseconds backoff_max{8000};
  std::filesystem::path cache_path;  // empty: no cache
  // Name of the environment variable holding the API key; the key itself is
  // never stored or logged.
  std::string api_key_env = "OPENAI_API_KEY";
  std::filesystem::path lookup_path;  // mock_lookup: JSON {sha256(text): 0|1}
  std::vector<std::string> keywords;  // mock_rule keywords / terms the mock paraphraser strips
  double temperature = 0.0;           // paraphrase only; annotation always uses 0
  std::uint64_t seed = 0;             // mock paraphraser template choice

  // Throws PreconditionError: max_retries < 0, http_llm without endpoint or
  // model_name, mock_lookup without lookup_path.
  void validate() const;
  // Identity of the answering oracle (kind, endpoint, model, template, mock
  // parameters); keys the cache.
  std::string fingerprint() const;
};

// Backoff before retry k (0-based) is min(base * 2^k, max): non-decreasing.
struct RetryPolicy {
  int max_retries = 3;
  std::chrono::milliseconds base{500};
  std::chrono::milliseconds max{8000};

  std::chrono::milliseconds delay(int retry) const;
};

using Sleeper = std::function<void(std::chrono::milliseconds)>;
Sleeper real_sleeper();

// Runs attempt() up to max_retries + 1 times, sleeping between tries.
// TransportError and OracleError are retried; the last one is rethrown.
template <typename F>
auto with_retries(const RetryPolicy& policy, const Sleeper& sleep, F&& attempt)
    -> decltype(attempt()) {
  for (int retry = 0;; ++retry) {
    try {
      return attempt();
    } catch (const TransportError&) {
      if (retry >= policy.max_retries) throw;
    } catch (const OracleError&) {
      if (retry >= policy.max_retries) throw;
    }
    sleep(policy.delay(retry));
  }
}

// Accepts "HARMFUL" -> 1 and "NORMAL" -> 0 as the first word of the reply,
// case-insensitively, ignoring surrounding punctuation ("NORMAL." -> 0).
std::optional<int> parse_verdict(std::string_view completion);

struct PromptTemplate {
  std::string id;
  std::string system;
  std::string user;  // "{text}" is replaced by the sample text

  std::string render_user(std::string_view text) const;
};

class PromptLibrary {
 public:
  static PromptLibrary parse(std::string_view json_text);
  // data/prompts.json
  static const PromptLibrary& builtin();
  // Throws PreconditionError for an unknown id.
  const PromptTemplate& get(const std::string& id) const;

 private:
  std::map<std::string, PromptTemplate> templates_;
};

struct ChatMessage {
  std::string role;
  std::string content;
};

struct ChatRequest {
  std::string model;
  std::vector<ChatMessage> messages;
  double temperature = 0.0;

  nlohmann::ordered_json to_json() const;
};

// Returns the text of the first choice. Throws TransportError when the
// service cannot be reached (or answers 429/5xx) and OracleError when the
// response has no usable choice.
class ChatTransport {
 public:
  virtual ~ChatTransport() = default;
  virtual std::string complete(const ChatRequest& request) = 0;
};

// POSTs ChatRequest JSON to an http(s) URL with an optional bearer token.
class HttpChatTransport final : public ChatTransport {
 public:
  HttpChatTransport(std::string url, std::string api_key, std::chrono::milliseconds timeout);
  std::string complete(const ChatRequest& request) override;

 private:
  std::string origin_;  // scheme://host[:port]
  std::string path_;
  std::string api_key_;
  std::chrono::milliseconds timeout_;
};

// Extracts choices[0].message.content from a chat-completions response body.
std::string first_choice_text(std::string_view body);

class Annotator {
 public:
  virtual ~Annotator() = default;
  // Verdict in {0, 1}. Throws PreconditionError on empty text.
  virtual int annotate(std::string_view text) = 0;
  virtual std::string fingerprint() const = 0;
  virtual std::string template_id() const { return {}; }
};

class Paraphraser {
 public:
  virtual ~Paraphraser() = default;
  // Empty result means no usable paraphrase; callers skip the sample.
  virtual std::string paraphrase(std::string_view text) = 0;
  virtual std::string fingerprint() const = 0;
  virtual std::string template_id() const { return {}; }
};

// Table keyed by the SHA-256 of the text.
class LookupAnnotator final : public Annotator {
 public:
  explicit LookupAnnotator(std::unordered_map<std::string, int> by_sha256);
  static std::unique_ptr<LookupAnnotator> load(const std::filesystem::path& path);
  // Answers each sample's text with its label.
  static std::unique_ptr<LookupAnnotator> from_samples(std::span<const corpus::Sample> samples);

  // Throws OracleError if the text has no entry.
  int annotate(std::string_view text) override;
  std::string fingerprint() const override { return fingerprint_; }

 private:
  std::unordered_map<std::string, int> table_;
  std::string fingerprint_;
};

// 1 iff a keyword is among the word tokens of the text.
class RuleAnnotator final : public Annotator {
 public:
  explicit RuleAnnotator(const std::vector<std::string>& keywords);
  int annotate(std::string_view text) override;
  std::string fingerprint() const override { return fingerprint_; }

 private:
  std::set<std::string> keywords_;
  std::string fingerprint_;
};

class LlmAnnotator final : public Annotator {
 public:
  LlmAnnotator(OracleConfig cfg, std::shared_ptr<ChatTransport> transport,
               Sleeper sleeper = real_sleeper());
  int annotate(std::string_view text) override;
  std::string fingerprint() const override { return fingerprint_; }
  std::string template_id() const override { return cfg_.prompt_template_id; }

 private:
  OracleConfig cfg_;
  std::shared_ptr<ChatTransport> transport_;
  Sleeper sleeper_;
  std::string fingerprint_;
};

class LlmParaphraser final : public Paraphraser {
 public:
  LlmParaphraser(OracleConfig cfg, std::shared_ptr<ChatTransport> transport,
                 Sleeper sleeper = real_sleeper());
  // Blank completions are retried; after the last retry "" is returned.
  std::string paraphrase(std::string_view text) override;
  std::string fingerprint() const override { return fingerprint_; }
  std::string template_id() const override { return cfg_.prompt_template_id; }

 private:
  OracleConfig cfg_;
  std::shared_ptr<ChatTransport> transport_;
  Sleeper sleeper_;
  std::string fingerprint_;
};

// Offline stand-in: drops words that match a stripped term and wraps the rest
// in one of a fixed set of indirect phrasings, chosen by hashing the text with
// the seed.
class TemplateParaphraser final : public Paraphraser {
 public:
  TemplateParaphraser(const std::vector<std::string>& strip_terms, std::uint64_t seed);
  std::string paraphrase(std::string_view text) override;
  std::string fingerprint() const override { return fingerprint_; }

  static std::span<const std::string_view> templates();

 private:
  std::set<std::string> strip_;
  std::uint64_t seed_;
  std::string fingerprint_;
};

// Append-only JSONL cache:
// {oracle_fingerprint, text_sha256, verdict|paraphrase, template_id, timestamp}.
class OracleCache {
 public:
  explicit OracleCache(std::filesystem::path path);

  std::optional<int> find_verdict(const std::string& fingerprint, const std::string& sha) const;
  std::optional<std::string> find_paraphrase(const std::string& fingerprint,
                                             const std::string& sha) const;
  void store_verdict(const std::string& fingerprint, const std::string& sha, int verdict,
                     const std::string& template_id);
  void store_paraphrase(const std::string& fingerprint, const std::string& sha,
                        const std::string& paraphrase, const std::string& template_id);
  std::size_t size() const;

 private:
  void append(const nlohmann::ordered_json& record);

  std::filesystem::path path_;
  mutable std::mutex mu_;
  std::map<std::pair<std::string, std::string>, int> verdicts_;
  std::map<std::pair<std::string, std::string>, std::string> paraphrases_;
};

class CachedAnnotator final : public Annotator {
 public:
  CachedAnnotator(std::unique_ptr<Annotator> inner, std::shared_ptr<OracleCache> cache);
  int annotate(std::string_view text) override;
  std::string fingerprint() const override { return inner_->fingerprint(); }
  std::string template_id() const override { return inner_->template_id(); }
  // Calls forwarded to the wrapped oracle (cache misses).
  std::size_t misses() const { return misses_.load(); }

 private:
  std::unique_ptr<Annotator> inner_;
  std::shared_ptr<OracleCache> cache_;
  std::atomic<std::size_t> misses_{0};
};

class CachedParaphraser final : public Paraphraser {
 public:
  CachedParaphraser(std::unique_ptr<Paraphraser> inner, std::shared_ptr<OracleCache> cache);
  std::string paraphrase(std::string_view text) override;
  std::string fingerprint() const override { return inner_->fingerprint(); }
  std::string template_id() const override { return inner_->template_id(); }
  std::size_t misses() const { return misses_.load(); }

 private:
  std::unique_ptr<Paraphraser> inner_;
  std::shared_ptr<OracleCache> cache_;
  std::atomic<std::size_t> misses_{0};
};

// Builds the configured annotator, wrapped in a cache when cache_path is set.
std::unique_ptr<Annotator> make_annotator(const OracleConfig& cfg);
// mock_rule and mock_lookup both map to the template paraphraser (keywords
// are the stripped terms).
std::unique_ptr<Paraphraser> make_paraphraser(const OracleConfig& cfg);

}  // namespace hscurate::oracle

#endif  // HSCURATE_ORACLE_H_
