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
#include "hscurate/synthetic.h"

#include <algorithm>
#include <array>
#include <cstdio>

#include "hscurate/errors.h"
#include "hscurate/rng.h"

namespace hscurate::synthetic {

namespace {

using corpus::Sample;

const std::vector<std::string> kPositive = {"trash",     "vermin",  "scum", "filth",
                                            "parasites", "savages", "rats", "garbage"};
const std::vector<std::string> kNegative = {"lovely", "neighbors", "garden", "weekend",
                                            "recipe", "coffee",    "music",  "friends"};

constexpr std::array<std::string_view, 16> kSyllables = {
    "ka", "lo", "mi", "nu", "pe", "ra", "so", "ti",
    "vu", "ze", "bo", "da", "fi", "go", "he", "ju"};

// Distinct indices give distinct words.
std::string made_up_word(std::size_t index) {
  std::string w;
  for (int digits = 0; digits < 3 || index > 0; ++digits) {
    w.insert(0, kSyllables[index % kSyllables.size()]);
    index /= kSyllables.size();
  }
  return w;
}

std::string id_of(const char* prefix, std::size_t n) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s-%04zu", prefix, n);
  return buf;
}

std::string compose(CounterRng& rng, const std::vector<std::string>& vocab, int class_words,
                    const std::array<std::string, 5>& topic) {
  std::vector<std::string> words;
  std::vector<std::string> pool = vocab;
  rng.shuffle(pool);
  words.insert(words.end(), pool.begin(), pool.begin() + class_words);
  const auto skip = rng.bounded(topic.size());
  for (std::size_t i = 0; i < topic.size(); ++i) {
    if (i != skip) words.push_back(topic[i]);
  }
  rng.shuffle(words);
  std::string text;
  for (const auto& w : words) {
    if (!text.empty()) text.push_back(' ');
    text += w;
  }
  return text;
}

}  // namespace

const std::vector<std::string>& positive_words() { return kPositive; }

Corpus generate(const Spec& spec) {
  if (spec.topics < 2) throw PreconditionError("synthetic corpus needs at least 2 topics");
  if (spec.trusted % 2 != 0 || spec.trusted > spec.topics) {
    throw PreconditionError("trusted probe count must be even and at most the topic count");
  }
  CounterRng rng(CounterRng::derive(spec.seed, 0x73796eULL));

  std::vector<std::array<std::string, 5>> topics(spec.topics);
  for (std::size_t t = 0; t < spec.topics; ++t) {
    for (std::size_t j = 0; j < 5; ++j) topics[t][j] = made_up_word(t * 5 + j);
  }
  auto label_of = [](std::size_t t) { return static_cast<int>(t % 2); };
  auto vocab_of = [](int label) -> const std::vector<std::string>& {
    return label == 1 ? kPositive : kNegative;
  };

  std::vector<Sample> train;
  for (std::size_t t = 0; t < spec.topics; ++t) {
    const int y = label_of(t);
    train.push_back({id_of("syn", t), compose(rng, vocab_of(y), 2, topics[t]), y,
                     corpus::Origin::kSource, std::nullopt, std::nullopt});
  }

  std::array<std::vector<std::size_t>, 2> by_class;
  for (std::size_t t = 0; t < spec.topics; ++t) by_class[label_of(t)].push_back(t);
  std::vector<std::size_t> probe_topics;
  for (auto& c : by_class) {
    rng.shuffle(c);
    if (c.size() < spec.trusted / 2) {
      throw PreconditionError("not enough topics per class for the trusted probes");
    }
    probe_topics.insert(probe_topics.end(), c.begin(), c.begin() + spec.trusted / 2);
  }
  std::sort(probe_topics.begin(), probe_topics.end());
  corpus::TrustedSet ts;
  ts.intended_size = spec.trusted;
  for (std::size_t t : probe_topics) {
    const int y = label_of(t);
    ts.samples.push_back({id_of("tsd", t), compose(rng, vocab_of(y), 1, topics[t]), y,
                          corpus::Origin::kSource, std::nullopt, std::nullopt});
  }

  std::vector<Sample> held;
  for (std::size_t t = 0; t < spec.topics; ++t) {
    const int y = label_of(t);
    for (std::size_t r = 0; r < spec.heldout_per_topic; ++r) {
      held.push_back({id_of("held", t * spec.heldout_per_topic + r),
                      compose(rng, vocab_of(y), 2, topics[t]), y, corpus::Origin::kSource,
                      std::nullopt, std::nullopt});
    }
  }

  const corpus::LabelMapping mapping = {{"harmful", 1}, {"normal", 0}};
  return {corpus::DatasetSnapshot::create(std::move(train), std::nullopt, mapping),
          std::move(ts), corpus::DatasetSnapshot::create(std::move(held), std::nullopt, mapping)};
}

model::TrainConfig train_config(std::uint64_t seed) {
  model::TrainConfig c;
  c.epochs = 40;
  c.batch_size = 8;
  c.learning_rate = 1.0;
  c.seed = seed;
  c.feature_dim = 8192;
  return c;
}

}  // namespace hscurate::synthetic
