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
#ifndef HSCURATE_SYNTHETIC_H_
#define HSCURATE_SYNTHETIC_H_

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "hscurate/corpus.h"
#include "hscurate/model.h"

namespace hscurate::synthetic {

// Topic-structured toy corpus. Each topic owns five made-up words and a
// class; a training text is two words from its class vocabulary plus four of
// the topic's words. A trusted probe carries one class word and four topic
// words, so a model that memorized a mislabeled training text gets the probe
// for that topic wrong.
struct Spec {
  std::size_t topics = 400;         // one training sample each, classes alternate
  std::size_t trusted = 320;        // probes on distinct topics, balanced
  std::size_t heldout_per_topic = 2;
  std::uint64_t seed = 1;
};

struct Corpus {
  corpus::DatasetSnapshot train;
  corpus::TrustedSet trusted;
  corpus::DatasetSnapshot heldout;
};

Corpus generate(const Spec& spec);

// Training settings under which the builtin model fits single mislabeled
// texts, which is what makes the noise visible on the probes.
model::TrainConfig train_config(std::uint64_t seed);

// The positive class vocabulary (used as the paraphraser's strip list).
const std::vector<std::string>& positive_words();

}  // namespace hscurate::synthetic

#endif  // HSCURATE_SYNTHETIC_H_
