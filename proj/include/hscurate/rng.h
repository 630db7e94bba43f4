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
#ifndef HSCURATE_RNG_H_
#define HSCURATE_RNG_H_

#include <cstdint>
#include <utility>
#include <vector>

#include "hscurate/hash.h"

namespace hscurate {

// Counter-based 64-bit generator: the k-th draw (k = 1, 2, ...) is
// mix64(key + k * 0x9e3779b97f4a7c15), i.e. SplitMix64 evaluated at a counter.
// Every derived quantity below is specified bit-for-bit so that sampling is
// reproducible across platforms and standard libraries.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t key) : key_(key) {}

  // Key for a sub-stream, e.g. CounterRng(CounterRng::derive(seed, epoch)).
  static std::uint64_t derive(std::uint64_t key, std::uint64_t salt) {
    return mix64(key ^ mix64(salt + 0x632be59bd9b4e019ULL));
  }

  std::uint64_t next() {
    ++counter_;
    return mix64(key_ + counter_ * 0x9e3779b97f4a7c15ULL);
  }

  // Uniform on [0, n) by rejection of the biased tail; n > 0.
  std::uint64_t bounded(std::uint64_t n) {
    const std::uint64_t limit = UINT64_MAX - (UINT64_MAX % n);
    std::uint64_t r = next();
    while (r >= limit) r = next();
    return r % n;
  }

  // Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  // Standard normal (Box-Muller, one value per call).
  double normal();

  // Fisher-Yates, walking from the back.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[bounded(i)]);
    }
  }

  std::uint64_t draws() const { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace hscurate

#endif  // HSCURATE_RNG_H_
