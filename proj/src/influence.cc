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
#include "hscurate/influence.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <thread>
#include <unordered_map>

#include "hscurate/errors.h"
#include "hscurate/kernels/similarity_kernels.h"

namespace hscurate::influence {

using nlohmann::json;
using nlohmann::ordered_json;

ErrorSet error_set_from_predictions(std::span<const corpus::Sample> samples,
                                    std::span<const model::Prediction> predictions) {
  if (samples.size() != predictions.size()) {
    throw PreconditionError("prediction count does not match trusted sample count");
  }
  ErrorSet es;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (predictions[i].sample_id != samples[i].id) {
      throw PreconditionError("prediction for '" + predictions[i].sample_id +
                              "' is aligned with trusted sample '" + samples[i].id + "'");
    }
    if (predictions[i].predicted_label != samples[i].label) {
      es.entries.push_back({samples[i].id, samples[i].label, predictions[i].predicted_label});
    }
  }
  return es;
}

ErrorSet error_set(const model::ClassifierModel& m, const corpus::TrustedSet& ts) {
  const auto preds = m.predict(ts.samples);
  return error_set_from_predictions(ts.samples, preds);
}

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw PreconditionError("cosine_similarity: dimensions " + std::to_string(a.size()) +
                            " and " + std::to_string(b.size()) + " differ");
  }
  const auto& k = kernels::active_kernels();
  const double na = std::sqrt(k.dot(a.data(), a.data(), a.size()));
  const double nb = std::sqrt(k.dot(b.data(), b.data(), b.size()));
  if (na == 0.0 || nb == 0.0) return 0.0;
  const double c = k.dot(a.data(), b.data(), a.size()) / (na * nb);
  return std::clamp(c, -1.0, 1.0);
}

namespace {

struct Candidate {
  const double* row;
  double norm;
  std::size_t rank;      // position of the sample id in lexicographic order
  std::size_t ds_index;
};

struct Entry {
  double score;
  std::size_t rank;
  std::size_t ds_index;
};

// Higher score first, then smaller id.
inline bool better(const Entry& a, const Entry& b) {
  if (a.score != b.score) return a.score > b.score;
  return a.rank < b.rank;
}

std::unordered_map<std::string_view, std::size_t> row_index(const model::EmbeddingMatrix& m) {
  std::unordered_map<std::string_view, std::size_t> idx;
  idx.reserve(m.ids.size());
  for (std::size_t i = 0; i < m.ids.size(); ++i) idx.emplace(m.ids[i], i);
  return idx;
}

}  // namespace

InfluenceReport top_influence(const ErrorSet& errors, const corpus::DatasetSnapshot& ds,
                              const model::EmbeddingMatrix& train_emb,
                              const model::EmbeddingMatrix& trusted_emb, std::size_t x,
                              const InfluenceOptions& opts) {
  InfluenceReport rep;
  rep.x = x;
  if (x == 0 || errors.empty()) return rep;
  if (train_emb.values.size() != train_emb.rows() * train_emb.dim ||
      trusted_emb.values.size() != trusted_emb.rows() * trusted_emb.dim) {
    throw PreconditionError("embedding matrix shape does not match its row ids");
  }
  if (train_emb.dim != trusted_emb.dim) {
    throw PreconditionError("training embeddings have dimension " +
                            std::to_string(train_emb.dim) + " but trusted embeddings " +
                            std::to_string(trusted_emb.dim));
  }
  const std::size_t dim = train_emb.dim;
  const auto& kern = kernels::active_kernels();

  // Lexicographic rank of every sample id, for tie-breaking without string
  // comparisons in the hot loop.
  std::vector<std::size_t> by_id(ds.size());
  std::iota(by_id.begin(), by_id.end(), std::size_t{0});
  std::sort(by_id.begin(), by_id.end(),
            [&](std::size_t a, std::size_t b) { return ds[a].id < ds[b].id; });
  std::vector<std::size_t> rank(ds.size());
  for (std::size_t r = 0; r < by_id.size(); ++r) rank[by_id[r]] = r;

  const auto train_rows = row_index(train_emb);
  std::vector<Candidate> pool[2];
  for (std::size_t i = 0; i < ds.size(); ++i) {
    auto it = train_rows.find(ds[i].id);
    if (it == train_rows.end()) {
      throw PreconditionError("no embedding row for training sample '" + ds[i].id + "'");
    }
    const double* row = train_emb.values.data() + it->second * dim;
    const double norm = std::sqrt(kern.dot(row, row, dim));
    // Degenerate rows are never influential.
    if (norm == 0.0) continue;
    pool[ds[i].label].push_back({row, norm, rank[i], i});
  }

  const auto trusted_rows = row_index(trusted_emb);
  std::vector<const double*> query(errors.size());
  std::vector<double> query_norm(errors.size());
  std::vector<std::size_t> by_label[2];
  for (std::size_t e = 0; e < errors.size(); ++e) {
    const ErrorEntry& err = errors.entries[e];
    auto it = trusted_rows.find(err.trusted_id);
    if (it == trusted_rows.end()) {
      throw PreconditionError("no embedding row for trusted sample '" + err.trusted_id + "'");
    }
    if (err.predicted_label != 0 && err.predicted_label != 1) {
      throw PreconditionError("error entry '" + err.trusted_id + "' has a non-binary prediction");
    }
    query[e] = trusted_emb.values.data() + it->second * dim;
    query_norm[e] = std::sqrt(kern.dot(query[e], query[e], dim));
    by_label[err.predicted_label].push_back(e);
  }

  // Blocks of up to four errors sharing a predicted label, so each candidate
  // row is streamed once per block.
  struct Block {
    int label;
    std::size_t count;
    std::size_t err[4];
  };
  std::vector<Block> blocks;
  for (int label = 0; label < 2; ++label) {
    const auto& es = by_label[label];
    for (std::size_t s = 0; s < es.size(); s += 4) {
      Block b{label, std::min<std::size_t>(4, es.size() - s), {}};
      for (std::size_t k = 0; k < 4; ++k) b.err[k] = es[s + std::min(k, b.count - 1)];
      blocks.push_back(b);
    }
  }

  std::vector<std::vector<Entry>> heaps(errors.size());
  auto run_block = [&](const Block& b) {
    const double* q[4];
    for (std::size_t k = 0; k < 4; ++k) q[k] = query[b.err[k]];
    std::vector<Entry>* h[4];
    for (std::size_t k = 0; k < b.count; ++k) {
      h[k] = &heaps[b.err[k]];
      h[k]->reserve(x);
    }
    double dots[4];
    for (const Candidate& c : pool[b.label]) {
      kern.dot4(q, c.row, dim, dots);
      for (std::size_t k = 0; k < b.count; ++k) {
        const double qn = query_norm[b.err[k]];
        const double score = qn == 0.0 ? 0.0 : std::clamp(dots[k] / (qn * c.norm), -1.0, 1.0);
        const Entry cand{score, c.rank, c.ds_index};
        auto& heap = *h[k];
        if (heap.size() < x) {
          heap.push_back(cand);
          std::push_heap(heap.begin(), heap.end(), better);
        } else if (better(cand, heap.front())) {
          std::pop_heap(heap.begin(), heap.end(), better);
          heap.back() = cand;
          std::push_heap(heap.begin(), heap.end(), better);
        }
      }
    }
  };

  unsigned threads = opts.threads == 0 ? std::max(1u, std::thread::hardware_concurrency())
                                       : opts.threads;
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, blocks.size()));
  if (threads <= 1) {
    for (const Block& b : blocks) run_block(b);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> workers;
    workers.reserve(threads);
    for (unsigned t = 0; t < threads; ++t) {
      workers.emplace_back([&] {
        for (std::size_t i = next++; i < blocks.size(); i = next++) run_block(blocks[i]);
      });
    }
    for (auto& w : workers) w.join();
  }

  std::vector<std::string> all;
  for (std::size_t e = 0; e < errors.size(); ++e) {
    auto& heap = heaps[e];
    std::sort(heap.begin(), heap.end(), better);
    auto& list = rep.per_error[errors.entries[e].trusted_id];
    list.reserve(heap.size());
    for (const Entry& en : heap) {
      list.push_back({ds[en.ds_index].id, en.score});
      all.push_back(ds[en.ds_index].id);
    }
  }
  std::sort(all.begin(), all.end());
  all.erase(std::unique(all.begin(), all.end()), all.end());
  rep.union_ids = std::move(all);
  return rep;
}

ordered_json InfluenceReport::to_json() const {
  ordered_json j;
  j["x"] = x;
  ordered_json pe = ordered_json::object();
  for (const auto& [gt, list] : per_error) {
    ordered_json arr = ordered_json::array();
    for (const auto& s : list) arr.push_back(ordered_json::array({s.sample_id, s.score}));
    pe[gt] = std::move(arr);
  }
  j["per_error"] = std::move(pe);
  j["union"] = union_ids;
  return j;
}

InfluenceReport InfluenceReport::from_json(const json& j) {
  InfluenceReport r;
  try {
    r.x = j.at("x").get<std::size_t>();
    for (const auto& [gt, arr] : j.at("per_error").items()) {
      auto& list = r.per_error[gt];
      for (const auto& pair : arr) {
        list.push_back({pair.at(0).get<std::string>(), pair.at(1).get<double>()});
      }
    }
    r.union_ids = j.at("union").get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    throw FormatError(std::string("bad influence report: ") + e.what());
  }
  return r;
}

}  // namespace hscurate::influence
