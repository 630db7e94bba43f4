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
#ifndef HSCURATE_MODEL_H_
#define HSCURATE_MODEL_H_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hscurate/corpus.h"
#include "json.hpp"

namespace hscurate::model {

using corpus::Sample;

enum class Backend { kBuiltin, kExternal };

std::string_view backend_name(Backend b);
Backend parse_backend(std::string_view name);

struct TrainConfig {
  int epochs = 20;
  int batch_size = 16;
  double learning_rate = 0.5;
  std::uint64_t seed = 0;
  int feature_dim = 1024;  // builtin only
  // Backend-specific knobs. The builtin backend reads "l2" (ridge penalty,
  // default 0).
  std::map<std::string, std::string> options;

  // Throws PreconditionError on epochs < 1, batch_size < 1,
  // learning_rate <= 0 or feature_dim < 1.
  void validate() const;
  nlohmann::ordered_json to_json() const;
  static TrainConfig from_json(const nlohmann::json& j);
};

// Dense row-major embeddings, one row per sample id.
struct EmbeddingMatrix {
  std::vector<std::string> ids;
  std::size_t dim = 0;
  std::vector<double> values;
  // Rows that are all zeros (e.g. texts without any hashed feature).
  std::vector<bool> zero_rows;

  std::size_t rows() const { return ids.size(); }
  std::span<const double> row(std::size_t i) const {
    return {values.data() + i * dim, dim};
  }
  // Throws ProtocolError on a shape mismatch or a non-finite value.
  void validate() const;
};

struct Prediction {
  std::string sample_id;
  int predicted_label = 0;
  double score = 0.0;

  bool operator==(const Prediction&) const = default;
};

inline constexpr double kDecisionThreshold = 0.5;

inline int label_for_score(double score) { return score >= kDecisionThreshold ? 1 : 0; }

// A trained classifier that can also embed text. Implementations are
// immutable after training and safe to query concurrently.
class ClassifierModel {
 public:
  virtual ~ClassifierModel() = default;

  virtual Backend backend() const = 0;
  virtual const TrainConfig& training_config() const = 0;
  // Content hash binding the backend, training config and snapshot id.
  virtual const std::string& fingerprint() const = 0;

  // One prediction per input, in input order.
  virtual std::vector<Prediction> predict(std::span<const Sample> samples) const = 0;
  virtual EmbeddingMatrix embed(std::span<const Sample> samples) const = 0;
};

std::string make_fingerprint(Backend backend, const TrainConfig& cfg,
                             std::string_view snapshot_id);

struct EpochCheckpoint {
  int epoch = 0;  // 1-based
  double train_loss = 0.0;
  const ClassifierModel& model;
};

struct TrainContext {
  // Where the snapshot is persisted; the external backend needs it.
  std::optional<std::filesystem::path> snapshot_path;
  // Called after every epoch by backends that expose per-epoch checkpoints.
  std::function<void(const EpochCheckpoint&)> on_epoch;
};

class Trainer {
 public:
  virtual ~Trainer() = default;
  virtual Backend backend() const = 0;
  // Throws PreconditionError if the snapshot is empty or single-class.
  virtual std::unique_ptr<ClassifierModel> train(const TrainConfig& cfg,
                                                 const corpus::DatasetSnapshot& ds,
                                                 const TrainContext& ctx = {}) = 0;
};

// Shared precondition check for all backends.
void check_trainable(const TrainConfig& cfg, const corpus::DatasetSnapshot& ds);

// ---------------------------------------------------------------------------
// Builtin backend: signed feature hashing + logistic regression.

struct SparseVector {
  std::vector<std::uint32_t> index;  // strictly increasing
  std::vector<double> value;

  bool empty() const { return index.empty(); }
};

// Word unigrams and adjacent-word bigrams hashed into dim buckets with a
// hash-derived sign, then L2-normalized. A text with no surviving feature
// maps to the empty (zero) vector.
class FeatureHasher {
 public:
  explicit FeatureHasher(std::uint32_t dim) : dim_(dim) {}
  std::uint32_t dim() const { return dim_; }
  SparseVector features(std::string_view text) const;

 private:
  std::uint32_t dim_;
};

struct LossAndGradient {
  double loss = 0.0;
  std::vector<double> grad_weights;
  double grad_bias = 0.0;
};

// Mean binary cross-entropy of sigmoid(<w, x> + b) over the batch plus
// (l2 / 2) * |w|^2, with its exact gradient.
LossAndGradient logistic_loss(std::span<const double> weights, double bias,
                              std::span<const SparseVector> xs,
                              std::span<const int> ys, double l2);

class BuiltinModel final : public ClassifierModel {
 public:
  BuiltinModel(TrainConfig cfg, std::string fingerprint, std::vector<double> weights,
               double bias, std::vector<double> epoch_losses = {});

  Backend backend() const override { return Backend::kBuiltin; }
  const TrainConfig& training_config() const override { return cfg_; }
  const std::string& fingerprint() const override { return fingerprint_; }
  std::vector<Prediction> predict(std::span<const Sample> samples) const override;
  EmbeddingMatrix embed(std::span<const Sample> samples) const override;

  double score(std::string_view text) const;
  std::span<const double> weights() const { return weights_; }
  double bias() const { return bias_; }
  // Full-corpus training loss after each epoch; element 0 is the loss of the
  // zero-initialized model before training.
  std::span<const double> epoch_losses() const { return epoch_losses_; }

  nlohmann::ordered_json to_json() const;
  static std::unique_ptr<BuiltinModel> from_json(const nlohmann::json& j);

 private:
  TrainConfig cfg_;
  std::string fingerprint_;
  FeatureHasher hasher_;
  std::vector<double> weights_;
  double bias_;
  std::vector<double> epoch_losses_;
};

// Mini-batch gradient descent from zero weights. Each epoch visits the
// samples in an order drawn from CounterRng(derive(seed, epoch)).
class BuiltinTrainer final : public Trainer {
 public:
  Backend backend() const override { return Backend::kBuiltin; }
  std::unique_ptr<ClassifierModel> train(const TrainConfig& cfg,
                                         const corpus::DatasetSnapshot& ds,
                                         const TrainContext& ctx = {}) override;
};

}  // namespace hscurate::model

#endif  // HSCURATE_MODEL_H_
