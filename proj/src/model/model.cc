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
#include <algorithm>
#include <cmath>
#include <numeric>

#include "hscurate/errors.h"
#include "hscurate/hash.h"
#include "hscurate/model.h"
#include "hscurate/rng.h"
#include "hscurate/text.h"

namespace hscurate::model {

using nlohmann::json;
using nlohmann::ordered_json;

std::string_view backend_name(Backend b) {
  return b == Backend::kBuiltin ? "builtin" : "external";
}

Backend parse_backend(std::string_view name) {
  if (name == "builtin") return Backend::kBuiltin;
  if (name == "external") return Backend::kExternal;
  throw PreconditionError("unknown backend '" + std::string(name) + "'");
}

void TrainConfig::validate() const {
  if (epochs < 1) throw PreconditionError("epochs must be >= 1, got " + std::to_string(epochs));
  if (batch_size < 1) {
    throw PreconditionError("batch_size must be >= 1, got " + std::to_string(batch_size));
  }
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw PreconditionError("learning_rate must be > 0");
  }
  if (feature_dim < 1) throw PreconditionError("feature_dim must be >= 1");
}

ordered_json TrainConfig::to_json() const {
  ordered_json j;
  j["epochs"] = epochs;
  j["batch_size"] = batch_size;
  j["learning_rate"] = learning_rate;
  j["seed"] = seed;
  j["feature_dim"] = feature_dim;
  j["options"] = options;
  return j;
}

TrainConfig TrainConfig::from_json(const json& j) {
  TrainConfig c;
  try {
    c.epochs = j.value("epochs", c.epochs);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    c.seed = j.value("seed", c.seed);
    c.feature_dim = j.value("feature_dim", c.feature_dim);
    c.options = j.value("options", c.options);
  } catch (const json::exception& e) {
    throw FormatError(std::string("bad train config: ") + e.what());
  }
  return c;
}

void EmbeddingMatrix::validate() const {
  if (values.size() != ids.size() * dim) {
    throw ProtocolError("embedding matrix has " + std::to_string(values.size()) +
                        " values for " + std::to_string(ids.size()) + " rows of dim " +
                        std::to_string(dim));
  }
  if (zero_rows.size() != ids.size()) {
    throw ProtocolError("embedding matrix zero-row flags do not match the row count");
  }
  for (double v : values) {
    if (!std::isfinite(v)) throw ProtocolError("embedding matrix has a non-finite value");
  }
}

std::string make_fingerprint(Backend backend, const TrainConfig& cfg,
                             std::string_view snapshot_id) {
  std::string buf(backend_name(backend));
  buf += '\n';
  buf += cfg.to_json().dump();
  buf += '\n';
  buf += snapshot_id;
  return sha256_hex(buf).substr(0, 16);
}

void check_trainable(const TrainConfig& cfg, const corpus::DatasetSnapshot& ds) {
  cfg.validate();
  if (ds.empty()) throw PreconditionError("cannot train on an empty snapshot");
  const auto [neg, pos] = ds.class_counts();
  if (neg == 0 || pos == 0) {
    throw PreconditionError("snapshot '" + ds.snapshot_id() +
                            "' contains a single class; training needs both");
  }
}

// ---------------------------------------------------------------------------

SparseVector FeatureHasher::features(std::string_view text) const {
  const std::vector<std::string> toks = text::word_tokens(text);
  std::vector<std::pair<std::uint32_t, double>> raw;
  raw.reserve(toks.size() * 2);
  auto add = [&](const std::string& feature) {
    const std::uint64_t h = fnv1a64(feature);
    const double sign = (mix64(h) & 1ULL) ? -1.0 : 1.0;
    raw.emplace_back(static_cast<std::uint32_t>(h % dim_), sign);
  };
  for (std::size_t i = 0; i < toks.size(); ++i) {
    add("u\x1f" + toks[i]);
    if (i + 1 < toks.size()) add("b\x1f" + toks[i] + " " + toks[i + 1]);
  }
  std::sort(raw.begin(), raw.end());
  SparseVector v;
  for (std::size_t i = 0; i < raw.size();) {
    const std::uint32_t idx = raw[i].first;
    double sum = 0.0;
    for (; i < raw.size() && raw[i].first == idx; ++i) sum += raw[i].second;
    if (sum != 0.0) {
      v.index.push_back(idx);
      v.value.push_back(sum);
    }
  }
  double norm = 0.0;
  for (double x : v.value) norm += x * x;
  norm = std::sqrt(norm);
  for (double& x : v.value) x /= norm;
  return v;
}

namespace {

double sparse_dot(std::span<const double> w, const SparseVector& x) {
  double s = 0.0;
  for (std::size_t k = 0; k < x.index.size(); ++k) s += w[x.index[k]] * x.value[k];
  return s;
}

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// log(1 + e^z) - y z
double cross_entropy(double z, int y) {
  const double softplus = z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
  return softplus - y * z;
}

double l2_from(const TrainConfig& cfg) {
  auto it = cfg.options.find("l2");
  if (it == cfg.options.end()) return 0.0;
  try {
    return std::stod(it->second);
  } catch (const std::exception&) {
    throw PreconditionError("option l2 must be a number, got '" + it->second + "'");
  }
}

// Loss (and optionally gradient) over xs[batch[*]].
double batch_loss(std::span<const double> w, double b, std::span<const SparseVector> xs,
                  std::span<const int> ys, std::span<const std::size_t> batch, double l2,
                  std::vector<double>* grad_w, double* grad_b) {
  const double n = static_cast<double>(batch.size());
  double loss = 0.0;
  double gb = 0.0;
  if (grad_w) grad_w->assign(w.size(), 0.0);
  for (std::size_t i : batch) {
    const double z = sparse_dot(w, xs[i]) + b;
    loss += cross_entropy(z, ys[i]);
    if (grad_w) {
      const double r = (sigmoid(z) - ys[i]) / n;
      for (std::size_t k = 0; k < xs[i].index.size(); ++k) {
        (*grad_w)[xs[i].index[k]] += r * xs[i].value[k];
      }
      gb += r;
    }
  }
  loss = batch.empty() ? 0.0 : loss / n;
  if (l2 != 0.0) {
    double sq = 0.0;
    for (std::size_t k = 0; k < w.size(); ++k) {
      sq += w[k] * w[k];
      if (grad_w) (*grad_w)[k] += l2 * w[k];
    }
    loss += 0.5 * l2 * sq;
  }
  if (grad_b) *grad_b = gb;
  return loss;
}

}  // namespace

LossAndGradient logistic_loss(std::span<const double> weights, double bias,
                              std::span<const SparseVector> xs, std::span<const int> ys,
                              double l2) {
  if (xs.size() != ys.size()) throw PreconditionError("feature/label count mismatch");
  std::vector<std::size_t> all(xs.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  LossAndGradient out;
  out.loss = batch_loss(weights, bias, xs, ys, all, l2, &out.grad_weights, &out.grad_bias);
  return out;
}

BuiltinModel::BuiltinModel(TrainConfig cfg, std::string fingerprint,
                           std::vector<double> weights, double bias,
                           std::vector<double> epoch_losses)
    : cfg_(std::move(cfg)),
      fingerprint_(std::move(fingerprint)),
      hasher_(static_cast<std::uint32_t>(cfg_.feature_dim)),
      weights_(std::move(weights)),
      bias_(bias),
      epoch_losses_(std::move(epoch_losses)) {
  if (weights_.size() != static_cast<std::size_t>(cfg_.feature_dim)) {
    throw PreconditionError("weight vector does not match feature_dim");
  }
}

double BuiltinModel::score(std::string_view text) const {
  return sigmoid(sparse_dot(weights_, hasher_.features(text)) + bias_);
}

std::vector<Prediction> BuiltinModel::predict(std::span<const Sample> samples) const {
  std::vector<Prediction> out;
  out.reserve(samples.size());
  for (const Sample& s : samples) {
    const double p = score(s.text);
    out.push_back({s.id, label_for_score(p), p});
  }
  return out;
}

EmbeddingMatrix BuiltinModel::embed(std::span<const Sample> samples) const {
  EmbeddingMatrix m;
  m.dim = hasher_.dim();
  m.ids.reserve(samples.size());
  m.values.assign(samples.size() * m.dim, 0.0);
  m.zero_rows.assign(samples.size(), false);
  for (std::size_t r = 0; r < samples.size(); ++r) {
    m.ids.push_back(samples[r].id);
    const SparseVector v = hasher_.features(samples[r].text);
    m.zero_rows[r] = v.empty();
    for (std::size_t k = 0; k < v.index.size(); ++k) {
      m.values[r * m.dim + v.index[k]] = v.value[k];
    }
  }
  return m;
}

ordered_json BuiltinModel::to_json() const {
  ordered_json j;
  j["backend"] = "builtin";
  j["fingerprint"] = fingerprint_;
  j["config"] = cfg_.to_json();
  j["bias"] = bias_;
  j["weights"] = weights_;
  j["epoch_losses"] = epoch_losses_;
  return j;
}

std::unique_ptr<BuiltinModel> BuiltinModel::from_json(const json& j) {
  try {
    if (j.at("backend").get<std::string>() != "builtin") {
      throw FormatError("model file is not a builtin model");
    }
    return std::make_unique<BuiltinModel>(
        TrainConfig::from_json(j.at("config")), j.at("fingerprint").get<std::string>(),
        j.at("weights").get<std::vector<double>>(), j.at("bias").get<double>(),
        j.value("epoch_losses", std::vector<double>{}));
  } catch (const json::exception& e) {
    throw FormatError(std::string("bad model file: ") + e.what());
  }
}

std::unique_ptr<ClassifierModel> BuiltinTrainer::train(const TrainConfig& cfg,
                                                       const corpus::DatasetSnapshot& ds,
                                                       const TrainContext& ctx) {
  check_trainable(cfg, ds);
  const double l2 = l2_from(cfg);
  const FeatureHasher hasher(static_cast<std::uint32_t>(cfg.feature_dim));
  std::vector<SparseVector> xs;
  std::vector<int> ys;
  xs.reserve(ds.size());
  ys.reserve(ds.size());
  for (const Sample& s : ds.samples()) {
    xs.push_back(hasher.features(s.text));
    ys.push_back(s.label);
  }
  const std::string fp = make_fingerprint(Backend::kBuiltin, cfg, ds.snapshot_id());

  std::vector<double> w(static_cast<std::size_t>(cfg.feature_dim), 0.0);
  double b = 0.0;
  std::vector<std::size_t> order(xs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<double> losses;
  losses.push_back(batch_loss(w, b, xs, ys, order, l2, nullptr, nullptr));

  std::vector<double> grad;
  double grad_b = 0.0;
  const std::size_t bs = static_cast<std::size_t>(cfg.batch_size);
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    CounterRng rng(CounterRng::derive(cfg.seed, static_cast<std::uint64_t>(epoch)));
    rng.shuffle(order);
    for (std::size_t start = 0; start < order.size(); start += bs) {
      const std::size_t end = std::min(order.size(), start + bs);
      const std::span<const std::size_t> batch(order.data() + start, end - start);
      batch_loss(w, b, xs, ys, batch, l2, &grad, &grad_b);
      for (std::size_t k = 0; k < w.size(); ++k) w[k] -= cfg.learning_rate * grad[k];
      b -= cfg.learning_rate * grad_b;
    }
    std::vector<std::size_t> all(xs.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    losses.push_back(batch_loss(w, b, xs, ys, all, l2, nullptr, nullptr));
    if (ctx.on_epoch) {
      const BuiltinModel checkpoint(cfg, fp, w, b);
      ctx.on_epoch(EpochCheckpoint{epoch, losses.back(), checkpoint});
    }
  }
  return std::make_unique<BuiltinModel>(cfg, fp, std::move(w), b, std::move(losses));
}

}  // namespace hscurate::model
