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
#ifndef HSCURATE_ADAPTER_H_
#define HSCURATE_ADAPTER_H_

#include <chrono>
#include <cstdint>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "hscurate/model.h"
#include "json.hpp"

namespace hscurate::model {

// A bidirectional newline-delimited JSON channel to an external model
// adapter. One request is in flight per channel at a time.
class AdapterChannel {
 public:
  virtual ~AdapterChannel() = default;

  // Sends one request and returns the response object. Throws TransportError
  // if the peer is gone or times out, ProtocolError if the reply is not a JSON
  // object or carries {"error": ...}.
  nlohmann::json call(const nlohmann::json& request);

 protected:
  virtual void write_line(const std::string& line) = 0;
  virtual std::string read_line() = 0;

 private:
  std::mutex mu_;
};

// Child process speaking the protocol on its stdin/stdout. The child is
// terminated when the channel is destroyed.
class StdioChannel final : public AdapterChannel {
 public:
  StdioChannel(std::vector<std::string> argv, std::chrono::milliseconds timeout);
  ~StdioChannel() override;
  StdioChannel(const StdioChannel&) = delete;
  StdioChannel& operator=(const StdioChannel&) = delete;

 protected:
  void write_line(const std::string& line) override;
  std::string read_line() override;

 private:
  int pid_ = -1;
  int to_child_ = -1;
  int from_child_ = -1;
  std::chrono::milliseconds timeout_;
  std::string buffer_;
};

class TcpChannel final : public AdapterChannel {
 public:
  TcpChannel(const std::string& host, std::uint16_t port,
             std::chrono::milliseconds timeout);
  ~TcpChannel() override;
  TcpChannel(const TcpChannel&) = delete;
  TcpChannel& operator=(const TcpChannel&) = delete;

 protected:
  void write_line(const std::string& line) override;
  std::string read_line() override;

 private:
  int fd_ = -1;
  std::chrono::milliseconds timeout_;
  std::string buffer_;
};

// "stdio:<command line>" (whitespace-split, no shell) or "tcp:<host>:<port>".
std::shared_ptr<AdapterChannel> connect_adapter(const std::string& spec,
                                                std::chrono::milliseconds timeout);

struct AdapterInfo {
  std::string name;
  std::size_t embedding_dim = 0;
};

class ExternalTrainer final : public Trainer {
 public:
  explicit ExternalTrainer(std::shared_ptr<AdapterChannel> channel);

  Backend backend() const override { return Backend::kExternal; }
  // Requires ctx.snapshot_path.
  std::unique_ptr<ClassifierModel> train(const TrainConfig& cfg,
                                         const corpus::DatasetSnapshot& ds,
                                         const TrainContext& ctx = {}) override;

  // Result of the {"op":"hello"} handshake done in the constructor.
  const AdapterInfo& info() const { return info_; }

 private:
  std::shared_ptr<AdapterChannel> channel_;
  AdapterInfo info_;
};

// Model living inside the adapter process, addressed by model_id.
class ExternalModel final : public ClassifierModel {
 public:
  ExternalModel(std::shared_ptr<AdapterChannel> channel, AdapterInfo info,
                std::string model_id, TrainConfig cfg, std::string fingerprint);

  Backend backend() const override { return Backend::kExternal; }
  const TrainConfig& training_config() const override { return cfg_; }
  const std::string& fingerprint() const override { return fingerprint_; }
  const std::string& model_id() const { return model_id_; }

  std::vector<Prediction> predict(std::span<const Sample> samples) const override;
  // Vectors are returned verbatim; a batch with inconsistent dimensions is a
  // ProtocolError.
  EmbeddingMatrix embed(std::span<const Sample> samples) const override;

  static constexpr std::size_t kBatch = 256;

 private:
  std::shared_ptr<AdapterChannel> channel_;
  AdapterInfo info_;
  std::string model_id_;
  TrainConfig cfg_;
  std::string fingerprint_;
};

}  // namespace hscurate::model

#endif  // HSCURATE_ADAPTER_H_
