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
#include "hscurate/adapter.h"

#include <fcntl.h>
#include <netdb.h>
#include <poll.h>
#include <signal.h>
#include <spawn.h>
#include <sys/socket.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cmath>
#include <cstring>
#include <thread>

#include "hscurate/errors.h"
#include "hscurate/text.h"

extern char** environ;

namespace hscurate::model {

using nlohmann::json;

namespace {

void ignore_sigpipe() {
  static const bool once = [] {
    ::signal(SIGPIPE, SIG_IGN);
    return true;
  }();
  (void)once;
}

void write_all(int fd, const std::string& data, bool socket) {
  std::size_t off = 0;
  while (off < data.size()) {
    const ssize_t n = socket ? ::send(fd, data.data() + off, data.size() - off, MSG_NOSIGNAL)
                             : ::write(fd, data.data() + off, data.size() - off);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw TransportError(std::string("adapter write failed: ") + std::strerror(errno));
    }
    off += static_cast<std::size_t>(n);
  }
}

std::string read_line_from(int fd, std::string& buffer, std::chrono::milliseconds timeout) {
  while (true) {
    if (auto nl = buffer.find('\n'); nl != std::string::npos) {
      std::string line = buffer.substr(0, nl);
      buffer.erase(0, nl + 1);
      return line;
    }
    pollfd p{fd, POLLIN, 0};
    const int wait_ms = timeout.count() > 0 ? static_cast<int>(timeout.count()) : -1;
    const int r = ::poll(&p, 1, wait_ms);
    if (r < 0) {
      if (errno == EINTR) continue;
      throw TransportError(std::string("adapter poll failed: ") + std::strerror(errno));
    }
    if (r == 0) throw TransportError("adapter did not answer within the timeout");
    char chunk[65536];
    const ssize_t n = ::read(fd, chunk, sizeof(chunk));
    if (n < 0) {
      if (errno == EINTR) continue;
      throw TransportError(std::string("adapter read failed: ") + std::strerror(errno));
    }
    if (n == 0) throw TransportError("adapter closed the channel");
    buffer.append(chunk, static_cast<std::size_t>(n));
  }
}

}  // namespace

json AdapterChannel::call(const json& request) {
  std::lock_guard<std::mutex> lock(mu_);
  write_line(request.dump(-1, ' ', false, json::error_handler_t::replace) + "\n");
  const std::string line = read_line();
  json reply;
  try {
    reply = json::parse(line);
  } catch (const json::parse_error& e) {
    throw ProtocolError(std::string("adapter reply is not JSON: ") + e.what());
  }
  if (!reply.is_object()) throw ProtocolError("adapter reply is not a JSON object");
  if (auto it = reply.find("error"); it != reply.end()) {
    throw ProtocolError("adapter error: " +
                        (it->is_string() ? it->get<std::string>() : it->dump()));
  }
  return reply;
}

StdioChannel::StdioChannel(std::vector<std::string> argv, std::chrono::milliseconds timeout)
    : timeout_(timeout) {
  if (argv.empty()) throw PreconditionError("empty adapter command");
  ignore_sigpipe();
  int in[2], out[2];
  if (::pipe2(in, O_CLOEXEC) != 0) throw TransportError("pipe() failed");
  if (::pipe2(out, O_CLOEXEC) != 0) {
    ::close(in[0]);
    ::close(in[1]);
    throw TransportError("pipe() failed");
  }
  posix_spawn_file_actions_t actions;
  posix_spawn_file_actions_init(&actions);
  posix_spawn_file_actions_adddup2(&actions, in[0], STDIN_FILENO);
  posix_spawn_file_actions_adddup2(&actions, out[1], STDOUT_FILENO);
  std::vector<char*> cargv;
  for (auto& a : argv) cargv.push_back(a.data());
  cargv.push_back(nullptr);
  pid_t pid = -1;
  const int rc = ::posix_spawnp(&pid, cargv[0], &actions, nullptr, cargv.data(), environ);
  posix_spawn_file_actions_destroy(&actions);
  ::close(in[0]);
  ::close(out[1]);
  if (rc != 0) {
    ::close(in[1]);
    ::close(out[0]);
    throw TransportError("cannot start adapter '" + argv[0] + "': " + std::strerror(rc));
  }
  pid_ = pid;
  to_child_ = in[1];
  from_child_ = out[0];
}

StdioChannel::~StdioChannel() {
  if (to_child_ >= 0) ::close(to_child_);
  if (from_child_ >= 0) ::close(from_child_);
  if (pid_ <= 0) return;
  for (int i = 0; i < 50; ++i) {
    if (::waitpid(pid_, nullptr, WNOHANG) == pid_) return;
    std::this_thread::sleep_for(std::chrono::milliseconds(10));
  }
  ::kill(pid_, SIGTERM);
  ::waitpid(pid_, nullptr, 0);
}

void StdioChannel::write_line(const std::string& line) { write_all(to_child_, line, false); }

std::string StdioChannel::read_line() { return read_line_from(from_child_, buffer_, timeout_); }

TcpChannel::TcpChannel(const std::string& host, std::uint16_t port,
                       std::chrono::milliseconds timeout)
    : timeout_(timeout) {
  ignore_sigpipe();
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  const std::string port_str = std::to_string(port);
  if (int rc = ::getaddrinfo(host.c_str(), port_str.c_str(), &hints, &res); rc != 0) {
    throw TransportError("cannot resolve adapter host '" + host + "': " + gai_strerror(rc));
  }
  std::string last_error = "no address";
  for (addrinfo* ai = res; ai; ai = ai->ai_next) {
    const int fd = ::socket(ai->ai_family, ai->ai_socktype | SOCK_CLOEXEC, ai->ai_protocol);
    if (fd < 0) continue;
    if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) {
      fd_ = fd;
      break;
    }
    last_error = std::strerror(errno);
    ::close(fd);
  }
  ::freeaddrinfo(res);
  if (fd_ < 0) {
    throw TransportError("cannot connect to adapter at " + host + ":" + port_str + ": " +
                         last_error);
  }
}

TcpChannel::~TcpChannel() {
  if (fd_ >= 0) ::close(fd_);
}

void TcpChannel::write_line(const std::string& line) { write_all(fd_, line, true); }

std::string TcpChannel::read_line() { return read_line_from(fd_, buffer_, timeout_); }

std::shared_ptr<AdapterChannel> connect_adapter(const std::string& spec,
                                                std::chrono::milliseconds timeout) {
  if (spec.rfind("stdio:", 0) == 0) {
    std::vector<std::string> argv;
    for (auto tok : text::split_whitespace(std::string_view(spec).substr(6))) {
      argv.emplace_back(tok);
    }
    return std::make_shared<StdioChannel>(std::move(argv), timeout);
  }
  if (spec.rfind("tcp:", 0) == 0) {
    const std::string rest = spec.substr(4);
    const auto colon = rest.rfind(':');
    if (colon == std::string::npos) {
      throw PreconditionError("adapter spec '" + spec + "' lacks a port");
    }
    int port = 0;
    try {
      port = std::stoi(rest.substr(colon + 1));
    } catch (const std::exception&) {
      throw PreconditionError("bad port in adapter spec '" + spec + "'");
    }
    if (port <= 0 || port > 65535) {
      throw PreconditionError("bad port in adapter spec '" + spec + "'");
    }
    return std::make_shared<TcpChannel>(rest.substr(0, colon), static_cast<std::uint16_t>(port),
                                        timeout);
  }
  throw PreconditionError("adapter spec must start with stdio: or tcp:, got '" + spec + "'");
}

// ---------------------------------------------------------------------------

ExternalTrainer::ExternalTrainer(std::shared_ptr<AdapterChannel> channel)
    : channel_(std::move(channel)) {
  const json reply = channel_->call({{"op", "hello"}});
  try {
    info_.name = reply.at("name").get<std::string>();
    info_.embedding_dim = reply.at("embedding_dim").get<std::size_t>();
  } catch (const json::exception& e) {
    throw ProtocolError(std::string("bad hello reply: ") + e.what());
  }
}

std::unique_ptr<ClassifierModel> ExternalTrainer::train(const TrainConfig& cfg,
                                                        const corpus::DatasetSnapshot& ds,
                                                        const TrainContext& ctx) {
  check_trainable(cfg, ds);
  if (!ctx.snapshot_path) {
    throw PreconditionError("the external backend needs the snapshot persisted on disk");
  }
  json req;
  req["op"] = "train";
  req["snapshot_path"] = ctx.snapshot_path->string();
  req["config"] = cfg.to_json();
  const json reply = channel_->call(req);
  std::string model_id;
  try {
    model_id = reply.at("model_id").get<std::string>();
  } catch (const json::exception& e) {
    throw ProtocolError(std::string("bad train reply: ") + e.what());
  }
  return std::make_unique<ExternalModel>(channel_, info_, std::move(model_id), cfg,
                                         make_fingerprint(Backend::kExternal, cfg,
                                                          ds.snapshot_id()));
}

ExternalModel::ExternalModel(std::shared_ptr<AdapterChannel> channel, AdapterInfo info,
                             std::string model_id, TrainConfig cfg, std::string fingerprint)
    : channel_(std::move(channel)),
      info_(std::move(info)),
      model_id_(std::move(model_id)),
      cfg_(std::move(cfg)),
      fingerprint_(std::move(fingerprint)) {}

namespace {

json texts_of(std::span<const Sample> batch) {
  json texts = json::array();
  for (const Sample& s : batch) texts.push_back(s.text);
  return texts;
}

}  // namespace

std::vector<Prediction> ExternalModel::predict(std::span<const Sample> samples) const {
  std::vector<Prediction> out;
  out.reserve(samples.size());
  for (std::size_t start = 0; start < samples.size(); start += kBatch) {
    const auto batch = samples.subspan(start, std::min(kBatch, samples.size() - start));
    const json reply = channel_->call(
        {{"op", "predict"}, {"model_id", model_id_}, {"texts", texts_of(batch)}});
    std::vector<int> labels;
    std::vector<double> scores;
    try {
      labels = reply.at("labels").get<std::vector<int>>();
      scores = reply.at("scores").get<std::vector<double>>();
    } catch (const json::exception& e) {
      throw ProtocolError(std::string("bad predict reply: ") + e.what());
    }
    if (labels.size() != batch.size() || scores.size() != batch.size()) {
      throw ProtocolError("predict reply has " + std::to_string(labels.size()) + " labels and " +
                          std::to_string(scores.size()) + " scores for " +
                          std::to_string(batch.size()) + " texts");
    }
    for (std::size_t i = 0; i < batch.size(); ++i) {
      if (!std::isfinite(scores[i]) || scores[i] < 0.0 || scores[i] > 1.0) {
        throw ProtocolError("predict score outside [0,1]");
      }
      if (labels[i] != label_for_score(scores[i])) {
        throw ProtocolError("predict label disagrees with its score for '" + batch[i].id + "'");
      }
      out.push_back({batch[i].id, labels[i], scores[i]});
    }
  }
  return out;
}

EmbeddingMatrix ExternalModel::embed(std::span<const Sample> samples) const {
  EmbeddingMatrix m;
  m.dim = info_.embedding_dim;
  m.ids.reserve(samples.size());
  m.values.reserve(samples.size() * m.dim);
  for (std::size_t start = 0; start < samples.size(); start += kBatch) {
    const auto batch = samples.subspan(start, std::min(kBatch, samples.size() - start));
    const json reply = channel_->call(
        {{"op", "embed"}, {"model_id", model_id_}, {"texts", texts_of(batch)}});
    std::vector<std::vector<double>> vectors;
    try {
      vectors = reply.at("vectors").get<std::vector<std::vector<double>>>();
    } catch (const json::exception& e) {
      throw ProtocolError(std::string("bad embed reply: ") + e.what());
    }
    if (vectors.size() != batch.size()) {
      throw ProtocolError("embed reply has " + std::to_string(vectors.size()) +
                          " vectors for " + std::to_string(batch.size()) + " texts");
    }
    for (std::size_t i = 0; i < batch.size(); ++i) {
      if (vectors[i].size() != m.dim) {
        throw ProtocolError("embed vector for '" + batch[i].id + "' has dimension " +
                            std::to_string(vectors[i].size()) + ", expected " +
                            std::to_string(m.dim));
      }
      bool zero = true;
      for (double v : vectors[i]) {
        if (!std::isfinite(v)) throw ProtocolError("embed vector has a non-finite value");
        zero = zero && v == 0.0;
      }
      m.ids.push_back(batch[i].id);
      m.values.insert(m.values.end(), vectors[i].begin(), vectors[i].end());
      m.zero_rows.push_back(zero);
    }
  }
  return m;
}

}  // namespace hscurate::model
