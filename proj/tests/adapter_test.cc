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

#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>

#include "hscurate/adapter.h"
#include "hscurate/errors.h"
#include "test_util.h"

namespace hscurate::model {
namespace {

using namespace std::chrono_literals;
using hscurate::testing::sample;
using hscurate::testing::TempDir;

corpus::DatasetSnapshot toy() {
  std::vector<corpus::Sample> s;
  for (int i = 0; i < 8; ++i) {
    s.push_back(sample("p" + std::to_string(i), "vile scum rats " + std::to_string(i), 1));
    s.push_back(sample("n" + std::to_string(i), "sunny garden tea " + std::to_string(i), 0));
  }
  return corpus::DatasetSnapshot::create(std::move(s));
}

TrainConfig cfg() {
  TrainConfig c;
  c.epochs = 5;
  c.batch_size = 4;
  c.seed = 2;
  return c;
}

std::string stdio_spec(const std::string& extra = "") {
  return std::string("stdio:") + HSC_FAKE_ADAPTER + (extra.empty() ? "" : " " + extra);
}

// Trains through the channel and checks predictions and embeddings against
// the in-process builtin model the fake adapter wraps.
void round_trip(std::shared_ptr<AdapterChannel> ch) {
  TempDir dir;
  const auto ds = toy();
  corpus::write_snapshot(ds, dir.path() / "snap");
  ExternalTrainer trainer(ch);
  EXPECT_EQ(trainer.info().name, "fake-adapter");
  EXPECT_EQ(trainer.info().embedding_dim, 64u);

  TrainContext ctx;
  ctx.snapshot_path = dir.path() / "snap";
  const auto m = trainer.train(cfg(), ds, ctx);
  EXPECT_EQ(m->backend(), Backend::kExternal);
  EXPECT_EQ(m->fingerprint(), make_fingerprint(Backend::kExternal, cfg(), ds.snapshot_id()));

  TrainConfig local = cfg();
  local.feature_dim = 64;
  const auto ref = BuiltinTrainer().train(local, ds);

  const auto preds = m->predict(ds.samples());
  const auto want = ref->predict(ds.samples());
  ASSERT_EQ(preds.size(), want.size());
  for (std::size_t i = 0; i < preds.size(); ++i) {
    EXPECT_EQ(preds[i].sample_id, ds[i].id);
    EXPECT_EQ(preds[i].predicted_label, want[i].predicted_label);
    EXPECT_NEAR(preds[i].score, want[i].score, 1e-12);
  }
  const auto e = m->embed(ds.samples());
  const auto we = ref->embed(ds.samples());
  EXPECT_EQ(e.dim, 64u);
  EXPECT_EQ(e.ids, we.ids);
  ASSERT_EQ(e.values.size(), we.values.size());
  for (std::size_t i = 0; i < e.values.size(); ++i) EXPECT_NEAR(e.values[i], we.values[i], 1e-12);
  EXPECT_NO_THROW(e.validate());
}

TEST(Adapter, StdioRoundTrip) { round_trip(connect_adapter(stdio_spec(), 5000ms)); }

TEST(Adapter, TcpRoundTrip) {
  const std::string cmd = std::string(HSC_FAKE_ADAPTER) + " --listen 0";
  FILE* p = ::popen(cmd.c_str(), "r");
  ASSERT_NE(p, nullptr);
  int port = 0;
  ASSERT_EQ(std::fscanf(p, "port %d", &port), 1);
  {
    round_trip(connect_adapter("tcp:127.0.0.1:" + std::to_string(port), 5000ms));
  }
  EXPECT_EQ(::pclose(p), 0);
}

TEST(Adapter, BatchesLargeRequests) {
  std::vector<corpus::Sample> s;
  for (std::size_t i = 0; i < ExternalModel::kBatch * 2 + 3; ++i) {
    s.push_back(sample("q" + std::to_string(i), i % 2 ? "vile scum" : "sunny tea", i % 2));
  }
  TempDir dir;
  const auto ds = toy();
  corpus::write_snapshot(ds, dir.path() / "snap");
  ExternalTrainer trainer(connect_adapter(stdio_spec(), 5000ms));
  TrainContext ctx;
  ctx.snapshot_path = dir.path() / "snap";
  const auto m = trainer.train(cfg(), ds, ctx);
  const auto preds = m->predict(s);
  ASSERT_EQ(preds.size(), s.size());
  EXPECT_EQ(preds.back().sample_id, s.back().id);
  EXPECT_EQ(m->embed(s).rows(), s.size());
}

TEST(Adapter, UnknownModelIsProtocolError) {
  auto ch = connect_adapter(stdio_spec(), 5000ms);
  ExternalModel m(ch, {"fake-adapter", 64}, "nope", cfg(), "fp");
  const std::vector<corpus::Sample> s = {sample("a", "x", 0)};
  try {
    m.predict(s);
    FAIL();
  } catch (const ProtocolError& e) {
    EXPECT_NE(std::string(e.what()).find("no such model_id"), std::string::npos);
  }
}

TEST(Adapter, DimensionMismatchIsProtocolError) {
  TempDir dir;
  const auto ds = toy();
  corpus::write_snapshot(ds, dir.path() / "snap");
  ExternalTrainer trainer(connect_adapter(stdio_spec("--bad-dim"), 5000ms));
  TrainContext ctx;
  ctx.snapshot_path = dir.path() / "snap";
  const auto m = trainer.train(cfg(), ds, ctx);
  EXPECT_THROW(m->embed(ds.samples()), ProtocolError);
}

TEST(Adapter, GarbageReplyIsProtocolError) {
  TempDir dir;
  const auto ds = toy();
  corpus::write_snapshot(ds, dir.path() / "snap");
  ExternalTrainer trainer(connect_adapter(stdio_spec("--garbage"), 5000ms));
  TrainContext ctx;
  ctx.snapshot_path = dir.path() / "snap";
  const auto m = trainer.train(cfg(), ds, ctx);
  EXPECT_THROW(m->predict(ds.samples()), ProtocolError);
}

TEST(Adapter, TrainNeedsPersistedSnapshot) {
  ExternalTrainer trainer(connect_adapter(stdio_spec(), 5000ms));
  EXPECT_THROW(trainer.train(cfg(), toy()), PreconditionError);
}

TEST(Adapter, TransportFailures) {
  EXPECT_THROW(connect_adapter("stdio:/nonexistent/adapter", 1000ms), TransportError);
  EXPECT_THROW(ExternalTrainer(connect_adapter("stdio:true", 1000ms)), TransportError);
  EXPECT_THROW(ExternalTrainer(connect_adapter("stdio:sleep 5", 200ms)), TransportError);
  // Port 1 on loopback is closed.
  EXPECT_THROW(connect_adapter("tcp:127.0.0.1:1", 1000ms), TransportError);
}

TEST(Adapter, SpecParsing) {
  EXPECT_THROW(connect_adapter("http://x", 100ms), PreconditionError);
  EXPECT_THROW(connect_adapter("tcp:localhost", 100ms), PreconditionError);
  EXPECT_THROW(connect_adapter("tcp:localhost:0", 100ms), PreconditionError);
  EXPECT_THROW(connect_adapter("stdio:", 100ms), PreconditionError);
}

}  // namespace
}  // namespace hscurate::model
