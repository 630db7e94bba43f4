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
#include "hscurate/pipeline.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <memory>

#include "hscurate/errors.h"
#include "hscurate/hash.h"
#include "hscurate/influence.h"
#include "hscurate/log.h"
#include "hscurate/rng.h"

namespace hscurate::pipeline {

namespace fs = std::filesystem;
using corpus::DatasetSnapshot;
using nlohmann::json;
using nlohmann::ordered_json;

std::string_view strategy_name(Strategy s) {
  switch (s) {
    case Strategy::kDrop: return "drop";
    case Strategy::kReannotate: return "reannotate";
    case Strategy::kReannotateAugment: return "reannotate-augment";
  }
  return "?";
}

Strategy parse_strategy(std::string_view name) {
  if (name == "drop") return Strategy::kDrop;
  if (name == "reannotate") return Strategy::kReannotate;
  if (name == "reannotate-augment" || name == "reannotate_plus_augment") {
    return Strategy::kReannotateAugment;
  }
  throw PreconditionError("unknown strategy '" + std::string(name) + "'");
}

std::string_view stop_rule_name(StopRule r) {
  return r == StopRule::kFixedLoops ? "fixed_loops" : "tsd_accuracy_plateau";
}

StopRule parse_stop_rule(std::string_view name) {
  if (name == "fixed_loops" || name == "fixed") return StopRule::kFixedLoops;
  if (name == "tsd_accuracy_plateau" || name == "plateau") return StopRule::kPlateau;
  throw PreconditionError("unknown stop rule '" + std::string(name) + "'");
}

std::string_view criterion_name(SelectCriterion c) {
  return c == SelectCriterion::kLast ? "last" : "max_tsd_accuracy";
}

SelectCriterion parse_criterion(std::string_view name) {
  if (name == "last") return SelectCriterion::kLast;
  if (name == "max_tsd_accuracy") return SelectCriterion::kMaxTsdAccuracy;
  throw PreconditionError("unknown selection criterion '" + std::string(name) + "'");
}

void CurationConfig::validate() const {
  if (top_x < 1) throw PreconditionError("top_x must be >= 1");
  if (max_loops < 1) throw PreconditionError("max_loops must be >= 1");
  if (backend == model::Backend::kExternal && adapter.empty()) {
    throw PreconditionError("the external backend needs an adapter");
  }
  train.validate();
}

namespace {

ordered_json oracle_json(const oracle::OracleConfig& o) {
  ordered_json j;
  j["kind"] = oracle::kind_name(o.kind);
  j["endpoint"] = o.endpoint;
  j["model_name"] = o.model_name;
  j["prompt_template_id"] = o.prompt_template_id;
  j["max_retries"] = o.max_retries;
  j["timeout_ms"] = o.timeout.count();
  j["cache_path"] = o.cache_path.string();
  j["api_key_env"] = o.api_key_env;
  j["lookup_path"] = o.lookup_path.string();
  j["keywords"] = o.keywords;
  j["temperature"] = o.temperature;
  j["seed"] = o.seed;
  return j;
}

}  // namespace

ordered_json CurationConfig::to_json() const {
  ordered_json j;
  j["strategy"] = strategy_name(strategy);
  j["top_x"] = top_x;
  j["max_loops"] = max_loops;
  j["stop_rule"] = stop_rule_name(stop_rule);
  j["select"] = criterion_name(select);
  j["backend"] = model::backend_name(backend);
  j["adapter"] = adapter;
  j["train"] = train.to_json();
  j["annotator"] = oracle_json(annotator);
  j["paraphraser"] = oracle_json(paraphraser);
  j["augment_mode"] = augment_mode == interventions::AugmentMode::kDuplicate ? "duplicate"
                                                                              : "replace";
  return j;
}

ordered_json LoopSummary::to_json() const {
  ordered_json j;
  j["loop"] = loop;
  j["snapshot_id"] = snapshot_id;
  j["snapshot_size"] = snapshot_size;
  j["errors"] = errors;
  j["union_size"] = union_size;
  j["tsd_accuracy"] = tsd_accuracy;
  j["epochs"] = ordered_json::array();
  for (const auto& e : epochs) {
    j["epochs"].push_back(
        {{"epoch", e.epoch}, {"train_loss", e.train_loss}, {"tsd_accuracy", e.tsd_accuracy}});
  }
  j["records"] = records;
  j["next_snapshot_id"] = next_snapshot_id ? ordered_json(*next_snapshot_id) : nullptr;
  return j;
}

LoopSummary LoopSummary::from_json(const json& j) {
  try {
    LoopSummary s;
    s.loop = j.at("loop").get<int>();
    s.snapshot_id = j.at("snapshot_id").get<std::string>();
    s.snapshot_size = j.at("snapshot_size").get<std::size_t>();
    s.errors = j.at("errors").get<std::size_t>();
    s.union_size = j.at("union_size").get<std::size_t>();
    s.tsd_accuracy = j.at("tsd_accuracy").get<double>();
    for (const auto& e : j.at("epochs")) {
      s.epochs.push_back({e.at("epoch").get<int>(), e.at("train_loss").get<double>(),
                          e.at("tsd_accuracy").get<double>()});
    }
    s.records = j.at("records").get<std::size_t>();
    if (!j.at("next_snapshot_id").is_null()) {
      s.next_snapshot_id = j["next_snapshot_id"].get<std::string>();
    }
    return s;
  } catch (const json::exception& e) {
    throw FormatError(std::string("bad loop metrics: ") + e.what());
  }
}

ordered_json CurationRun::to_json() const {
  ordered_json j;
  j["run_id"] = run_id;
  j["stop_reason"] = stop_reason;
  if (!abort_message.empty()) j["abort_message"] = abort_message;
  j["oracle_failure"] = oracle_failure;
  j["selected_loop"] = selected_loop;
  j["loops"] = ordered_json::array();
  for (const auto& l : loops) j["loops"].push_back(l.to_json());
  return j;
}

CurationRun CurationRun::from_json(const json& j) {
  try {
    CurationRun r;
    r.run_id = j.at("run_id").get<std::string>();
    r.stop_reason = j.at("stop_reason").get<std::string>();
    r.abort_message = j.value("abort_message", "");
    r.oracle_failure = j.value("oracle_failure", false);
    r.selected_loop = j.at("selected_loop").get<int>();
    for (const auto& l : j.at("loops")) r.loops.push_back(LoopSummary::from_json(l));
    return r;
  } catch (const json::exception& e) {
    throw FormatError(std::string("bad run record: ") + e.what());
  }
}

std::string derive_run_id(const CurationConfig& cfg, const DatasetSnapshot& train,
                          const corpus::TrustedSet& ts) {
  std::string material = cfg.to_json().dump();
  material += '\n' + train.snapshot_id() + '\n';
  material += DatasetSnapshot::content_id(ts.samples, std::nullopt, {});
  return "run-" + sha256_hex(material).substr(0, 12);
}

fs::path run_dir(const fs::path& out_dir, const std::string& run_id) {
  return out_dir / "runs" / run_id;
}

fs::path loop_dir(const fs::path& run_dir, int loop) {
  return run_dir / ("loop_" + std::to_string(loop));
}

bool plateau_reached(const std::vector<double>& acc) {
  if (acc.size() < 3) return false;
  const double best = *std::max_element(acc.begin(), acc.end() - 2);
  return acc[acc.size() - 2] <= best && acc.back() <= best;
}

int select_best_loop_index(const CurationRun& run, SelectCriterion criterion) {
  if (run.loops.empty()) throw PreconditionError("run '" + run.run_id + "' has no loops");
  if (criterion == SelectCriterion::kLast) return run.loops.back().loop;
  const LoopSummary* best = &run.loops.front();
  for (const auto& l : run.loops) {
    if (l.tsd_accuracy > best->tsd_accuracy) best = &l;
  }
  return best->loop;
}

std::string select_best_loop(const CurationRun& run, SelectCriterion criterion) {
  const int k = select_best_loop_index(run, criterion);
  for (const auto& l : run.loops) {
    if (l.loop == k) return l.snapshot_id;
  }
  return {};
}

NoiseResult inject_noise(const DatasetSnapshot& ds, double rate, std::uint64_t seed) {
  if (!(rate > 0.0 && rate < 1.0)) {
    throw PreconditionError("noise rate must lie in (0, 1), got " + std::to_string(rate));
  }
  // The epsilon keeps products like 0.1 * 100 from rounding up to 11.
  const auto n = static_cast<std::size_t>(
      std::ceil(rate * static_cast<double>(ds.size()) - 1e-9));
  std::vector<std::size_t> order(ds.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  CounterRng rng(CounterRng::derive(seed, 0x6e6f697365ULL));
  for (std::size_t i = 0; i < n; ++i) {
    std::swap(order[i], order[i + rng.bounded(order.size() - i)]);
  }
  std::vector<corpus::Sample> samples(ds.samples().begin(), ds.samples().end());
  NoiseResult out;
  for (std::size_t i = 0; i < n; ++i) {
    auto& s = samples[order[i]];
    if (s.origin == corpus::Origin::kAugmented) {
      throw PreconditionError("cannot flip augmented sample '" + s.id + "'");
    }
    s.label = 1 - s.label;
    out.corrupted_ids.push_back(s.id);
  }
  std::sort(out.corrupted_ids.begin(), out.corrupted_ids.end());
  char desc[96];
  std::snprintf(desc, sizeof desc, "noise(rate=%g,seed=%llu)", rate,
                static_cast<unsigned long long>(seed));
  out.snapshot = ds.derive(std::move(samples), desc);
  return out;
}

std::size_t still_corrupted(const DatasetSnapshot& ds, const std::vector<std::string>& ids,
                            const DatasetSnapshot& truth) {
  std::size_t n = 0;
  for (const auto& id : ids) {
    const auto* s = ds.find(id);
    const auto* t = truth.find(id);
    if (s && t && s->label != t->label) ++n;
  }
  return n;
}

// ---------------------------------------------------------------------------

namespace {

void write_json(const fs::path& path, const ordered_json& j) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << j.dump(2) << '\n';
    if (!out) throw FormatError("cannot write '" + path.string() + "'");
  }
  fs::rename(tmp, path);
}

json read_json(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open '" + path.string() + "'");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw FormatError("bad JSON in '" + path.string() + "': " + e.what());
  }
}

double accuracy_of(std::size_t errors, std::size_t total) {
  return total == 0 ? 0.0 : 1.0 - static_cast<double>(errors) / static_cast<double>(total);
}

std::string stop_reason_for(const LoopSummary& s, const std::vector<double>& acc,
                            const CurationConfig& cfg) {
  if (s.errors == 0) return "no_errors";
  if (s.union_size == 0) return "empty_union";
  if (s.loop >= cfg.max_loops) return "max_loops";
  if (cfg.stop_rule == StopRule::kPlateau && plateau_reached(acc)) return "plateau";
  return {};
}

ordered_json model_record(const model::ClassifierModel& m, const std::string& snapshot_id) {
  if (const auto* b = dynamic_cast<const model::BuiltinModel*>(&m)) return b->to_json();
  ordered_json j;
  j["backend"] = model::backend_name(m.backend());
  j["fingerprint"] = m.fingerprint();
  j["snapshot_id"] = snapshot_id;
  j["config"] = m.training_config().to_json();
  return j;
}

void write_run_files(const fs::path& rdir, const CurationRun& run, const CurationConfig& cfg) {
  std::vector<interventions::ProvenanceRecord> all;
  for (const auto& l : run.loops) {
    const fs::path p = loop_dir(rdir, l.loop) / "provenance.jsonl";
    if (l.next_snapshot_id && fs::exists(p)) {
      auto recs = interventions::read_provenance(p);
      all.insert(all.end(), recs.begin(), recs.end());
    }
  }
  const fs::path ledger = rdir / "provenance.jsonl";
  fs::remove(ledger);
  interventions::append_provenance(all, ledger);
  ordered_json j = run.to_json();
  if (!run.loops.empty()) {
    j["selected_snapshot_id"] = select_best_loop(run, cfg.select);
    const auto& last = run.loops.back();
    j["final_snapshot_id"] = last.next_snapshot_id.value_or(last.snapshot_id);
  }
  j["config"] = cfg.to_json();
  write_json(rdir / "run.json", j);
}

}  // namespace

CurationRun run_curation(const CurationConfig& cfg, const DatasetSnapshot& train,
                         const corpus::TrustedSet& ts, const RunEnv& env) {
  cfg.validate();
  if (!env.trainer) throw PreconditionError("run_curation needs a trainer");
  if (ts.samples.empty()) throw PreconditionError("trusted set is empty");
  model::check_trainable(cfg.train, train);

  std::unique_ptr<oracle::Annotator> own_annotator;
  std::unique_ptr<oracle::Paraphraser> own_paraphraser;
  oracle::Annotator* annotator = env.annotator;
  oracle::Paraphraser* paraphraser = env.paraphraser;
  if (cfg.strategy != Strategy::kDrop && !annotator) {
    own_annotator = oracle::make_annotator(cfg.annotator);
    annotator = own_annotator.get();
  }
  if (cfg.strategy == Strategy::kReannotateAugment && !paraphraser) {
    own_paraphraser = oracle::make_paraphraser(cfg.paraphraser);
    paraphraser = own_paraphraser.get();
  }

  CurationRun run;
  run.run_id = env.run_id.empty() ? derive_run_id(cfg, train, ts) : env.run_id;
  const fs::path rdir = run_dir(env.out_dir, run.run_id);
  fs::create_directories(rdir);
  log::info("run_start", {{"run_id", run.run_id}, {"dir", rdir.string()}});

  const fs::path first_snap = loop_dir(rdir, 1) / "snapshot";
  if (fs::exists(first_snap / "meta.json")) {
    const auto on_disk = corpus::read_snapshot(first_snap);
    if (on_disk.snapshot_id() != train.snapshot_id()) {
      throw PreconditionError("run directory " + rdir.string() + " belongs to snapshot " +
                              on_disk.snapshot_id());
    }
  } else {
    corpus::write_snapshot(train, first_snap);
  }

  DatasetSnapshot current = train;
  std::vector<double> accuracies;
  influence::InfluenceOptions iopts;
  iopts.threads = cfg.threads;

  for (int k = 1;; ++k) {
    const fs::path ldir = loop_dir(rdir, k);
    const fs::path snap_dir = ldir / "snapshot";

    if (fs::exists(ldir / "metrics.json")) {
      LoopSummary s = LoopSummary::from_json(read_json(ldir / "metrics.json"));
      if (s.snapshot_id != current.snapshot_id()) {
        throw FormatError("persisted loop " + std::to_string(k) + " does not continue snapshot " +
                          current.snapshot_id());
      }
      accuracies.push_back(s.tsd_accuracy);
      run.loops.push_back(s);
      log::info("loop_resumed", {{"loop", k}, {"snapshot_id", s.snapshot_id}});
      if (!s.next_snapshot_id) {
        run.stop_reason = stop_reason_for(s, accuracies, cfg);
        break;
      }
      current = corpus::read_snapshot(loop_dir(rdir, k + 1) / "snapshot");
      if (current.snapshot_id() != *s.next_snapshot_id) {
        throw FormatError("snapshot for loop " + std::to_string(k + 1) + " is not " +
                          *s.next_snapshot_id);
      }
      continue;
    }

    if (k > 1) {
      const auto [neg, pos] = current.class_counts();
      if (neg == 0 || pos == 0) {
        // The last intervention removed a whole class.
        run.stop_reason = "untrainable";
        log::warn("snapshot_untrainable", {{"loop", k}, {"snapshot_id", current.snapshot_id()}});
        break;
      }
    }

    LoopSummary s;
    s.loop = k;
    s.snapshot_id = current.snapshot_id();
    s.snapshot_size = current.size();

    model::TrainContext ctx;
    ctx.snapshot_path = snap_dir;
    ctx.on_epoch = [&](const model::EpochCheckpoint& cp) {
      const auto errs = influence::error_set(cp.model, ts);
      s.epochs.push_back({cp.epoch, cp.train_loss, accuracy_of(errs.size(), ts.samples.size())});
    };
    auto m = env.trainer->train(cfg.train, current, ctx);
    write_json(ldir / "model.json", model_record(*m, current.snapshot_id()));

    const auto errors = influence::error_set(*m, ts);
    s.errors = errors.size();
    s.tsd_accuracy = accuracy_of(errors.size(), ts.samples.size());
    accuracies.push_back(s.tsd_accuracy);

    influence::InfluenceReport rep;
    rep.x = cfg.top_x;
    if (!errors.empty()) {
      const auto train_emb = m->embed(current.samples());
      const auto trusted_emb = m->embed(ts.samples);
      rep = influence::top_influence(errors, current, train_emb, trusted_emb, cfg.top_x, iopts);
      write_json(ldir / "influence.json", rep.to_json());
    }
    s.union_size = rep.union_ids.size();
    log::info("loop_evaluated", {{"loop", k},
                                 {"snapshot_id", s.snapshot_id},
                                 {"size", s.snapshot_size},
                                 {"errors", s.errors},
                                 {"union", s.union_size},
                                 {"tsd_accuracy", s.tsd_accuracy}});

    run.stop_reason = stop_reason_for(s, accuracies, cfg);
    if (run.stop_reason.empty()) {
      interventions::Result res;
      try {
        switch (cfg.strategy) {
          case Strategy::kDrop:
            res = interventions::drop(current, rep, k);
            break;
          case Strategy::kReannotate:
            res = interventions::reannotate(current, rep, *annotator, k,
                                            {cfg.oracle_parallelism});
            break;
          case Strategy::kReannotateAugment:
            res = interventions::reannotate_then_augment(current, rep, *annotator, *paraphraser,
                                                         k, {cfg.oracle_parallelism},
                                                         cfg.augment_mode);
            break;
        }
      } catch (const InterventionAborted& e) {
        run.stop_reason = "aborted";
        run.abort_message = e.what();
        run.oracle_failure = e.oracle_failure();
        log::error("intervention_aborted", {{"loop", k}, {"reason", e.what()}});
        accuracies.pop_back();
        break;
      }
      const fs::path prov = ldir / "provenance.jsonl";
      fs::remove(prov);
      interventions::append_provenance(res.records, prov);
      corpus::write_snapshot(res.snapshot, loop_dir(rdir, k + 1) / "snapshot");
      s.records = res.records.size();
      s.next_snapshot_id = res.snapshot.snapshot_id();
      current = res.snapshot;
    }
    write_json(ldir / "metrics.json", s.to_json());
    run.loops.push_back(s);
    if (env.after_loop && !env.after_loop(s)) {
      run.stop_reason = "interrupted";
      return run;
    }
    if (!run.stop_reason.empty()) break;
  }

  if (!run.loops.empty()) run.selected_loop = select_best_loop_index(run, cfg.select);
  write_run_files(rdir, run, cfg);
  log::info("run_end", {{"run_id", run.run_id},
                        {"loops", run.loops.size()},
                        {"stop_reason", run.stop_reason},
                        {"selected_loop", run.selected_loop}});
  return run;
}

}  // namespace hscurate::pipeline
