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

#include "hscurate/cli.h"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include "CLI11.hpp"
#include "hscurate/adapter.h"
#include "hscurate/corpus.h"
#include "hscurate/errors.h"
#include "hscurate/evalharness.h"
#include "hscurate/hash.h"
#include "hscurate/lexicon.h"
#include "hscurate/log.h"
#include "hscurate/model.h"
#include "hscurate/oracle.h"
#include "hscurate/pipeline.h"
#include "hscurate/synthetic.h"
#include "hscurate/text.h"

namespace hscurate::cli {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

struct Global {
  std::string out = "hscurate-out";
  std::string log_level = "warn";
  unsigned threads = 1;
};

struct ImportOpts {
  std::string input;
  std::string format;
  std::string mapping;
  std::string id_col = "id";
  std::string text_col = "text";
  std::string label_col = "label";
  std::string name = "snapshot";
  bool raw = false;
  bool synthetic = false;
  std::size_t topics = 400;
  std::size_t trusted = 320;
  std::size_t heldout_per_topic = 2;
  std::uint64_t seed = 1;
};

struct LexiconOpts {
  std::vector<std::string> datasets;
  std::string lexicon;
};

struct TrainFlags {
  int epochs = 20;
  int batch_size = 16;
  double lr = 0.5;
  std::uint64_t seed = 0;
  int feature_dim = 1024;
  double l2 = 0.0;
  std::string backend = "builtin";
  std::string adapter;
  int adapter_timeout_ms = 600000;

  model::TrainConfig config() const {
    model::TrainConfig c;
    c.epochs = epochs;
    c.batch_size = batch_size;
    c.learning_rate = lr;
    c.seed = seed;
    c.feature_dim = feature_dim;
    if (l2 != 0.0) {
      std::ostringstream s;
      s.precision(17);
      s << l2;
      c.options["l2"] = s.str();
    }
    return c;
  }
};

struct OracleFlags {
  std::string kind = "mock_rule";
  std::string endpoint;
  std::string model;
  std::string template_id;
  int retries = 3;
  int timeout_ms = 30000;
  int backoff_ms = 500;
  std::string cache;
  std::string api_key_env = "OPENAI_API_KEY";
  std::string lookup;
  std::string keywords;
  double temperature = 0.0;
  std::uint64_t seed = 0;

  oracle::OracleConfig config(const std::string& default_template) const {
    oracle::OracleConfig c;
    c.kind = oracle::parse_kind(kind);
    c.endpoint = endpoint;
    c.model_name = model;
    c.prompt_template_id = template_id.empty() ? default_template : template_id;
    c.max_retries = retries;
    c.timeout = std::chrono::milliseconds(timeout_ms);
    c.backoff_base = std::chrono::milliseconds(backoff_ms);
    c.backoff_max = std::max(c.backoff_base, std::chrono::milliseconds(8000));
    c.cache_path = cache;
    c.api_key_env = api_key_env;
    c.lookup_path = lookup;
    for (auto& k : text::split_whitespace(keywords_as_words())) c.keywords.emplace_back(k);
    c.temperature = temperature;
    c.seed = seed;
    return c;
  }

  std::string keywords_as_words() const {
    std::string s = keywords;
    for (char& ch : s) {
      if (ch == ',') ch = ' ';
    }
    return s;
  }
};

void add_oracle_flags(CLI::App* app, OracleFlags& f, const std::string& prefix,
                      const std::string& what) {
  app->add_option("--" + prefix + "-kind", f.kind, what + " kind: http_llm, mock_lookup, mock_rule")
      ->capture_default_str();
  app->add_option("--" + prefix + "-endpoint", f.endpoint, what + " chat-completions URL");
  app->add_option("--" + prefix + "-model", f.model, what + " model name");
  app->add_option("--" + prefix + "-template", f.template_id, what + " prompt template id");
  app->add_option("--" + prefix + "-retries", f.retries, "retries after the first attempt")
      ->capture_default_str();
  app->add_option("--" + prefix + "-timeout-ms", f.timeout_ms, "per-request timeout")
      ->capture_default_str();
  app->add_option("--" + prefix + "-backoff-ms", f.backoff_ms, "first retry delay")
      ->capture_default_str();
  app->add_option("--" + prefix + "-cache", f.cache, what + " cache (JSONL)");
  app->add_option("--" + prefix + "-api-key-env", f.api_key_env,
                  "environment variable holding the API key")
      ->capture_default_str();
  app->add_option("--" + prefix + "-lookup", f.lookup, "mock_lookup table (JSON)");
  app->add_option("--" + prefix + "-keywords", f.keywords,
                  "comma-separated mock_rule keywords / stripped terms");
  app->add_option("--" + prefix + "-temperature", f.temperature, "sampling temperature")
      ->capture_default_str();
  app->add_option("--" + prefix + "-seed", f.seed, "mock paraphraser seed")->capture_default_str();
}

void add_train_flags(CLI::App* app, TrainFlags& f) {
  app->add_option("--backend", f.backend, "builtin or external")->capture_default_str();
  app->add_option("--adapter", f.adapter, "stdio:<command> or tcp:<host>:<port>");
  app->add_option("--adapter-timeout-ms", f.adapter_timeout_ms, "adapter reply timeout")
      ->capture_default_str();
  app->add_option("--epochs", f.epochs)->capture_default_str();
  app->add_option("--batch-size", f.batch_size)->capture_default_str();
  app->add_option("--lr", f.lr, "learning rate")->capture_default_str();
  app->add_option("--train-seed", f.seed)->capture_default_str();
  app->add_option("--feature-dim", f.feature_dim)->capture_default_str();
  app->add_option("--l2", f.l2, "ridge penalty")->capture_default_str();
}

std::unique_ptr<model::Trainer> make_trainer(const TrainFlags& f) {
  if (model::parse_backend(f.backend) == model::Backend::kBuiltin) {
    return std::make_unique<model::BuiltinTrainer>();
  }
  if (f.adapter.empty()) throw PreconditionError("--backend external needs --adapter");
  return std::make_unique<model::ExternalTrainer>(
      model::connect_adapter(f.adapter, std::chrono::milliseconds(f.adapter_timeout_ms)));
}

void write_text(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << content;
  if (!out) throw FormatError("cannot write '" + path.string() + "'");
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open '" + path.string() + "'");
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

ordered_json snapshot_summary(const corpus::DatasetSnapshot& ds, const fs::path& path) {
  const auto [neg, pos] = ds.class_counts();
  ordered_json j;
  j["snapshot_id"] = ds.snapshot_id();
  j["size"] = ds.size();
  j["positives"] = pos;
  j["negatives"] = neg;
  j["path"] = path.string();
  return j;
}

// "label=path" or "path".
std::pair<std::string, std::string> split_label(const std::string& spec) {
  const auto eq = spec.find('=');
  if (eq == std::string::npos) return {{}, spec};
  return {spec.substr(0, eq), spec.substr(eq + 1)};
}

std::vector<std::string> split_list(const std::vector<std::string>& items) {
  std::vector<std::string> out;
  for (const auto& item : items) {
    std::string cur;
    for (char c : item) {
      if (c == ',') {
        if (!cur.empty()) out.push_back(cur);
        cur.clear();
      } else {
        cur.push_back(c);
      }
    }
    if (!cur.empty()) out.push_back(cur);
  }
  return out;
}

// ---------------------------------------------------------------------------

int run_import(const Global& g, const ImportOpts& o, std::ostream& out) {
  const fs::path dir = g.out;
  if (o.synthetic) {
    synthetic::Spec spec;
    spec.topics = o.topics;
    spec.trusted = o.trusted;
    spec.heldout_per_topic = o.heldout_per_topic;
    spec.seed = o.seed;
    const auto c = synthetic::generate(spec);
    corpus::write_snapshot(c.train, dir / "train");
    corpus::write_samples_jsonl(c.trusted.samples, dir / "trusted.jsonl");
    corpus::write_snapshot(c.heldout, dir / "heldout");
    json lookup = json::object();
    for (const auto& s : c.train.samples()) lookup[sha256_hex(s.text)] = s.label;
    write_text(dir / "oracle_lookup.json", lookup.dump(1) + "\n");
    ordered_json j;
    j["train"] = snapshot_summary(c.train, dir / "train");
    j["trusted"] = {{"size", c.trusted.samples.size()},
                    {"path", (dir / "trusted.jsonl").string()}};
    j["heldout"] = snapshot_summary(c.heldout, dir / "heldout");
    j["oracle_lookup"] = (dir / "oracle_lookup.json").string();
    out << j.dump() << '\n';
    return kExitOk;
  }
  if (o.input.empty()) throw PreconditionError("import needs --input or --synthetic");
  if (o.mapping.empty()) throw PreconditionError("import needs --mapping");
  std::string format = o.format;
  if (format.empty()) format = fs::path(o.input).extension() == ".csv" ? "csv" : "jsonl";
  const corpus::CsvColumns cols{o.id_col, o.text_col, o.label_col};
  std::vector<corpus::RawRecord> rows;
  if (format == "csv") {
    rows = corpus::read_raw_csv(o.input, cols);
  } else if (format == "jsonl") {
    rows = corpus::read_raw_jsonl(o.input, cols);
  } else {
    throw PreconditionError("unknown input format '" + format + "'");
  }
  if (!o.raw) {
    for (auto& r : rows) r.text = corpus::preprocess_text(r.text);
  }
  const auto ds = corpus::unify_labels(rows, corpus::read_label_mapping(o.mapping));
  corpus::write_snapshot(ds, dir / o.name);
  out << snapshot_summary(ds, dir / o.name).dump() << '\n';
  return kExitOk;
}

int run_lexicon(const Global& g, const LexiconOpts& o, std::ostream& out) {
  const auto lex = lexicon::Lexicon::load(o.lexicon);
  std::string lines;
  for (const auto& spec : split_list(o.datasets)) {
    auto [name, path] = split_label(spec);
    if (name.empty()) name = fs::path(path).stem().string();
    const auto ds = corpus::read_snapshot(path);
    const auto r = lexicon::lexicon_free_positive_rate(ds, lex);
    ordered_json j;
    j["dataset"] = name;
    j["positives"] = r.positives;
    j["lexicon_free"] = r.lexicon_free;
    j["rate"] = r.rate;
    lines += j.dump() + '\n';
  }
  write_text(fs::path(g.out) / "lexicon_report.jsonl", lines);
  out << lines;
  return kExitOk;
}

struct CurateOpts {
  std::string strategy = "reannotate";
  std::size_t top_x = 10;
  int max_loops = 10;
  std::string stop_rule = "tsd_accuracy_plateau";
  std::string select = "max_tsd_accuracy";
  std::string train;
  std::string tsd;
  std::size_t tsd_size = 0;
  std::string run_id;
  std::string augment_mode = "duplicate";
  unsigned oracle_parallelism = 4;
  TrainFlags model;
  OracleFlags annotator;
  OracleFlags paraphraser;
};

int run_curate(const Global& g, const CurateOpts& o, std::ostream& out) {
  pipeline::CurationConfig cfg;
  cfg.strategy = pipeline::parse_strategy(o.strategy);
  cfg.top_x = o.top_x;
  cfg.max_loops = o.max_loops;
  cfg.stop_rule = pipeline::parse_stop_rule(o.stop_rule);
  cfg.select = pipeline::parse_criterion(o.select);
  cfg.backend = model::parse_backend(o.model.backend);
  cfg.adapter = o.model.adapter;
  cfg.train = o.model.config();
  cfg.annotator = o.annotator.config("annotate-v1");
  cfg.paraphraser = o.paraphraser.config("paraphrase-v1");
  if (o.augment_mode == "duplicate") {
    cfg.augment_mode = interventions::AugmentMode::kDuplicate;
  } else if (o.augment_mode == "replace") {
    cfg.augment_mode = interventions::AugmentMode::kReplace;
  } else {
    throw PreconditionError("unknown augment mode '" + o.augment_mode + "'");
  }
  cfg.oracle_parallelism = o.oracle_parallelism;
  cfg.threads = g.threads;
  cfg.validate();

  const auto train = corpus::read_snapshot(o.train);
  const auto ts = corpus::read_trusted_set(o.tsd, o.tsd_size);
  const auto violations = corpus::validate_trusted_set(ts);
  if (!violations.empty()) {
    for (const auto& v : violations) {
      log::error("trusted_set_violation",
                 {{"kind", corpus::violation_name(v.kind)}, {"detail", v.detail}});
    }
    throw PreconditionError("trusted set '" + o.tsd + "' is not valid");
  }

  auto trainer = make_trainer(o.model);
  pipeline::RunEnv env;
  env.out_dir = g.out;
  env.run_id = o.run_id;
  env.trainer = trainer.get();
  const auto run = pipeline::run_curation(cfg, train, ts, env);

  ordered_json j;
  j["run_id"] = run.run_id;
  j["run_dir"] = pipeline::run_dir(g.out, run.run_id).string();
  j["loops"] = run.loops.size();
  j["stop_reason"] = run.stop_reason;
  j["selected_loop"] = run.selected_loop;
  if (!run.loops.empty()) j["selected_snapshot_id"] = pipeline::select_best_loop(run, cfg.select);
  out << j.dump() << '\n';
  if (run.aborted()) return run.oracle_failure ? kExitOracleFailure : kExitAborted;
  return kExitOk;
}

struct NoiseOpts {
  std::string input;
  double rate = 0.0;
  std::uint64_t seed = 0;
  std::string name = "noisy";
};

int run_inject_noise(const Global& g, const NoiseOpts& o, std::ostream& out) {
  const auto ds = corpus::read_snapshot(o.input);
  const auto res = pipeline::inject_noise(ds, o.rate, o.seed);
  const fs::path dir = fs::path(g.out) / o.name;
  corpus::write_snapshot(res.snapshot, dir);
  ordered_json truth;
  truth["source_snapshot_id"] = ds.snapshot_id();
  truth["noisy_snapshot_id"] = res.snapshot.snapshot_id();
  truth["rate"] = o.rate;
  truth["seed"] = o.seed;
  truth["corrupted_ids"] = res.corrupted_ids;
  write_text(fs::path(g.out) / (o.name + "_truth.json"), truth.dump(2) + "\n");
  ordered_json j = snapshot_summary(res.snapshot, dir);
  j["flipped"] = res.corrupted_ids.size();
  out << j.dump() << '\n';
  return kExitOk;
}

struct EvalOpts {
  std::vector<std::string> models;
  std::vector<std::string> tests;
  std::string seeds = "5";
  std::size_t n = 500;
  std::string variant = "original";
  std::string format = "markdown";
  std::string tsd;
  std::size_t top_x = 10;
  TrainFlags model;
  OracleFlags annotator;
};

std::vector<std::uint64_t> parse_seeds(const std::string& s) {
  std::vector<std::uint64_t> out;
  try {
    if (s.find(',') == std::string::npos) {
      const auto n = std::stoull(s);
      for (std::uint64_t i = 1; i <= n; ++i) out.push_back(i);
    } else {
      for (const auto& part : split_list({s})) out.push_back(std::stoull(part));
    }
  } catch (const std::logic_error&) {
    throw PreconditionError("bad --seeds '" + s + "'");
  }
  return out;
}

struct LoadedModel {
  std::string train;
  std::string approach;
  std::unique_ptr<model::ClassifierModel> model;
};

json read_json_file(const fs::path& p) {
  try {
    return json::parse(read_text(p));
  } catch (const json::exception& e) {
    throw FormatError("bad JSON in '" + p.string() + "': " + e.what());
  }
}

LoadedModel load_model(const std::string& spec, const TrainFlags& flags,
                       model::Trainer*& external) {
  auto [label, path_str] = split_label(spec);
  fs::path path = path_str;
  LoadedModel lm;
  std::string default_train = path.filename().string();
  std::string default_approach = "model";
  if (fs::exists(path / "run.json")) {
    const json run = read_json_file(path / "run.json");
    default_train = run.at("run_id").get<std::string>();
    default_approach = run.at("config").at("strategy").get<std::string>();
    path = pipeline::loop_dir(path, run.at("selected_loop").get<int>());
  }
  if (fs::exists(path / "model.json")) {
    const json mj = read_json_file(path / "model.json");
    if (mj.value("backend", "") == "builtin") {
      lm.model = model::BuiltinModel::from_json(mj);
    } else {
      if (!external) throw PreconditionError("model at '" + path.string() + "' needs --adapter");
      const auto ds = corpus::read_snapshot(path / "snapshot");
      model::TrainContext ctx;
      ctx.snapshot_path = path / "snapshot";
      lm.model = external->train(model::TrainConfig::from_json(mj.at("config")), ds, ctx);
    }
  } else {
    const auto ds = corpus::read_snapshot(path);
    model::TrainContext ctx;
    ctx.snapshot_path = path;
    if (model::parse_backend(flags.backend) == model::Backend::kBuiltin) {
      lm.model = model::BuiltinTrainer().train(flags.config(), ds, ctx);
    } else {
      if (!external) throw PreconditionError("--backend external needs --adapter");
      lm.model = external->train(flags.config(), ds, ctx);
    }
  }
  if (label.empty()) {
    lm.train = default_train;
    lm.approach = default_approach;
  } else if (auto slash = label.find('/'); slash != std::string::npos) {
    lm.train = label.substr(0, slash);
    lm.approach = label.substr(slash + 1);
  } else {
    lm.train = label;
    lm.approach = default_approach;
  }
  return lm;
}

int write_report(const Global& g, const eval::EvalMatrix& m, const std::string& format,
                 std::ostream& out) {
  const auto f = eval::parse_format(format);
  const std::string text = eval::emit_report(m, f);
  write_text(fs::path(g.out) / ("report." + std::string(eval::format_extension(f))), text);
  out << text;
  return kExitOk;
}

int run_evaluate(const Global& g, const EvalOpts& o, std::ostream& out) {
  eval::EvalConfig cfg;
  cfg.n_per_class = o.n;
  cfg.seeds = parse_seeds(o.seeds);
  cfg.variant = eval::parse_variant(o.variant);
  cfg.validate();
  eval::parse_format(o.format);

  std::unique_ptr<model::Trainer> external_owner;
  model::Trainer* external = nullptr;
  if (!o.model.adapter.empty()) {
    TrainFlags ext = o.model;
    ext.backend = "external";
    external_owner = make_trainer(ext);
    external = external_owner.get();
  }
  std::vector<LoadedModel> loaded;
  for (const auto& spec : split_list(o.models)) loaded.push_back(load_model(spec, o.model, external));
  std::vector<eval::ModelEntry> models;
  for (const auto& lm : loaded) models.push_back({lm.train, lm.approach, lm.model.get()});

  std::vector<eval::TestEntry> tests;
  for (const auto& spec : split_list(o.tests)) {
    auto [name, path] = split_label(spec);
    if (name.empty()) name = fs::path(path).stem().string();
    tests.push_back({name, corpus::read_snapshot(path)});
  }
  if (models.empty() || tests.empty()) throw PreconditionError("evaluate needs --model and --tests");

  eval::TestReannotation ra;
  corpus::TrustedSet ts;
  std::unique_ptr<oracle::Annotator> annotator;
  if (cfg.variant == eval::TestVariant::kReannotated) {
    if (o.tsd.empty()) throw PreconditionError("--variant reannotated needs --tsd");
    ts = corpus::read_trusted_set(o.tsd, 0);
    annotator = oracle::make_annotator(o.annotator.config("annotate-v1"));
    ra = {&ts, annotator.get(), o.top_x};
  }
  const auto m = eval::cross_evaluate(models, tests, cfg, ra);
  write_text(fs::path(g.out) / "eval.json", eval::emit_report(m, eval::ReportFormat::kJson));
  return write_report(g, m, o.format, out);
}

struct ReportOpts {
  std::string matrix;
  std::string format = "markdown";
};

// Global keys plus the keys of the subcommand that ran.
std::string resolved_config(const CLI::App& app, const std::string& sub) {
  std::istringstream all(app.config_to_str(true, false));
  std::string out, line;
  while (std::getline(all, line)) {
    const auto key = line.substr(0, line.find('='));
    const auto dot = key.find('.');
    if (dot == std::string::npos || key.compare(0, dot, sub) == 0) out += line + '\n';
  }
  return out;
}

}  // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Iterative curation of harmful-speech training corpora", "hscurate"};
  app.require_subcommand(1);
  app.failure_message(CLI::FailureMessage::help);
  app.set_config("--config", "", "TOML file with option values; flags take precedence");
  app.allow_config_extras(false);

  Global g;
  app.add_option("--out", g.out, "artifact directory")->capture_default_str();
  app.add_option("--log-level", g.log_level, "debug, info, warn, error, off")
      ->capture_default_str();
  app.add_option("--threads", g.threads, "similarity search threads (0 = all cores)")
      ->capture_default_str();

  ImportOpts imp;
  auto* c_import = app.add_subcommand("import", "import a raw corpus as a snapshot");
  c_import->add_option("--input", imp.input, "CSV or JSONL file");
  c_import->add_option("--format", imp.format, "csv or jsonl (default: by extension)");
  c_import->add_option("--mapping", imp.mapping, "JSON map raw label -> 0|1");
  c_import->add_option("--id-col", imp.id_col)->capture_default_str();
  c_import->add_option("--text-col", imp.text_col)->capture_default_str();
  c_import->add_option("--label-col", imp.label_col)->capture_default_str();
  c_import->add_option("--name", imp.name, "snapshot directory name")->capture_default_str();
  c_import->add_flag("--raw", imp.raw, "skip text preprocessing");
  c_import->add_flag("--synthetic", imp.synthetic, "generate the synthetic test corpus");
  c_import->add_option("--topics", imp.topics)->capture_default_str();
  c_import->add_option("--trusted", imp.trusted)->capture_default_str();
  c_import->add_option("--heldout-per-topic", imp.heldout_per_topic)->capture_default_str();
  c_import->add_option("--seed", imp.seed)->capture_default_str();

  LexiconOpts lex;
  auto* c_lex = app.add_subcommand("lexicon", "lexicon-free positive rate per dataset");
  c_lex->add_option("--dataset", lex.datasets, "[name=]snapshot, repeatable")->required();
  c_lex->add_option("--lexicon", lex.lexicon, "one term per line")->required();

  CurateOpts cur;
  auto* c_cur = app.add_subcommand("curate", "run the curation loop");
  c_cur->add_option("--strategy", cur.strategy, "drop, reannotate, reannotate-augment")
      ->capture_default_str();
  c_cur->add_option("--top-x", cur.top_x)->capture_default_str();
  c_cur->add_option("--max-loops", cur.max_loops)->capture_default_str();
  c_cur->add_option("--stop-rule", cur.stop_rule, "fixed_loops or tsd_accuracy_plateau")
      ->capture_default_str();
  c_cur->add_option("--select", cur.select, "max_tsd_accuracy or last")->capture_default_str();
  c_cur->add_option("--train", cur.train, "training snapshot")->required();
  c_cur->add_option("--tsd", cur.tsd, "trusted samples (JSONL or snapshot)")->required();
  c_cur->add_option("--tsd-size", cur.tsd_size, "intended trusted-set size (0 = as read)")
      ->capture_default_str();
  c_cur->add_option("--run-id", cur.run_id, "default: derived from config and inputs");
  c_cur->add_option("--augment-mode", cur.augment_mode, "duplicate or replace")
      ->capture_default_str();
  c_cur->add_option("--oracle-parallelism", cur.oracle_parallelism)->capture_default_str();
  add_train_flags(c_cur, cur.model);
  add_oracle_flags(c_cur, cur.annotator, "oracle", "annotator");
  add_oracle_flags(c_cur, cur.paraphraser, "para", "paraphraser");

  NoiseOpts noise;
  auto* c_noise = app.add_subcommand("inject-noise", "flip a seeded share of labels");
  c_noise->add_option("--input", noise.input, "snapshot")->required();
  c_noise->add_option("--rate", noise.rate, "share in (0, 1)")->required();
  c_noise->add_option("--seed", noise.seed)->capture_default_str();
  c_noise->add_option("--name", noise.name, "output snapshot name")->capture_default_str();

  EvalOpts ev;
  auto* c_eval = app.add_subcommand("evaluate", "cross-dataset evaluation");
  c_eval->add_option("--model", ev.models,
                     "[train/approach=]run dir, loop dir or snapshot, repeatable")
      ->required();
  c_eval->add_option("--tests", ev.tests, "[name=]snapshot list")->required();
  c_eval->add_option("--seeds", ev.seeds, "count (1..N) or comma list")->capture_default_str();
  c_eval->add_option("--n", ev.n, "samples per class")->capture_default_str();
  c_eval->add_option("--variant", ev.variant, "original or reannotated")->capture_default_str();
  c_eval->add_option("--format", ev.format, "json, csv, markdown")->capture_default_str();
  c_eval->add_option("--tsd", ev.tsd, "trusted set for the reannotated variant");
  c_eval->add_option("--top-x", ev.top_x)->capture_default_str();
  add_train_flags(c_eval, ev.model);
  add_oracle_flags(c_eval, ev.annotator, "oracle", "annotator");

  ReportOpts rep;
  auto* c_rep = app.add_subcommand("report", "render a stored evaluation matrix");
  c_rep->add_option("--matrix", rep.matrix, "eval.json")->required();
  c_rep->add_option("--format", rep.format, "json, csv, markdown")->capture_default_str();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    if (!reversed.empty()) reversed.pop_back();
    app.parse(std::move(reversed));
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    log::set_level(log::parse_level(g.log_level));
    CLI::App* sub = app.get_subcommands().front();
    fs::create_directories(g.out);
    write_text(fs::path(g.out) / (sub->get_name() + ".resolved.toml"),
               resolved_config(app, sub->get_name()));
    if (sub == c_import) return run_import(g, imp, out);
    if (sub == c_lex) return run_lexicon(g, lex, out);
    if (sub == c_cur) return run_curate(g, cur, out);
    if (sub == c_noise) return run_inject_noise(g, noise, out);
    if (sub == c_eval) return run_evaluate(g, ev, out);
    if (sub == c_rep) return write_report(g, eval::read_matrix(rep.matrix), rep.format, out);
    return kExitUsage;
  } catch (const InterventionAborted& e) {
    log::error("aborted", {{"error", e.what()}});
    return e.oracle_failure() ? kExitOracleFailure : kExitAborted;
  } catch (const TransportError& e) {
    log::error("transport_failure", {{"error", e.what()}});
    return kExitOracleFailure;
  } catch (const OracleError& e) {
    log::error("oracle_failure", {{"error", e.what()}});
    return kExitOracleFailure;
  } catch (const ProtocolError& e) {
    log::error("adapter_failure", {{"error", e.what()}});
    return kExitAborted;
  } catch (const Error& e) {
    log::error("failed", {{"error", e.what()}});
    return kExitUsage;
  } catch (const std::exception& e) {
    log::error("failed", {{"error", e.what()}});
    return kExitUsage;
  }
}

int dispatch(int argc, const char* const* argv) {
  std::vector<std::string> args(argv, argv + argc);
  return dispatch(args, std::cout, std::cerr);
}

}  // namespace hscurate::cli
