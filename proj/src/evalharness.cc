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
#include "hscurate/evalharness.h"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "hscurate/errors.h"
#include "hscurate/hash.h"
#include "hscurate/influence.h"
#include "hscurate/interventions.h"
#include "hscurate/log.h"
#include "hscurate/rng.h"

namespace hscurate::eval {

using corpus::DatasetSnapshot;
using corpus::Sample;
using nlohmann::json;
using nlohmann::ordered_json;

std::string_view variant_name(TestVariant v) {
  return v == TestVariant::kOriginal ? "original" : "reannotated";
}

TestVariant parse_variant(std::string_view name) {
  if (name == "original") return TestVariant::kOriginal;
  if (name == "reannotated") return TestVariant::kReannotated;
  throw PreconditionError("unknown test variant '" + std::string(name) + "'");
}

void EvalConfig::validate() const {
  if (n_per_class < 1) throw PreconditionError("n_per_class must be >= 1");
  if (seeds.empty()) throw PreconditionError("at least one seed is required");
  if (std::set<std::uint64_t>(seeds.begin(), seeds.end()).size() != seeds.size()) {
    throw PreconditionError("seeds must be distinct");
  }
}

std::vector<Sample> balanced_sample(const DatasetSnapshot& ds, std::size_t n,
                                    std::uint64_t seed) {
  std::vector<std::size_t> pos, neg;
  for (std::size_t i = 0; i < ds.size(); ++i) (ds[i].label == 1 ? pos : neg).push_back(i);
  if (pos.size() < n) {
    throw PreconditionError(std::to_string(pos.size()) + " < " + std::to_string(n) +
                            " positives");
  }
  if (neg.size() < n) {
    throw PreconditionError(std::to_string(neg.size()) + " < " + std::to_string(n) +
                            " negatives");
  }
  CounterRng rng(CounterRng::derive(fnv1a64(ds.snapshot_id()), seed));
  std::vector<std::size_t> picked;
  picked.reserve(2 * n);
  for (auto* cls : {&pos, &neg}) {
    auto& v = *cls;
    for (std::size_t i = 0; i < n; ++i) {
      std::swap(v[i], v[i + rng.bounded(v.size() - i)]);
      picked.push_back(v[i]);
    }
  }
  rng.shuffle(picked);
  std::vector<Sample> out;
  out.reserve(picked.size());
  for (std::size_t i : picked) out.push_back(ds[i]);
  return out;
}

Metrics metrics_from_counts(std::size_t tp, std::size_t fp, std::size_t fn) {
  Metrics m;
  const double t = static_cast<double>(tp);
  if (tp + fp > 0) m.precision = t / static_cast<double>(tp + fp);
  if (tp + fn > 0) m.recall = t / static_cast<double>(tp + fn);
  if (m.precision + m.recall > 0) {
    m.f1 = 2.0 * m.precision * m.recall / (m.precision + m.recall);
  }
  return m;
}

Metrics compute_metrics(std::span<const model::Prediction> preds,
                        std::span<const Sample> golds) {
  if (preds.size() != golds.size()) {
    throw PreconditionError("prediction count " + std::to_string(preds.size()) +
                            " does not match gold count " + std::to_string(golds.size()));
  }
  std::size_t tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (preds[i].sample_id != golds[i].id) {
      throw PreconditionError("prediction '" + preds[i].sample_id + "' is not aligned with '" +
                              golds[i].id + "'");
    }
    const bool p = preds[i].predicted_label == 1;
    const bool g = golds[i].label == 1;
    tp += p && g;
    fp += p && !g;
    fn += !p && g;
  }
  return metrics_from_counts(tp, fp, fn);
}

Stat summarize(std::span<const double> values) {
  Stat s;
  if (values.empty()) return s;
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / static_cast<double>(values.size());
  if (values.size() > 1) {
    double sq = 0.0;
    for (double v : values) sq += (v - s.mean) * (v - s.mean);
    s.sd = std::sqrt(sq / static_cast<double>(values.size() - 1));
  }
  return s;
}

namespace {

void finish_cell(Cell& c) {
  std::vector<double> r, p, f;
  for (const auto& s : c.per_seed) {
    r.push_back(s.metrics.recall);
    p.push_back(s.metrics.precision);
    f.push_back(s.metrics.f1);
  }
  c.recall = summarize(r);
  c.precision = summarize(p);
  c.f1 = summarize(f);
}

ordered_json stat_json(const Cell& c, double Stat::*field) {
  return {{"recall", c.recall.*field}, {"precision", c.precision.*field}, {"f1", c.f1.*field}};
}

DatasetSnapshot reannotated_test(const model::ClassifierModel& m, const DatasetSnapshot& test,
                                 const TestReannotation& ra) {
  if (!ra.trusted || !ra.annotator) {
    throw PreconditionError("the reannotated variant needs a trusted set and an annotator");
  }
  const auto errors = influence::error_set(m, *ra.trusted);
  influence::InfluenceReport rep;
  rep.x = ra.top_x;
  if (!errors.empty()) {
    rep = influence::top_influence(errors, test, m.embed(test.samples()),
                                   m.embed(ra.trusted->samples), ra.top_x);
  }
  auto res = interventions::reannotate(test, rep, *ra.annotator);
  log::info("test_reannotated", {{"test", test.snapshot_id()},
                                 {"influential", rep.union_ids.size()},
                                 {"relabeled", res.records.size()}});
  return res.snapshot;
}

}  // namespace

EvalMatrix cross_evaluate(std::span<const ModelEntry> models, std::span<const TestEntry> tests,
                          const EvalConfig& cfg, const TestReannotation& ra) {
  cfg.validate();
  if (cfg.variant == TestVariant::kReannotated && (!ra.trusted || !ra.annotator)) {
    throw PreconditionError("the reannotated variant needs a trusted set and an annotator");
  }
  EvalMatrix out;
  for (const auto& me : models) {
    if (!me.model) throw PreconditionError("model entry '" + me.train + "' has no model");
    for (const auto& te : tests) {
      Cell& cell = out.cells[CellKey{me.train, te.id, me.approach}];
      try {
        DatasetSnapshot data = te.data;
        if (cfg.variant == TestVariant::kReannotated) data = reannotated_test(*me.model, data, ra);
        for (std::uint64_t seed : cfg.seeds) {
          const auto sample = balanced_sample(data, cfg.n_per_class, seed);
          const auto preds = me.model->predict(sample);
          cell.per_seed.push_back({seed, compute_metrics(preds, sample)});
        }
        finish_cell(cell);
      } catch (const Error& e) {
        cell = Cell{};
        cell.failed = true;
        cell.error = e.what();
        log::warn("cell_failed", {{"train", me.train},
                                  {"test", te.id},
                                  {"approach", me.approach},
                                  {"error", e.what()}});
      }
    }
  }
  return out;
}

ordered_json EvalMatrix::to_json() const {
  ordered_json cells_json = ordered_json::array();
  for (const auto& [k, c] : cells) {
    ordered_json j;
    j["train"] = k.train;
    j["test"] = k.test;
    j["approach"] = k.approach;
    j["failed"] = c.failed;
    if (c.failed) j["error"] = c.error;
    j["per_seed"] = ordered_json::array();
    for (const auto& s : c.per_seed) {
      j["per_seed"].push_back({{"seed", s.seed},
                               {"recall", s.metrics.recall},
                               {"precision", s.metrics.precision},
                               {"f1", s.metrics.f1}});
    }
    j["mean"] = stat_json(c, &Stat::mean);
    j["sd"] = stat_json(c, &Stat::sd);
    cells_json.push_back(std::move(j));
  }
  return {{"cells", cells_json}};
}

EvalMatrix EvalMatrix::from_json(const json& j) {
  EvalMatrix m;
  try {
    for (const auto& cj : j.at("cells")) {
      CellKey k{cj.at("train").get<std::string>(), cj.at("test").get<std::string>(),
                cj.at("approach").get<std::string>()};
      Cell c;
      c.failed = cj.at("failed").get<bool>();
      c.error = cj.value("error", "");
      for (const auto& s : cj.at("per_seed")) {
        c.per_seed.push_back({s.at("seed").get<std::uint64_t>(),
                              {s.at("precision").get<double>(), s.at("recall").get<double>(),
                               s.at("f1").get<double>()}});
      }
      for (auto [field, name] : {std::pair{&Stat::mean, "mean"}, std::pair{&Stat::sd, "sd"}}) {
        const auto& sj = cj.at(name);
        c.recall.*field = sj.at("recall").get<double>();
        c.precision.*field = sj.at("precision").get<double>();
        c.f1.*field = sj.at("f1").get<double>();
      }
      m.cells.emplace(std::move(k), std::move(c));
    }
  } catch (const json::exception& e) {
    throw FormatError(std::string("bad evaluation matrix: ") + e.what());
  }
  return m;
}

ReportFormat parse_format(std::string_view name) {
  if (name == "json") return ReportFormat::kJson;
  if (name == "csv") return ReportFormat::kCsv;
  if (name == "markdown" || name == "md") return ReportFormat::kMarkdown;
  throw PreconditionError("unknown report format '" + std::string(name) + "'");
}

std::string_view format_extension(ReportFormat f) {
  switch (f) {
    case ReportFormat::kJson: return "json";
    case ReportFormat::kCsv: return "csv";
    case ReportFormat::kMarkdown: return "md";
  }
  return "";
}

namespace {

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string md_field(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '|') out += '\\';
    out += c == '\n' ? ' ' : c;
  }
  return out;
}

std::string render_csv(const EvalMatrix& m) {
  std::string out = "train,test,approach,seed,recall,precision,f1\n";
  for (const auto& [k, c] : m.cells) {
    for (const auto& s : c.per_seed) {
      out += csv_field(k.train) + ',' + csv_field(k.test) + ',' + csv_field(k.approach) + ',' +
             std::to_string(s.seed) + ',' + fixed(s.metrics.recall, 6) + ',' +
             fixed(s.metrics.precision, 6) + ',' + fixed(s.metrics.f1, 6) + '\n';
    }
  }
  return out;
}

std::string render_markdown(const EvalMatrix& m) {
  std::set<std::string> tests;
  std::set<std::pair<std::string, std::string>> rows;
  for (const auto& [k, c] : m.cells) {
    tests.insert(k.test);
    rows.insert({k.train, k.approach});
  }
  std::ostringstream out;
  out << "| Train | Approach |";
  for (const auto& t : tests) out << ' ' << md_field(t) << " R | " << md_field(t) << " F1 |";
  out << "\n|---|---|";
  for (std::size_t i = 0; i < tests.size(); ++i) out << "---|---|";
  out << '\n';
  for (const auto& [train, approach] : rows) {
    out << "| " << md_field(train) << " | " << md_field(approach) << " |";
    for (const auto& t : tests) {
      auto it = m.cells.find(CellKey{train, t, approach});
      if (it == m.cells.end()) {
        out << " | |";
      } else if (it->second.failed) {
        out << " failed | failed |";
      } else {
        const Cell& c = it->second;
        out << ' ' << fixed(c.recall.mean, 3) << " ± " << fixed(c.recall.sd, 3) << " | "
            << fixed(c.f1.mean, 3) << " ± " << fixed(c.f1.sd, 3) << " |";
      }
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace

std::string emit_report(const EvalMatrix& m, ReportFormat format) {
  if (m.cells.empty()) throw PreconditionError("evaluation matrix is empty");
  switch (format) {
    case ReportFormat::kJson: return m.to_json().dump(2) + "\n";
    case ReportFormat::kCsv: return render_csv(m);
    case ReportFormat::kMarkdown: return render_markdown(m);
  }
  return {};
}

EvalMatrix read_matrix(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open '" + path.string() + "'");
  try {
    return EvalMatrix::from_json(json::parse(in));
  } catch (const json::exception& e) {
    throw FormatError("bad JSON in '" + path.string() + "': " + e.what());
  }
}

}  // namespace hscurate::eval
