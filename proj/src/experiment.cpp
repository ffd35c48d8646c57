// Copyright 2026 The baved-ser Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "baved/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>
#include <openssl/evp.h>
#include <spdlog/spdlog.h>

#include "baved/backbone.hpp"
#include "baved/errors.hpp"
#include "baved/heads.hpp"
#include "baved/plots.hpp"

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace baved {
namespace {

double now_s() {
  return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch()).count();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw WriteFailure("cannot open " + path.string());
  out << text;
  if (!out) throw WriteFailure("failed writing " + path.string());
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw WriteFailure("cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void make_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw WriteFailure("cannot create " + dir.string() + ": " + ec.message());
}

std::vector<std::string> all_ids(const Dataset& dataset) {
  std::vector<std::string> ids;
  ids.reserve(dataset.records.size());
  for (const auto& r : dataset.records) ids.push_back(r.record_id);
  return ids;
}

std::string series_label(const BackboneId& backbone, heads::HeadKind head) {
  return std::string(to_string(backbone.name)) + "/" + std::string(heads::to_string(head));
}

std::string pairing_dir(BackboneName name, heads::HeadKind head) {
  return std::string(to_string(name)) + "__" + std::string(heads::to_string(head));
}

ordered_json fingerprint(const CorpusSummary& corpus, const std::string& manifest_sha) {
  ordered_json fp;
  fp["records"] = corpus.dataset.records.size();
  fp["speakers"] = corpus.dataset.speaker_count();
  const auto counts = corpus.dataset.class_counts();
  fp["class_counts"] = {counts[0], counts[1], counts[2]};
  fp["total_minutes"] = corpus.total_minutes();
  fp["manifest_sha256"] = manifest_sha;
  return fp;
}

ordered_json config_json(const RunConfig& config) {
  ordered_json j;
  for (const auto& [k, v] : config.resolved()) j[k] = v;
  return j;
}

ordered_json stats_json(const ExtractionStats& s) {
  return ordered_json{{"cache_hits", s.cache_hits}, {"extracted", s.extracted},
                      {"recomputed_corrupt", s.recomputed_corrupt}};
}

ordered_json timings_json(const StageTimer& timer) {
  ordered_json j = ordered_json::object();
  for (const auto& [stage, secs] : timer.entries()) j[stage] = secs;
  return j;
}

void write_run_outputs(const fs::path& dir, const TrainedModel& model, const TrainingHistory& history,
                       const metrics::MetricsReport& report) {
  history.write_csv(dir / "history.csv");
  write_text(dir / "metrics.json", metrics::to_json(report));
  metrics::write_confusion_csv(report.confusion, dir / "confusion.csv");
  heads::save_head(dir / "head.safetensors", *model.head, model.artifact_info());
}

const ComparisonRow& pick_best(const std::vector<const ComparisonRow*>& rows) {
  const ComparisonRow* best = rows.front();
  for (const auto* r : rows)
    if (r->accuracy > best->accuracy || (r->accuracy == best->accuracy && r->macro_f1 > best->macro_f1)) best = r;
  return *best;
}

std::vector<ComparisonRow> best_per_model(const std::vector<ComparisonRow>& all) {
  std::vector<std::string> order;
  for (const auto& r : all)
    if (std::find(order.begin(), order.end(), r.model) == order.end()) order.push_back(r.model);
  std::vector<ComparisonRow> best;
  for (const auto& model : order) {
    std::vector<const ComparisonRow*> rows;
    for (const auto& r : all)
      if (r.model == model) rows.push_back(&r);
    best.push_back(pick_best(rows));
  }
  return best;
}

void write_comparison_md(const std::vector<ComparisonRow>& best, const std::vector<ComparisonRow>& all,
                         const fs::path& path) {
  std::ostringstream md;
  char line[256];
  md << "| model | head | length (min) | no. records | accuracy | macro-F1 |\n";
  md << "|---|---|---|---|---|---|\n";
  for (const auto& r : best) {
    std::snprintf(line, sizeof line, "| %s | %s | %.1f | %zu | %.4f | %.4f |\n", r.model.c_str(), r.head.c_str(),
                  r.length_min, r.records, r.accuracy, r.macro_f1);
    md << line;
  }
  md << "\nAll heads:\n\n| model | head | accuracy | macro-F1 | metrics |\n|---|---|---|---|---|\n";
  for (const auto& r : all) {
    std::snprintf(line, sizeof line, "| %s | %s | %.4f | %.4f | %s |\n", r.model.c_str(), r.head.c_str(),
                  r.accuracy, r.macro_f1, r.metrics_file.c_str());
    md << line;
  }
  write_text(path, md.str());
}

std::vector<fs::path> comparison_plots(const fs::path& dir, const std::vector<ComparisonRow>& best) {
  std::vector<plots::HistorySeries> series;
  std::vector<plots::LabeledReport> reports;
  for (const auto& r : best) {
    const fs::path metrics_path = dir / r.metrics_file;
    series.push_back({r.model + "/" + r.head, TrainingHistory::read_csv(metrics_path.parent_path() / "history.csv")});
    reports.push_back({r.model + "/" + r.head, metrics::report_from_json(read_text(metrics_path))});
  }
  return plots::emit_plots(series, reports, dir / "plots");
}

}  // namespace

double CorpusSummary::total_minutes() const {
  return std::accumulate(durations_s.begin(), durations_s.end(), 0.0) / 60.0;
}

CorpusSummary scan_corpus(const RunConfig& config) {
  CorpusSummary out;
  out.dataset = scan_dataset(config.corpus_root, config.scan);
  out.durations_s = probe_durations(out.dataset);
  spdlog::info("total duration {:.2f} min", out.total_minutes());
  return out;
}

std::string sha256_file(const fs::path& path) {
  const std::string bytes = read_text(path);
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw WriteFailure("sha256 failed for " + path.string());
  std::string hex;
  char buf[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(buf, sizeof buf, "%02x", digest[i]);
    hex += buf;
  }
  return hex;
}

std::string write_manifest(const CorpusSummary& corpus, const fs::path& path) {
  write_manifest_csv(corpus.dataset, corpus.durations_s, path);
  return sha256_file(path);
}

void StageTimer::start(std::string stage) {
  current_ = std::move(stage);
  began_ = now_s();
}

void StageTimer::stop() {
  entries_.emplace_back(current_, now_s() - began_);
}

RunResult run_single(const RunConfig& config, const fs::path& out_dir) {
  config.experiment.validate();
  make_dir(out_dir);
  StageTimer timer;

  timer.start("scan");
  const CorpusSummary corpus = scan_corpus(config);
  const std::string manifest_sha = write_manifest(corpus, out_dir / "manifest.csv");
  timer.stop();

  timer.start("split");
  const SplitAssignment split = make_split(corpus.dataset, config.experiment.split);
  write_split_csv(split, out_dir / "split.csv");
  timer.stop();

  timer.start("extract");
  const auto backbone = load_backbone(config.experiment.backbone, config.loader);
  ExtractionStats stats;
  const FeatureStore features =
      collect_features(corpus.dataset, all_ids(corpus.dataset), *backbone, config.cache, config.workers, &stats);
  timer.stop();

  timer.start("train");
  auto [model, history] = train(config.experiment, corpus.dataset, split, features);
  timer.stop();

  timer.start("evaluate");
  const auto report = evaluate(model, corpus.dataset, split.val_ids, features);
  write_run_outputs(out_dir, model, history, report);
  timer.stop();

  if (config.emit_plots) {
    timer.start("plots");
    const std::string label = series_label(config.experiment.backbone, config.experiment.head.kind);
    plots::emit_plots({{label, history}}, {{label, report}}, out_dir / "plots");
    timer.stop();
  }

  ordered_json manifest;
  manifest["tool"] = "baved-ser";
  manifest["tool_version"] = kToolVersion;
  manifest["mode"] = "train";
  manifest["config"] = config_json(config);
  manifest["head_config"] = ordered_json::parse(config.experiment.head.to_json());
  manifest["corpus"] = fingerprint(corpus, manifest_sha);
  manifest["split"] = {{"train", split.train_ids.size()}, {"val", split.val_ids.size()}};
  manifest["extraction"] = stats_json(stats);
  manifest["final_epoch"] = model.final_epoch;
  manifest["timings_s"] = timings_json(timer);
  write_text(out_dir / "run_manifest.json", manifest.dump(2) + "\n");

  spdlog::info("validation accuracy {:.4f}, macro-F1 {:.4f}", report.accuracy, report.macro_f1);
  return RunResult{model, history, report, out_dir};
}

ComparisonResult run_compare(const RunConfig& config, const fs::path& out_dir) {
  config.experiment.validate();
  make_dir(out_dir);
  StageTimer timer;

  timer.start("scan");
  const CorpusSummary corpus = scan_corpus(config);
  const std::string manifest_sha = write_manifest(corpus, out_dir / "manifest.csv");
  timer.stop();

  const SplitAssignment split = make_split(corpus.dataset, config.experiment.split);
  write_split_csv(split, out_dir / "split.csv");

  ComparisonResult result;
  ordered_json extraction = ordered_json::object();
  for (BackboneName name : config.compare_backbones) {
    const RunConfig bc = name == config.experiment.backbone.name ? config : config.with_backbone(name);
    const std::string bname(to_string(name));

    timer.start("extract:" + bname);
    const auto backbone = load_backbone(bc.experiment.backbone, bc.loader);
    ExtractionStats stats;
    const FeatureStore features =
        collect_features(corpus.dataset, all_ids(corpus.dataset), *backbone, bc.cache, bc.workers, &stats);
    extraction[bname] = stats_json(stats);
    timer.stop();

    for (heads::HeadKind kind : config.compare_heads) {
      ExperimentConfig x = bc.experiment;
      x.head.kind = kind;
      const std::string sub = pairing_dir(name, kind);
      timer.start("train:" + sub);
      spdlog::info("training {} head on {}", heads::to_string(kind), bname);
      auto [model, history] = train(x, corpus.dataset, split, features);
      const auto report = evaluate(model, corpus.dataset, split.val_ids, features);
      make_dir(out_dir / sub);
      write_run_outputs(out_dir / sub, model, history, report);
      timer.stop();
      if (config.emit_plots) {
        const std::string label = series_label(x.backbone, kind);
        plots::emit_plots({{label, history}}, {{label, report}}, out_dir / sub / "plots");
      }
      result.all.push_back(ComparisonRow{bname, std::string(heads::to_string(kind)), corpus.total_minutes(),
                                         corpus.dataset.records.size(), report.accuracy, report.macro_f1,
                                         sub + "/metrics.json"});
      spdlog::info("{}: accuracy {:.4f}, macro-F1 {:.4f}", sub, report.accuracy, report.macro_f1);
    }
  }

  result.best = best_per_model(result.all);
  write_comparison_csv(result.best, out_dir / "comparison.csv");
  write_comparison_csv(result.all, out_dir / "comparison_all.csv");
  write_comparison_md(result.best, result.all, out_dir / "comparison.md");
  if (config.emit_plots) {
    timer.start("plots");
    comparison_plots(out_dir, result.best);
    timer.stop();
  }

  ordered_json manifest;
  manifest["tool"] = "baved-ser";
  manifest["tool_version"] = kToolVersion;
  manifest["mode"] = "compare";
  manifest["config"] = config_json(config);
  manifest["corpus"] = fingerprint(corpus, manifest_sha);
  manifest["split"] = {{"train", split.train_ids.size()}, {"val", split.val_ids.size()}};
  manifest["extraction"] = extraction;
  manifest["timings_s"] = timings_json(timer);
  write_text(out_dir / "run_manifest.json", manifest.dump(2) + "\n");
  return result;
}

metrics::MetricsReport evaluate_saved_head(const RunConfig& config, const fs::path& model_path,
                                           const fs::path& out_dir) {
  TrainedModel model = TrainedModel::from_artifact(heads::load_head(model_path));
  make_dir(out_dir);
  const CorpusSummary corpus = scan_corpus(config);
  const SplitAssignment split = make_split(corpus.dataset, config.experiment.split);
  const auto backbone = load_backbone(model.backbone, config.loader);
  const std::vector<std::string> ids(split.val_ids.begin(), split.val_ids.end());
  const FeatureStore features = collect_features(corpus.dataset, ids, *backbone, config.cache, config.workers);
  const auto report = evaluate(model, corpus.dataset, split.val_ids, features);
  write_text(out_dir / "metrics.json", metrics::to_json(report));
  metrics::write_confusion_csv(report.confusion, out_dir / "confusion.csv");
  spdlog::info("accuracy {:.4f}, macro-F1 {:.4f} over {} records", report.accuracy, report.macro_f1, ids.size());
  return report;
}

std::vector<fs::path> regenerate_report(const fs::path& dir) {
  if (fs::exists(dir / "comparison_all.csv")) {
    const auto all = read_comparison_csv(dir / "comparison_all.csv");
    if (all.empty()) throw EmptyEvalSet(dir.string() + "/comparison_all.csv has no rows");
    const auto best = best_per_model(all);
    write_comparison_csv(best, dir / "comparison.csv");
    write_comparison_md(best, all, dir / "comparison.md");
    return comparison_plots(dir, best);
  }
  const auto history = TrainingHistory::read_csv(dir / "history.csv");
  const auto report = metrics::report_from_json(read_text(dir / "metrics.json"));
  std::string label = "model";
  if (fs::exists(dir / "head.safetensors")) {
    const auto loaded = heads::load_head(dir / "head.safetensors");
    label = series_label(loaded.info.backbone, loaded.head->config().kind);
  }
  return plots::emit_plots({{label, history}}, {{label, report}}, dir / "plots");
}

ExtractionStats extract_all(const RunConfig& config) {
  const CorpusSummary corpus = scan_corpus(config);
  const auto backbone = load_backbone(config.experiment.backbone, config.loader);
  ExtractionStats stats;
  CacheOptions cache = config.cache;
  cache.enabled = true;
  collect_features(corpus.dataset, all_ids(corpus.dataset), *backbone, cache, config.workers, &stats);
  return stats;
}

void write_comparison_csv(const std::vector<ComparisonRow>& rows, const fs::path& path) {
  std::ostringstream out;
  out << "model,head,length_min,records,accuracy,macro_f1,metrics_file\n";
  char buf[128];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%.6f,%zu,%.17g,%.17g", r.length_min, r.records, r.accuracy, r.macro_f1);
    out << r.model << ',' << r.head << ',' << buf << ',' << r.metrics_file << '\n';
  }
  write_text(path, out.str());
}

std::vector<ComparisonRow> read_comparison_csv(const fs::path& path) {
  std::istringstream in(read_text(path));
  std::string line;
  std::getline(in, line);
  if (line != "model,head,length_min,records,accuracy,macro_f1,metrics_file")
    throw ConfigError(path.string() + ": unexpected comparison header");
  std::vector<ComparisonRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) f.push_back(cell);
    if (f.size() != 7) throw ConfigError(path.string() + ": malformed row '" + line + "'");
    rows.push_back(ComparisonRow{f[0], f[1], std::stod(f[2]), static_cast<std::size_t>(std::stoull(f[3])),
                                 std::stod(f[4]), std::stod(f[5]), f[6]});
  }
  return rows;
}

}  // namespace baved
