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

// baved-ser: scan, split, extract, train, evaluate, compare and report.
//
// Exit codes: 0 success, 1 I/O or unexpected failure, 2 configuration
// error, 3 data error, 4 training error.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "baved/config.hpp"
#include "baved/errors.hpp"
#include "baved/experiment.hpp"

namespace fs = std::filesystem;
using namespace baved;

namespace {

struct Globals {
  std::string config_path;
  std::string out;
  std::optional<std::uint64_t> seed;
  bool stub = false;
  std::string cache_root;
  std::string corpus;
  std::optional<int> workers;
  std::string model;
  bool verbose = false;
  bool quiet = false;
};

int exit_code(ErrorCategory c) {
  switch (c) {
    case ErrorCategory::kConfig: return 2;
    case ErrorCategory::kData: return 3;
    case ErrorCategory::kTraining: return 4;
    case ErrorCategory::kIo: return 1;
  }
  return 1;
}

RunConfig effective_config(const Globals& g) {
  RunConfig c = g.config_path.empty() ? parse_config("") : load_config(g.config_path);
  if (!g.corpus.empty()) c.corpus_root = g.corpus;
  if (g.seed) {
    c.experiment.seed = *g.seed;
    c.experiment.split.seed = *g.seed;
  }
  if (g.stub) {
    const int layer = c.experiment.backbone.layer;
    c.experiment.backbone = BackboneId::stub_of(c.experiment.backbone.name);
    c.experiment.backbone.layer = layer;
  }
  if (!g.cache_root.empty()) c.cache.root = g.cache_root;
  if (g.workers) c.workers = *g.workers;
  if (c.corpus_root.empty()) throw ConfigError("no corpus root: set corpus.root or pass --corpus");
  return c;
}

fs::path out_dir(const Globals& g, const char* fallback) {
  return g.out.empty() ? fs::path("runs") / fallback : fs::path(g.out);
}

void print_scan(const CorpusSummary& corpus) {
  const auto& d = corpus.dataset;
  const auto counts = d.class_counts();
  std::printf("records        %zu\n", d.records.size());
  std::printf("speakers       %zu\n", d.speaker_count());
  std::printf("level counts   0:%zu 1:%zu 2:%zu\n", counts[0], counts[1], counts[2]);
  const auto recs = d.gender_record_counts();
  const auto spk = d.gender_speaker_counts();
  for (Gender g : {Gender::kMale, Gender::kFemale}) {
    const auto r = recs.count(g) ? recs.at(g) : 0;
    const auto s = spk.count(g) ? spk.at(g) : 0;
    std::printf("%-14s %zu records, %zu speakers\n", std::string(to_string(g)).c_str(), r, s);
  }
  std::printf("total minutes  %.3f\n", corpus.total_minutes());
}

int run(const std::string& verb, const Globals& g) {
  if (verb == "report") {
    if (g.out.empty()) throw ConfigError("report needs --out <run directory>");
    for (const auto& p : regenerate_report(g.out)) std::printf("%s\n", p.string().c_str());
    return 0;
  }

  const RunConfig config = effective_config(g);
  if (verb == "scan") {
    const auto corpus = scan_corpus(config);
    print_scan(corpus);
    if (!g.out.empty()) {
      fs::create_directories(g.out);
      write_manifest(corpus, fs::path(g.out) / "manifest.csv");
    }
  } else if (verb == "split") {
    const auto corpus = scan_corpus(config);
    const auto split = make_split(corpus.dataset, config.experiment.split);
    const fs::path dir = out_dir(g, "split");
    fs::create_directories(dir);
    write_split_csv(split, dir / "split.csv");
    std::printf("train %zu, val %zu -> %s\n", split.train_ids.size(), split.val_ids.size(),
                (dir / "split.csv").string().c_str());
  } else if (verb == "extract") {
    const auto stats = extract_all(config);
    std::printf("cache hits %zu, extracted %zu, recomputed %zu\n", stats.cache_hits, stats.extracted,
                stats.recomputed_corrupt);
  } else if (verb == "train") {
    const auto result = run_single(config, out_dir(g, "train"));
    std::printf("accuracy %.4f  macro-F1 %.4f  -> %s\n", result.report.accuracy, result.report.macro_f1,
                result.dir.string().c_str());
  } else if (verb == "evaluate") {
    if (g.model.empty()) throw ConfigError("evaluate needs --model <head.safetensors>");
    const auto report = evaluate_saved_head(config, g.model, out_dir(g, "evaluate"));
    std::printf("accuracy %.4f  macro-F1 %.4f\n", report.accuracy, report.macro_f1);
  } else if (verb == "compare") {
    const fs::path dir = out_dir(g, "compare");
    const auto result = run_compare(config, dir);
    std::printf("%-16s %-7s %10s %8s %9s %9s\n", "model", "head", "length_min", "records", "accuracy", "macro_f1");
    for (const auto& r : result.best)
      std::printf("%-16s %-7s %10.2f %8zu %9.4f %9.4f\n", r.model.c_str(), r.head.c_str(), r.length_min, r.records,
                  r.accuracy, r.macro_f1);
    std::printf("-> %s\n", (dir / "comparison.csv").string().c_str());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Emotion-level recognition experiments on BAVED-style corpora"};
  app.require_subcommand(1, 1);
  app.fallthrough();
  Globals g;
  app.add_option("--config", g.config_path, "YAML config with dotted keys");
  app.add_option("--out", g.out, "Artifact directory");
  app.add_option("--seed", g.seed, "Overrides train.seed and split.seed");
  app.add_flag("--stub-backbone", g.stub, "Use the deterministic stub backbone");
  app.add_option("--cache-root", g.cache_root, "Feature cache root");
  app.add_option("--corpus", g.corpus, "Corpus root (overrides corpus.root)");
  app.add_option("--workers", g.workers, "Extraction threads");
  app.add_flag("-v,--verbose", g.verbose, "Debug logging");
  app.add_flag("-q,--quiet", g.quiet, "Warnings and errors only");

  app.add_subcommand("scan", "Scan the corpus and print its summary");
  app.add_subcommand("split", "Write the train/validation split");
  app.add_subcommand("extract", "Fill the feature cache");
  app.add_subcommand("train", "Train one head and write a run directory");
  app.add_subcommand("evaluate", "Score a saved head on the validation split")
      ->add_option("--model", g.model, "Trained head artifact")
      ->required();
  app.add_subcommand("compare", "Train every backbone/head pairing on one split");
  app.add_subcommand("report", "Re-render plots and tables of a run directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  spdlog::set_level(g.verbose ? spdlog::level::debug : g.quiet ? spdlog::level::warn : spdlog::level::info);
  const std::string verb = app.get_subcommands().front()->get_name();
  try {
    return run(verb, g);
  } catch (const Error& e) {
    spdlog::error("{}", e.what());
    return exit_code(e.category());
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 1;
  }
}
