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

#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "baved/config.hpp"
#include "baved/dataset.hpp"
#include "baved/metrics.hpp"
#include "baved/trainer.hpp"

namespace baved {

inline constexpr const char* kToolVersion = "0.1.0";

struct CorpusSummary {
  Dataset dataset;
  std::vector<double> durations_s;  // record order

  double total_minutes() const;
};

/// Scans `config.corpus_root` and probes every duration.
CorpusSummary scan_corpus(const RunConfig& config);

/// Writes manifest.csv and returns the hex SHA-256 of its bytes.
std::string write_manifest(const CorpusSummary& corpus, const std::filesystem::path& path);

std::string sha256_file(const std::filesystem::path& path);

/// Wall-clock seconds per named stage, in insertion order.
class StageTimer {
 public:
  void start(std::string stage);
  void stop();
  const std::vector<std::pair<std::string, double>>& entries() const { return entries_; }

 private:
  std::vector<std::pair<std::string, double>> entries_;
  std::string current_;
  double began_ = 0.0;
};

struct RunResult {
  TrainedModel model;
  TrainingHistory history;
  metrics::MetricsReport report;
  std::filesystem::path dir;
};

/// The `train` verb: scan, split, extract (via the cache), train, evaluate
/// on the validation ids, and write manifest.csv, split.csv, history.csv,
/// metrics.json, confusion.csv, head.safetensors, run_manifest.json and
/// (when enabled) plots/ under `out_dir`.
RunResult run_single(const RunConfig& config, const std::filesystem::path& out_dir);

struct ComparisonRow {
  std::string model;
  std::string head;
  double length_min = 0.0;
  std::size_t records = 0;
  double accuracy = 0.0;
  double macro_f1 = 0.0;
  std::string metrics_file;  // relative to the comparison directory
};

struct ComparisonResult {
  std::vector<ComparisonRow> best;  // one per backbone
  std::vector<ComparisonRow> all;   // one per (backbone, head)
};

/// The `compare` verb: every configured backbone and head over one shared
/// split. Each pairing gets `<backbone>__<head>/`; the top level holds
/// comparison.csv (best head per backbone), comparison_all.csv,
/// comparison.md, the shared manifest and split, and multi-series plots.
ComparisonResult run_compare(const RunConfig& config, const std::filesystem::path& out_dir);

/// The `evaluate` verb: scores a saved head on the configured split's
/// validation ids and writes metrics.json and confusion.csv. Throws
/// ArtifactMismatch when the artifact's backbone disagrees with its
/// features.
metrics::MetricsReport evaluate_saved_head(const RunConfig& config, const std::filesystem::path& model_path,
                                           const std::filesystem::path& out_dir);

/// The `report` verb: re-renders plots (and the comparison tables of a
/// compare directory) from the CSV and JSON files already in `dir`.
std::vector<std::filesystem::path> regenerate_report(const std::filesystem::path& dir);

/// Per-record cache fill for every record; returns the extraction counts.
ExtractionStats extract_all(const RunConfig& config);

void write_comparison_csv(const std::vector<ComparisonRow>& rows, const std::filesystem::path& path);
std::vector<ComparisonRow> read_comparison_csv(const std::filesystem::path& path);

}  // namespace baved
