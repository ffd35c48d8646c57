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

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "baved/backbone.hpp"
#include "baved/dataset.hpp"
#include "baved/heads.hpp"
#include "baved/metrics.hpp"

namespace baved {

struct SplitConfig {
  SplitRatios ratios;
  std::uint64_t seed = 42;
  bool speaker_disjoint = false;
};

SplitAssignment make_split(const Dataset& dataset, const SplitConfig& config);

struct ExperimentConfig {
  BackboneId backbone = BackboneId::real(BackboneName::kWav2vec2Arabic);
  heads::HeadConfig head;
  int epochs = 5;
  int batch_size = 32;
  double learning_rate = 1e-3;
  std::uint64_t seed = 42;
  SplitConfig split;
  /// Report the lowest-validation-loss epoch instead of the last one.
  bool keep_best_val = false;

  /// Throws ConfigError.
  void validate() const;
};

struct EpochRecord {
  int epoch = 0;  // 1-based
  double train_loss = 0.0;
  double val_loss = 0.0;
  double val_macro_f1 = 0.0;
  double val_accuracy = 0.0;

  bool operator==(const EpochRecord&) const = default;
};

struct TrainingHistory {
  std::vector<EpochRecord> epochs;

  /// `epoch,train_loss,val_loss,val_macro_f1,val_accuracy`, full precision.
  void write_csv(const std::filesystem::path& path) const;
  static TrainingHistory read_csv(const std::filesystem::path& path);
  bool operator==(const TrainingHistory&) const = default;
};

struct TrainedModel {
  std::shared_ptr<heads::Head> head;
  BackboneId backbone;
  std::uint64_t seed = 0;
  int final_epoch = 0;

  heads::HeadArtifactInfo artifact_info() const { return {backbone, seed, final_epoch}; }
  static TrainedModel from_artifact(heads::LoadedHead loaded);
};

/// Frozen-backbone features for a set of records, held in memory.
class FeatureStore {
 public:
  const FeatureSequence& at(const std::string& record_id) const;
  bool contains(const std::string& record_id) const { return features_.count(record_id) != 0; }
  std::size_t size() const { return features_.size(); }
  void insert(FeatureSequence features);

 private:
  std::map<std::string, FeatureSequence> features_;
};

struct CacheOptions {
  std::filesystem::path root = ".baved_cache";
  bool enabled = true;
};

struct ExtractionStats {
  std::size_t cache_hits = 0;
  std::size_t extracted = 0;
  std::size_t recomputed_corrupt = 0;
};

/// Cache-get-or-extract pre-pass over `ids`. Corrupt cache entries are
/// deleted and recomputed. Runs up to `workers` threads when the backbone
/// is reentrant.
FeatureStore collect_features(const Dataset& dataset, const std::vector<std::string>& ids,
                              const Backbone& backbone, const CacheOptions& cache, int workers = 1,
                              ExtractionStats* stats = nullptr);

struct TrainerHooks {
  /// Called once per example that contributes to a gradient step.
  std::function<void(const std::string& record_id)> on_gradient_example;
  /// Called after every optimizer step.
  std::function<void(int epoch, int batch, double loss)> on_step;
};

/// Adam with bias correction.
class AdamOptimizer {
 public:
  explicit AdamOptimizer(double learning_rate, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);
  void step(std::vector<heads::Parameter>& params);

 private:
  double lr_, beta1_, beta2_, eps_;
  long long t_ = 0;
  std::vector<Eigen::MatrixXd> m_, v_;
};

/// Trains a fresh head on `split.train_ids` and validates on
/// `split.val_ids` after every epoch. Throws NonFiniteLoss or EmptyEvalSet.
std::pair<TrainedModel, TrainingHistory> train(const ExperimentConfig& config, const Dataset& dataset,
                                               const SplitAssignment& split, const FeatureStore& features,
                                               const TrainerHooks& hooks = {});

/// Computes the split from config.split first.
std::pair<TrainedModel, TrainingHistory> train(const ExperimentConfig& config, const Dataset& dataset,
                                               const FeatureStore& features, const TrainerHooks& hooks = {});

using Predictor = std::function<int(const FeatureSequence&)>;

/// Throws EmptyEvalSet.
metrics::MetricsReport evaluate_predictor(const Predictor& predict, const Dataset& dataset,
                                          const std::set<std::string>& ids, const FeatureStore& features);

metrics::MetricsReport evaluate(const TrainedModel& model, const Dataset& dataset,
                                const std::set<std::string>& ids, const FeatureStore& features);

}  // namespace baved
