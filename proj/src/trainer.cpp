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

#include "baved/trainer.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include <spdlog/spdlog.h>

#include "baved/errors.hpp"
#include "baved/feature_cache.hpp"
#include "baved/random.hpp"

namespace fs = std::filesystem;

namespace baved {

SplitAssignment make_split(const Dataset& dataset, const SplitConfig& config) {
  return config.speaker_disjoint ? speaker_disjoint_split(dataset, config.ratios, config.seed)
                                 : stratified_split(dataset, config.ratios, config.seed);
}

void ExperimentConfig::validate() const {
  if (epochs < 1) throw ConfigError("train.epochs must be >= 1");
  if (batch_size < 1) throw ConfigError("train.batch_size must be >= 1");
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate))
    throw ConfigError("train.learning_rate must be a finite nonnegative number");
  head.validate();
}

void TrainingHistory::write_csv(const fs::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw WriteFailure("cannot open " + path.string());
  out << "epoch,train_loss,val_loss,val_macro_f1,val_accuracy\n";
  char line[160];
  for (const auto& e : epochs) {
    std::snprintf(line, sizeof line, "%d,%.17g,%.17g,%.17g,%.17g\n", e.epoch, e.train_loss, e.val_loss,
                  e.val_macro_f1, e.val_accuracy);
    out << line;
  }
  if (!out) throw WriteFailure("failed writing " + path.string());
}

TrainingHistory TrainingHistory::read_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open history " + path.string());
  std::string line;
  std::getline(in, line);
  if (line != "epoch,train_loss,val_loss,val_macro_f1,val_accuracy")
    throw ConfigError(path.string() + ": unexpected history header");
  TrainingHistory h;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    EpochRecord e;
    if (std::sscanf(line.c_str(), "%d,%lf,%lf,%lf,%lf", &e.epoch, &e.train_loss, &e.val_loss,
                    &e.val_macro_f1, &e.val_accuracy) != 5)
      throw ConfigError(path.string() + ": bad row '" + line + "'");
    h.epochs.push_back(e);
  }
  return h;
}

TrainedModel TrainedModel::from_artifact(heads::LoadedHead loaded) {
  TrainedModel m;
  m.head = std::move(loaded.head);
  m.backbone = loaded.info.backbone;
  m.seed = loaded.info.seed;
  m.final_epoch = loaded.info.final_epoch;
  return m;
}

const FeatureSequence& FeatureStore::at(const std::string& record_id) const {
  const auto it = features_.find(record_id);
  if (it == features_.end()) throw EmptyEvalSet("no features for record '" + record_id + "'");
  return it->second;
}

void FeatureStore::insert(FeatureSequence features) {
  auto id = features.record_id;
  features_.insert_or_assign(std::move(id), std::move(features));
}

FeatureStore collect_features(const Dataset& dataset, const std::vector<std::string>& ids,
                              const Backbone& backbone, const CacheOptions& cache, int workers,
                              ExtractionStats* stats) {
  FeatureStore store;
  std::mutex mu;
  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> hits{0}, extracted{0}, corrupt{0};
  std::exception_ptr failure;

  auto work = [&] {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= ids.size()) return;
      {
        std::lock_guard lock(mu);
        if (failure) return;
      }
      try {
        const RecordMeta& rec = dataset.find(ids[i]);
        std::optional<FeatureSequence> feats;
        if (cache.enabled) {
          try {
            feats = cache_get(rec.record_id, backbone.id(), cache.root);
          } catch (const CorruptCacheEntry& e) {
            spdlog::warn("{}; recomputing", e.what());
            fs::remove(cache_entry_path(cache.root, backbone.id(), rec.record_id));
            ++corrupt;
          }
        }
        if (feats) {
          ++hits;
        } else {
          const Waveform wave = load_audio(rec, dataset.root);
          feats = extract_features(wave, backbone, rec.record_id);
          if (cache.enabled) cache_put(*feats, cache.root);
          ++extracted;
        }
        std::lock_guard lock(mu);
        store.insert(std::move(*feats));
      } catch (...) {
        std::lock_guard lock(mu);
        if (!failure) failure = std::current_exception();
        return;
      }
    }
  };

  const int n_threads = backbone.reentrant() ? std::max(1, workers) : 1;
  if (n_threads == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
  spdlog::info("features for {} records via {}: {} cache hits, {} extracted", ids.size(),
               backbone.id().cache_dir_name(), hits.load(), extracted.load());
  if (stats) *stats = {hits.load(), extracted.load(), corrupt.load()};
  return store;
}

AdamOptimizer::AdamOptimizer(double learning_rate, double beta1, double beta2, double eps)
    : lr_(learning_rate), beta1_(beta1), beta2_(beta2), eps_(eps) {}

void AdamOptimizer::step(std::vector<heads::Parameter>& params) {
  if (m_.empty()) {
    for (const auto& p : params) {
      m_.push_back(Eigen::MatrixXd::Zero(p.value.rows(), p.value.cols()));
      v_.push_back(Eigen::MatrixXd::Zero(p.value.rows(), p.value.cols()));
    }
  }
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& p = params[i];
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * p.grad;
    v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * p.grad.cwiseAbs2();
    p.value.array() -= lr_ * (m_[i].array() / c1) / ((v_[i].array() / c2).sqrt() + eps_);
  }
}

namespace {

struct ValidationPass {
  double loss = 0.0;
  metrics::MetricsReport report;
};

ValidationPass validate_epoch(const heads::Head& head, const Dataset& dataset,
                              const std::vector<std::string>& val_ids, const FeatureStore& features) {
  std::vector<int> truth, predicted;
  double loss = 0.0;
  for (const auto& id : val_ids) {
    const int label = dataset.find(id).emotion_level;
    const auto logits = head.forward(features.at(id).frames);
    loss += heads::cross_entropy(logits.scores, label);
    truth.push_back(label);
    predicted.push_back(logits.argmax());
  }
  return {loss / static_cast<double>(val_ids.size()),
          metrics::report(metrics::confusion_matrix(truth, predicted))};
}

}  // namespace

std::pair<TrainedModel, TrainingHistory> train(const ExperimentConfig& config, const Dataset& dataset,
                                               const SplitAssignment& split, const FeatureStore& features,
                                               const TrainerHooks& hooks) {
  config.validate();
  if (split.train_ids.empty()) throw EmptyEvalSet("training split is empty");
  if (split.val_ids.empty()) throw EmptyEvalSet("validation split is empty");

  const std::vector<std::string> train_ids(split.train_ids.begin(), split.train_ids.end());
  const std::vector<std::string> val_ids(split.val_ids.begin(), split.val_ids.end());
  std::map<std::string, int> labels;
  for (const auto& id : train_ids) labels[id] = dataset.find(id).emotion_level;

  const int dim = config.backbone.width();
  std::shared_ptr<heads::Head> head = heads::make_head(config.head, dim, config.seed);
  {
    std::vector<heads::TrainingExample> all;
    for (const auto& id : train_ids) all.push_back({&features.at(id).frames, labels[id]});
    head->fit_standardizer(all);
  }

  AdamOptimizer optimizer(config.learning_rate);
  Rng shuffle_rng(derive_seed(config.seed, "epoch_shuffle"));
  Rng dropout_rng(derive_seed(config.seed, "dropout"));

  TrainingHistory history;
  std::vector<heads::Parameter> best_params;
  double best_val = std::numeric_limits<double>::infinity();
  int best_epoch = 0;

  const auto batch_size = static_cast<std::size_t>(config.batch_size);
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    std::vector<std::string> order = train_ids;
    shuffle_rng.shuffle(order);
    double loss_sum = 0.0;
    int batch_index = 0;
    for (std::size_t start = 0; start < order.size(); start += batch_size, ++batch_index) {
      const std::size_t end = std::min(order.size(), start + batch_size);
      std::vector<heads::TrainingExample> batch;
      for (std::size_t k = start; k < end; ++k) {
        batch.push_back({&features.at(order[k]).frames, labels[order[k]]});
        if (hooks.on_gradient_example) hooks.on_gradient_example(order[k]);
      }
      const double loss = head->loss_and_gradients(batch, &dropout_rng);
      if (!std::isfinite(loss))
        throw NonFiniteLoss("epoch " + std::to_string(epoch) + ", batch " + std::to_string(batch_index));
      optimizer.step(head->parameters());
      loss_sum += loss * static_cast<double>(end - start);
      spdlog::debug("epoch {} batch {} loss {:.6f}", epoch, batch_index, loss);
      if (hooks.on_step) hooks.on_step(epoch, batch_index, loss);
    }

    const ValidationPass val = validate_epoch(*head, dataset, val_ids, features);
    EpochRecord rec{epoch, loss_sum / static_cast<double>(order.size()), val.loss, val.report.macro_f1,
                    val.report.accuracy};
    if (!std::isfinite(rec.val_loss)) throw NonFiniteLoss("validation loss at epoch " + std::to_string(epoch));
    history.epochs.push_back(rec);
    spdlog::info("epoch {}/{}  TL {:.4f}  VL {:.4f}  val macro-F1 {:.4f}  val acc {:.4f}", epoch,
                 config.epochs, rec.train_loss, rec.val_loss, rec.val_macro_f1, rec.val_accuracy);

    if (config.keep_best_val && rec.val_loss < best_val) {
      best_val = rec.val_loss;
      best_epoch = epoch;
      best_params = head->parameters();
    }
  }

  TrainedModel model;
  model.backbone = config.backbone;
  model.seed = config.seed;
  model.final_epoch = config.epochs;
  if (config.keep_best_val && !best_params.empty()) {
    head->parameters() = best_params;
    model.final_epoch = best_epoch;
  }
  model.head = std::move(head);
  return {std::move(model), std::move(history)};
}

std::pair<TrainedModel, TrainingHistory> train(const ExperimentConfig& config, const Dataset& dataset,
                                               const FeatureStore& features, const TrainerHooks& hooks) {
  return train(config, dataset, make_split(dataset, config.split), features, hooks);
}

metrics::MetricsReport evaluate_predictor(const Predictor& predict, const Dataset& dataset,
                                          const std::set<std::string>& ids, const FeatureStore& features) {
  if (ids.empty()) throw EmptyEvalSet("no records to evaluate");
  std::vector<int> truth, predicted;
  truth.reserve(ids.size());
  predicted.reserve(ids.size());
  for (const auto& id : ids) {
    truth.push_back(dataset.find(id).emotion_level);
    predicted.push_back(predict(features.at(id)));
  }
  return metrics::report(metrics::confusion_matrix(truth, predicted));
}

metrics::MetricsReport evaluate(const TrainedModel& model, const Dataset& dataset,
                                const std::set<std::string>& ids, const FeatureStore& features) {
  const auto& head = *model.head;
  return evaluate_predictor([&](const FeatureSequence& f) { return head.forward(f.frames).argmax(); },
                            dataset, ids, features);
}

}  // namespace baved
