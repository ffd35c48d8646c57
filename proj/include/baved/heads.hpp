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
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "baved/features.hpp"
#include "baved/random.hpp"

namespace baved::heads {

inline constexpr int kNumClasses = 3;

enum class HeadKind { kMlp, kBiLstm };
enum class Activation { kRelu, kTanh };
enum class Pooling { kMean, kMax };

std::string_view to_string(HeadKind kind);
HeadKind parse_head_kind(std::string_view text);
std::string_view to_string(Activation a);
Activation parse_activation(std::string_view text);
std::string_view to_string(Pooling p);
Pooling parse_pooling(std::string_view text);

struct HeadConfig {
  HeadKind kind = HeadKind::kMlp;
  std::vector<int> hidden_sizes = {256, 64};  // mlp
  int lstm_hidden = 50;                       // bilstm
  double dropout = 0.1;
  Activation activation = Activation::kRelu;  // mlp
  Pooling pooling = Pooling::kMean;           // mlp
  /// Per-dimension input standardization fitted on the training ids.
  bool standardize = true;

  /// Throws ConfigError.
  void validate() const;
  std::string to_json() const;
  static HeadConfig from_json(const std::string& text);
  bool operator==(const HeadConfig&) const = default;
};

struct PooledFeature {
  Eigen::VectorXd vector;
};

PooledFeature pool_mean(const FeatureSequence& features);
PooledFeature pool_max(const FeatureSequence& features);

struct EmotionLogits {
  Eigen::Vector3d scores = Eigen::Vector3d::Zero();

  /// Shift-stable softmax.
  Eigen::Vector3d probabilities() const;
  int argmax() const;
};

/// Numerically stable -log softmax(scores)[label].
double cross_entropy(const Eigen::Vector3d& scores, int label);

struct Parameter {
  std::string name;
  Eigen::MatrixXd value;
  Eigen::MatrixXd grad;
};

struct TrainingExample {
  const FrameMatrix* frames = nullptr;
  int label = 0;
};

/// Zero-padded [B, T_max, D] sequence batch with true lengths. Rows past a
/// sequence's length are never read.
struct PaddedBatch {
  std::vector<Eigen::MatrixXd> sequences;  // each [T_max, D]
  std::vector<Eigen::Index> lengths;
  std::vector<int> labels;

  static PaddedBatch from_examples(std::span<const TrainingExample> batch);
};

/// Trainable classifier head producing three emotion-level logits.
class Head {
 public:
  virtual ~Head() = default;

  const HeadConfig& config() const { return config_; }
  int input_dim() const { return input_dim_; }

  std::vector<Parameter>& parameters() { return params_; }
  const std::vector<Parameter>& parameters() const { return params_; }
  /// Non-trainable state (standardization statistics).
  std::vector<Parameter>& buffers() { return buffers_; }
  const std::vector<Parameter>& buffers() const { return buffers_; }

  void zero_grad();

  /// Evaluation-mode logits (no dropout). Throws DimensionMismatch.
  virtual EmotionLogits forward(const FrameMatrix& frames) const = 0;

  /// Mean cross-entropy over the batch; writes d(loss)/d(param) into every
  /// Parameter::grad (overwriting). Dropout is applied only when
  /// `dropout_rng` is non-null.
  virtual double loss_and_gradients(std::span<const TrainingExample> batch, Rng* dropout_rng) = 0;

  /// Fits the standardization buffers; a no-op when disabled.
  virtual void fit_standardizer(std::span<const TrainingExample> train) = 0;

 protected:
  Head(HeadConfig config, int input_dim);
  Parameter& add_param(std::string name, Eigen::Index rows, Eigen::Index cols);
  void check_dim(const FrameMatrix& frames) const;
  void init_standardizer();

  /// (frames - mean) * scale, as doubles.
  Eigen::MatrixXd standardized(const FrameMatrix& frames) const;

  HeadConfig config_;
  int input_dim_;
  std::vector<Parameter> params_;
  std::vector<Parameter> buffers_;
};

/// Pooled features through fully connected layers.
class MlpHead final : public Head {
 public:
  MlpHead(HeadConfig config, int input_dim);

  EmotionLogits forward(const FrameMatrix& frames) const override;
  double loss_and_gradients(std::span<const TrainingExample> batch, Rng* dropout_rng) override;
  void fit_standardizer(std::span<const TrainingExample> train) override;

  /// Logits for an already pooled input (no standardization applied).
  EmotionLogits forward_pooled(const Eigen::VectorXd& x) const;

 private:
  Eigen::VectorXd pooled_input(const FrameMatrix& frames) const;
};

/// Forward and backward LSTMs; their final states, concatenated, feed a
/// linear readout.
class BiLstmHead final : public Head {
 public:
  BiLstmHead(HeadConfig config, int input_dim);

  EmotionLogits forward(const FrameMatrix& frames) const override;
  double loss_and_gradients(std::span<const TrainingExample> batch, Rng* dropout_rng) override;
  void fit_standardizer(std::span<const TrainingExample> train) override;

  /// Logits for each sequence of a padded batch, using true lengths.
  std::vector<EmotionLogits> forward_batch(const PaddedBatch& batch) const;

  /// Final hidden states of each direction, for inspection.
  std::pair<Eigen::VectorXd, Eigen::VectorXd> final_states(const FrameMatrix& frames) const;

 private:
  struct Direction;
  EmotionLogits readout(const Eigen::VectorXd& fwd, const Eigen::VectorXd& bwd) const;
};

/// Seeded uniform fan-in initialization.
std::unique_ptr<Head> make_head(const HeadConfig& config, int input_dim, std::uint64_t seed);

/// Everything the trained-head artifact records besides tensors.
struct HeadArtifactInfo {
  BackboneId backbone;
  std::uint64_t seed = 0;
  int final_epoch = 0;
};

inline constexpr const char* kHeadArtifactFormat = "baved-head";
inline constexpr int kHeadArtifactVersion = 1;

void save_head(const std::filesystem::path& path, const Head& head, const HeadArtifactInfo& info);

struct LoadedHead {
  std::unique_ptr<Head> head;
  HeadArtifactInfo info;
};

/// Throws ArtifactMismatch on a foreign file, a version mismatch, or
/// tensors whose shapes disagree with the recorded configuration.
LoadedHead load_head(const std::filesystem::path& path);

}  // namespace baved::heads
