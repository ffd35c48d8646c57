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
#include <optional>
#include <string>

#include "baved/audio.hpp"
#include "baved/features.hpp"
#include "baved/ssl_encoder.hpp"

namespace baved {

/// A frozen waveform -> frame-embedding function.
class Backbone {
 public:
  virtual ~Backbone() = default;

  virtual const BackboneId& id() const = 0;
  /// Whether extract() may be called from several threads at once.
  virtual bool reentrant() const = 0;

  /// Returns a validated FeatureSequence. Throws BackboneFailure.
  virtual FeatureSequence extract(const Waveform& waveform, const std::string& record_id) const = 0;
};

/// Deterministic pseudo-random projection of short-time log band
/// energies. Same framing as the real front end (25 ms window, 20 ms hop),
/// same width as the backbone it stands in for, no downloads.
class StubBackbone final : public Backbone {
 public:
  explicit StubBackbone(BackboneId id, std::uint64_t seed = 0x5eed);

  const BackboneId& id() const override { return id_; }
  bool reentrant() const override { return true; }
  FeatureSequence extract(const Waveform& waveform, const std::string& record_id) const override;

  static constexpr int kBands = 24;

 private:
  BackboneId id_;
  Eigen::MatrixXf projection_;  // [kBands + 2, D]
  Eigen::RowVectorXf offset_;
};

/// Whether the encoder expects zero-mean unit-variance input.
enum class InputNormalization { kAuto, kOn, kOff };

/// A native encoder over converted checkpoint weights.
class SslBackbone final : public Backbone {
 public:
  SslBackbone(BackboneId id, SslEncoder encoder, bool normalize_input);

  const BackboneId& id() const override { return id_; }
  bool reentrant() const override { return true; }
  FeatureSequence extract(const Waveform& waveform, const std::string& record_id) const override;

 private:
  BackboneId id_;
  SslEncoder encoder_;
  bool normalize_input_;
};

/// The boundary that turns a BackboneId into a runnable backbone.
struct BackboneLoaderOptions {
  /// Root for converted checkpoints; overridden by BAVED_CHECKPOINT_DIR.
  std::filesystem::path checkpoint_root;
  InputNormalization normalize = InputNormalization::kAuto;
  std::uint64_t stub_seed = 0x5eed;
};

inline constexpr const char* kCheckpointDirEnv = "BAVED_CHECKPOINT_DIR";

/// Where a checkpoint reference resolves on disk: the reference itself if
/// it names a directory, else `<root>/<ref with '/' replaced by "__">`.
std::filesystem::path resolve_checkpoint_dir(const std::string& checkpoint_ref,
                                             const BackboneLoaderOptions& options);

/// Throws CheckpointUnavailable when a real checkpoint is missing or
/// incompatible with the declared width.
std::unique_ptr<Backbone> load_backbone(const BackboneId& id, const BackboneLoaderOptions& options = {});

/// (x - mean) / sqrt(var + 1e-7)
std::vector<float> zero_mean_unit_variance(std::span<const float> samples);

FeatureSequence extract_features(const Waveform& waveform, const Backbone& backbone,
                                 const std::string& record_id);

}  // namespace baved
