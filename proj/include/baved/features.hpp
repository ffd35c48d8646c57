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

#include <string>
#include <string_view>

#include <Eigen/Core>

namespace baved {

enum class BackboneName { kWav2vec2Arabic, kHubertBase, kHubertLarge };

std::string_view to_string(BackboneName name);
/// Throws ConfigError on an unknown name.
BackboneName parse_backbone_name(std::string_view text);

/// Embedding width D is a function of the backbone name alone.
int embedding_width(BackboneName name);

/// Published checkpoint each backbone name resolves to by default.
std::string_view default_checkpoint_ref(BackboneName name);

struct BackboneId {
  BackboneName name = BackboneName::kHubertBase;
  std::string checkpoint_ref;
  /// Hidden-state index to export; -1 is the final transformer layer.
  int layer = -1;
  /// Deterministic pseudo-random stand-in with the same width.
  bool stub = false;

  static BackboneId real(BackboneName name);
  static BackboneId stub_of(BackboneName name);

  int width() const { return embedding_width(name); }
  /// Directory under the cache root. The plain name for the default real
  /// checkpoint at the final layer; suffixed for any other variant so
  /// entries of different feature spaces never mix.
  std::string cache_dir_name() const;

  bool operator==(const BackboneId&) const = default;
};

using FrameMatrix = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Frame-level embeddings [T x D] of one recording.
struct FeatureSequence {
  FrameMatrix frames;
  BackboneId backbone;
  std::string record_id;

  Eigen::Index num_frames() const { return frames.rows(); }
  Eigen::Index dim() const { return frames.cols(); }

  /// T >= 1, D == backbone width, all entries finite. Throws BackboneFailure.
  void validate() const;
};

/// Frames emitted by the standard seven-layer convolutional front end
/// (kernels 10,3,3,3,3,2,2; strides 5,2,2,2,2,2,2) for n input samples.
long long frontend_frame_count(long long num_samples);

}  // namespace baved
