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
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace baved {

/// Architecture hyperparameters read from a checkpoint's config.json.
struct SslEncoderConfig {
  std::string model_type;  // "wav2vec2" or "hubert"
  std::vector<int> conv_dim;
  std::vector<int> conv_kernel;
  std::vector<int> conv_stride;
  bool conv_bias = false;
  std::string feat_extract_norm = "group";  // "group" or "layer"
  int hidden_size = 768;
  int num_hidden_layers = 12;
  int num_attention_heads = 12;
  int intermediate_size = 3072;
  int num_conv_pos_embeddings = 128;
  int num_conv_pos_embedding_groups = 16;
  double layer_norm_eps = 1e-5;
  bool do_stable_layer_norm = false;

  /// Throws CheckpointUnavailable on a missing or unsupported config.
  static SslEncoderConfig from_json_file(const std::filesystem::path& path);

  long long frame_count(long long num_samples) const;
};

/// Inference-only wav2vec 2.0 / HuBERT encoder: convolutional waveform
/// front end, feature projection, convolutional relative position
/// embedding, and a post-norm or pre-norm ("stable layer norm")
/// transformer stack. Weights come from a safetensors state dict with the
/// usual parameter names, optionally under a `wav2vec2.` / `hubert.` prefix.
///
/// forward() is const and touches no shared mutable state, so one instance
/// may serve concurrent callers.
class SslEncoder {
 public:
  /// Loads `config.json` and `model.safetensors` from a checkpoint
  /// directory. Throws CheckpointUnavailable.
  static SslEncoder load(const std::filesystem::path& dir);

  const SslEncoderConfig& config() const { return config_; }
  int hidden_size() const { return config_.hidden_size; }
  int num_layers() const { return config_.num_hidden_layers; }

  /// Hidden state `layer` in [0, num_layers] for a 16 kHz waveform, with
  /// the same indexing as the reference implementation's hidden_states
  /// tuple (0 is the transformer input, num_layers the final output, which
  /// includes the closing layer norm in the pre-norm variant). -1 selects
  /// the final output. Returns a [T x hidden_size] matrix.
  Eigen::MatrixXf forward(std::span<const float> waveform, int layer = -1) const;

 private:
  using Matrix = Eigen::MatrixXf;
  using Vector = Eigen::VectorXf;

  struct ConvLayer {
    int in_channels = 0;
    int out_channels = 0;
    int kernel = 0;
    int stride = 0;
    Matrix weight;  // [out, in * kernel]
    Vector bias;    // empty when the layer has no bias
    Vector norm_weight;
    Vector norm_bias;  // empty when unnormalized
  };

  struct Linear {
    Matrix weight_t;  // [in, out]
    Eigen::RowVectorXf bias;
    Matrix apply(const Matrix& x) const;
  };

  struct LayerNorm {
    Eigen::RowVectorXf weight;
    Eigen::RowVectorXf bias;
    Matrix apply(const Matrix& x, double eps) const;  // normalizes each row
  };

  struct TransformerLayer {
    Linear q, k, v, out;
    LayerNorm attn_norm;
    Linear ff_in, ff_out;
    LayerNorm final_norm;
  };

  SslEncoder() = default;

  Matrix conv_frontend(std::span<const float> waveform) const;
  Matrix position_embedding(const Matrix& x) const;
  Matrix attention(const TransformerLayer& layer, const Matrix& x) const;
  Matrix feed_forward(const TransformerLayer& layer, const Matrix& x) const;

  SslEncoderConfig config_;
  std::vector<ConvLayer> conv_layers_;
  LayerNorm projection_norm_;  // empty weight when absent
  Linear projection_;
  std::vector<Matrix> pos_conv_weight_;  // per group: [group_out, group_in * kernel]
  Eigen::VectorXf pos_conv_bias_;
  LayerNorm encoder_norm_;
  std::vector<TransformerLayer> layers_;
};

}  // namespace baved
