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

#include "baved/ssl_encoder.hpp"

#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

#include "baved/errors.hpp"
#include "baved/safetensors.hpp"

namespace baved {
namespace {

using Matrix = Eigen::MatrixXf;

void gelu_inplace(Matrix& m) {
  m = m.unaryExpr([](float x) {
    return static_cast<float>(0.5 * x * (1.0 + std::erf(x * 0.7071067811865476)));
  });
}

class WeightSource {
 public:
  WeightSource(const SafetensorsFile& file, std::string prefix) : file_(file), prefix_(std::move(prefix)) {}

  bool has(const std::string& name) const { return file_.contains(prefix_ + name); }

  std::vector<float> get(const std::string& name, std::initializer_list<std::int64_t> shape) const {
    const std::string key = prefix_ + name;
    if (!file_.contains(key)) throw CheckpointUnavailable("checkpoint lacks tensor " + key);
    const auto& e = file_.at(key);
    if (!std::equal(e.shape.begin(), e.shape.end(), shape.begin(), shape.end())) {
      std::string got;
      for (auto d : e.shape) got += std::to_string(d) + " ";
      throw CheckpointUnavailable("tensor " + key + " has unexpected shape [ " + got + "]");
    }
    return file_.to_float(key);
  }

 private:
  const SafetensorsFile& file_;
  std::string prefix_;
};

Eigen::VectorXf to_vector(const std::vector<float>& v) {
  return Eigen::Map<const Eigen::VectorXf>(v.data(), static_cast<Eigen::Index>(v.size()));
}

Eigen::RowVectorXf to_row(const std::vector<float>& v) {
  return Eigen::Map<const Eigen::RowVectorXf>(v.data(), static_cast<Eigen::Index>(v.size()));
}

/// Row-major [rows, cols] buffer into a column-major matrix.
Matrix to_matrix(const std::vector<float>& v, Eigen::Index rows, Eigen::Index cols) {
  using RowMajor = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  return Eigen::Map<const RowMajor>(v.data(), rows, cols);
}

std::string find_prefix(const SafetensorsFile& file) {
  static const std::string kAnchor = "feature_projection.projection.weight";
  for (const auto& [name, entry] : file.entries()) {
    if (name.size() >= kAnchor.size() &&
        name.compare(name.size() - kAnchor.size(), kAnchor.size(), kAnchor) == 0)
      return name.substr(0, name.size() - kAnchor.size());
  }
  throw CheckpointUnavailable("safetensors file does not look like a wav2vec2/HuBERT state dict");
}

}  // namespace

SslEncoderConfig SslEncoderConfig::from_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw CheckpointUnavailable("missing " + path.string());
  const auto j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded()) throw CheckpointUnavailable(path.string() + " is not valid JSON");

  SslEncoderConfig c;
  try {
    c.model_type = j.value("model_type", std::string("wav2vec2"));
    c.conv_dim = j.at("conv_dim").get<std::vector<int>>();
    c.conv_kernel = j.at("conv_kernel").get<std::vector<int>>();
    c.conv_stride = j.at("conv_stride").get<std::vector<int>>();
    c.conv_bias = j.value("conv_bias", false);
    c.feat_extract_norm = j.value("feat_extract_norm", std::string("group"));
    c.hidden_size = j.at("hidden_size").get<int>();
    c.num_hidden_layers = j.at("num_hidden_layers").get<int>();
    c.num_attention_heads = j.at("num_attention_heads").get<int>();
    c.intermediate_size = j.at("intermediate_size").get<int>();
    c.num_conv_pos_embeddings = j.value("num_conv_pos_embeddings", 128);
    c.num_conv_pos_embedding_groups = j.value("num_conv_pos_embedding_groups", 16);
    c.layer_norm_eps = j.value("layer_norm_eps", 1e-5);
    c.do_stable_layer_norm = j.value("do_stable_layer_norm", false);
    const auto act = j.value("hidden_act", std::string("gelu"));
    const auto feat_act = j.value("feat_extract_activation", std::string("gelu"));
    if (act != "gelu" || feat_act != "gelu")
      throw CheckpointUnavailable(path.string() + ": only gelu activations are supported");
    if (j.value("conv_pos_batch_norm", false))
      throw CheckpointUnavailable(path.string() + ": batch-normed position convolution unsupported");
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointUnavailable(path.string() + ": " + e.what());
  }
  if (c.conv_dim.empty() || c.conv_dim.size() != c.conv_kernel.size() ||
      c.conv_dim.size() != c.conv_stride.size())
    throw CheckpointUnavailable(path.string() + ": inconsistent convolution layer lists");
  if (c.feat_extract_norm != "group" && c.feat_extract_norm != "layer")
    throw CheckpointUnavailable(path.string() + ": unknown feat_extract_norm " + c.feat_extract_norm);
  if (c.hidden_size % c.num_attention_heads != 0 ||
      c.hidden_size % c.num_conv_pos_embedding_groups != 0)
    throw CheckpointUnavailable(path.string() + ": hidden size not divisible by heads/groups");
  return c;
}

long long SslEncoderConfig::frame_count(long long num_samples) const {
  long long n = num_samples;
  for (std::size_t i = 0; i < conv_kernel.size(); ++i) {
    if (n < conv_kernel[i]) return 0;
    n = (n - conv_kernel[i]) / conv_stride[i] + 1;
  }
  return n;
}

SslEncoder SslEncoder::load(const std::filesystem::path& dir) {
  SslEncoder enc;
  enc.config_ = SslEncoderConfig::from_json_file(dir / "config.json");
  const auto weights_path = dir / "model.safetensors";
  if (!std::filesystem::exists(weights_path))
    throw CheckpointUnavailable("missing " + weights_path.string());

  SafetensorsFile file = [&] {
    try {
      return SafetensorsFile::open(weights_path);
    } catch (const std::runtime_error& e) {
      throw CheckpointUnavailable(e.what());
    }
  }();
  const WeightSource w(file, find_prefix(file));
  const auto& c = enc.config_;

  int in_ch = 1;
  for (std::size_t i = 0; i < c.conv_dim.size(); ++i) {
    ConvLayer layer;
    layer.in_channels = in_ch;
    layer.out_channels = c.conv_dim[i];
    layer.kernel = c.conv_kernel[i];
    layer.stride = c.conv_stride[i];
    const std::string p = "feature_extractor.conv_layers." + std::to_string(i) + ".";
    layer.weight = to_matrix(w.get(p + "conv.weight", {layer.out_channels, in_ch, layer.kernel}),
                             layer.out_channels, static_cast<Eigen::Index>(in_ch) * layer.kernel);
    if (c.conv_bias) layer.bias = to_vector(w.get(p + "conv.bias", {layer.out_channels}));
    const bool normed = c.feat_extract_norm == "layer" || i == 0;
    if (normed) {
      layer.norm_weight = to_vector(w.get(p + "layer_norm.weight", {layer.out_channels}));
      layer.norm_bias = to_vector(w.get(p + "layer_norm.bias", {layer.out_channels}));
    }
    enc.conv_layers_.push_back(std::move(layer));
    in_ch = c.conv_dim[i];
  }

  const int conv_out = c.conv_dim.back();
  const int h = c.hidden_size;
  if (w.has("feature_projection.layer_norm.weight")) {
    enc.projection_norm_.weight = to_row(w.get("feature_projection.layer_norm.weight", {conv_out}));
    enc.projection_norm_.bias = to_row(w.get("feature_projection.layer_norm.bias", {conv_out}));
  }
  enc.projection_.weight_t = to_matrix(w.get("feature_projection.projection.weight", {h, conv_out}), h, conv_out).transpose();
  enc.projection_.bias = to_row(w.get("feature_projection.projection.bias", {h}));

  const int groups = c.num_conv_pos_embedding_groups;
  const int group_ch = h / groups;
  const int kernel = c.num_conv_pos_embeddings;
  std::vector<float> pos_w;
  const std::string pc = "encoder.pos_conv_embed.conv.";
  auto apply_weight_norm = [&](const std::vector<float>& g, const std::vector<float>& v) {
    // normalized over every dim except the kernel axis
    std::vector<float> out(v.size());
    for (int k = 0; k < kernel; ++k) {
      double sq = 0.0;
      for (std::size_t oc = 0; oc < static_cast<std::size_t>(h) * group_ch; ++oc)
        sq += static_cast<double>(v[oc * kernel + k]) * v[oc * kernel + k];
      const double scale = g[static_cast<std::size_t>(k)] / std::sqrt(sq);
      for (std::size_t oc = 0; oc < static_cast<std::size_t>(h) * group_ch; ++oc)
        out[oc * kernel + k] = static_cast<float>(v[oc * kernel + k] * scale);
    }
    return out;
  };
  if (w.has(pc + "weight")) {
    pos_w = w.get(pc + "weight", {h, group_ch, kernel});
  } else if (w.has(pc + "weight_g")) {
    pos_w = apply_weight_norm(w.get(pc + "weight_g", {1, 1, kernel}), w.get(pc + "weight_v", {h, group_ch, kernel}));
  } else {
    pos_w = apply_weight_norm(w.get(pc + "parametrizations.weight.original0", {1, 1, kernel}),
                              w.get(pc + "parametrizations.weight.original1", {h, group_ch, kernel}));
  }
  for (int g = 0; g < groups; ++g) {
    Matrix wg(group_ch, group_ch * kernel);
    for (int o = 0; o < group_ch; ++o)
      for (int ck = 0; ck < group_ch * kernel; ++ck)
        wg(o, ck) = pos_w[(static_cast<std::size_t>(g) * group_ch + o) * group_ch * kernel + ck];
    enc.pos_conv_weight_.push_back(std::move(wg));
  }
  enc.pos_conv_bias_ = to_vector(w.get(pc + "bias", {h}));
  enc.encoder_norm_.weight = to_row(w.get("encoder.layer_norm.weight", {h}));
  enc.encoder_norm_.bias = to_row(w.get("encoder.layer_norm.bias", {h}));

  auto linear = [&](const std::string& name, int out, int in) {
    Linear l;
    l.weight_t = to_matrix(w.get(name + ".weight", {out, in}), out, in).transpose();
    l.bias = to_row(w.get(name + ".bias", {out}));
    return l;
  };
  auto norm = [&](const std::string& name, int dim) {
    LayerNorm n;
    n.weight = to_row(w.get(name + ".weight", {dim}));
    n.bias = to_row(w.get(name + ".bias", {dim}));
    return n;
  };
  for (int l = 0; l < c.num_hidden_layers; ++l) {
    const std::string p = "encoder.layers." + std::to_string(l) + ".";
    TransformerLayer layer;
    layer.q = linear(p + "attention.q_proj", h, h);
    layer.k = linear(p + "attention.k_proj", h, h);
    layer.v = linear(p + "attention.v_proj", h, h);
    layer.out = linear(p + "attention.out_proj", h, h);
    layer.attn_norm = norm(p + "layer_norm", h);
    layer.ff_in = linear(p + "feed_forward.intermediate_dense", c.intermediate_size, h);
    layer.ff_out = linear(p + "feed_forward.output_dense", h, c.intermediate_size);
    layer.final_norm = norm(p + "final_layer_norm", h);
    enc.layers_.push_back(std::move(layer));
  }
  return enc;
}

Matrix SslEncoder::Linear::apply(const Matrix& x) const {
  Matrix y = x * weight_t;
  y.rowwise() += bias;
  return y;
}

Matrix SslEncoder::LayerNorm::apply(const Matrix& x, double eps) const {
  Matrix y(x.rows(), x.cols());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const auto row = x.row(r).cast<double>();
    const double mean = row.mean();
    const double var = (row.array() - mean).square().mean();
    const double inv = 1.0 / std::sqrt(var + eps);
    y.row(r) = (((row.array() - mean) * inv).cast<float>() * weight.array() + bias.array()).matrix();
  }
  return y;
}

Matrix SslEncoder::conv_frontend(std::span<const float> waveform) const {
  Matrix x = Eigen::Map<const Eigen::RowVectorXf>(waveform.data(), static_cast<Eigen::Index>(waveform.size()));
  const double eps = config_.layer_norm_eps;
  for (const auto& layer : conv_layers_) {
    const Eigen::Index len_in = x.cols();
    const Eigen::Index len_out = (len_in - layer.kernel) / layer.stride + 1;
    Matrix cols(static_cast<Eigen::Index>(layer.in_channels) * layer.kernel, len_out);
    for (Eigen::Index t = 0; t < len_out; ++t)
      for (int c = 0; c < layer.in_channels; ++c)
        for (int k = 0; k < layer.kernel; ++k)
          cols(static_cast<Eigen::Index>(c) * layer.kernel + k, t) = x(c, t * layer.stride + k);
    Matrix y = layer.weight * cols;
    if (layer.bias.size()) y.colwise() += layer.bias;
    if (layer.norm_weight.size()) {
      if (config_.feat_extract_norm == "layer") {
        // per time step, across channels
        for (Eigen::Index t = 0; t < y.cols(); ++t) {
          const auto col = y.col(t).cast<double>();
          const double mean = col.mean();
          const double var = (col.array() - mean).square().mean();
          const double inv = 1.0 / std::sqrt(var + eps);
          y.col(t) = (((col.array() - mean) * inv).cast<float>() * layer.norm_weight.array() +
                      layer.norm_bias.array()).matrix();
        }
      } else {
        // group norm with one group per channel: per channel, across time
        for (Eigen::Index c = 0; c < y.rows(); ++c) {
          const auto row = y.row(c).cast<double>();
          const double mean = row.mean();
          const double var = (row.array() - mean).square().mean();
          const double inv = 1.0 / std::sqrt(var + eps);
          y.row(c) = (((row.array() - mean) * inv).cast<float>() * layer.norm_weight(c) +
                      layer.norm_bias(c)).matrix();
        }
      }
    }
    gelu_inplace(y);
    x = std::move(y);
  }
  return x.transpose();  // [T, C]
}

Matrix SslEncoder::position_embedding(const Matrix& x) const {
  const Eigen::Index frames = x.rows();
  const int kernel = config_.num_conv_pos_embeddings;
  const int pad = kernel / 2;
  const int groups = config_.num_conv_pos_embedding_groups;
  const int group_ch = config_.hidden_size / groups;
  const Matrix xt = x.transpose();  // [H, T]

  Matrix out(config_.hidden_size, frames);
  Matrix cols(static_cast<Eigen::Index>(group_ch) * kernel, frames);
  for (int g = 0; g < groups; ++g) {
    cols.setZero();
    for (Eigen::Index t = 0; t < frames; ++t)
      for (int c = 0; c < group_ch; ++c)
        for (int k = 0; k < kernel; ++k) {
          const Eigen::Index src = t + k - pad;
          if (src >= 0 && src < frames)
            cols(static_cast<Eigen::Index>(c) * kernel + k, t) = xt(g * group_ch + c, src);
        }
    out.middleRows(static_cast<Eigen::Index>(g) * group_ch, group_ch) = pos_conv_weight_[static_cast<std::size_t>(g)] * cols;
  }
  out.colwise() += pos_conv_bias_;
  gelu_inplace(out);
  return out.transpose();
}

Matrix SslEncoder::attention(const TransformerLayer& layer, const Matrix& x) const {
  const int heads = config_.num_attention_heads;
  const int head_dim = config_.hidden_size / heads;
  const float scale = 1.0f / std::sqrt(static_cast<float>(head_dim));
  const Matrix q = layer.q.apply(x) * scale;
  const Matrix k = layer.k.apply(x);
  const Matrix v = layer.v.apply(x);
  Matrix ctx(x.rows(), x.cols());
  for (int hd = 0; hd < heads; ++hd) {
    const auto qh = q.middleCols(hd * head_dim, head_dim);
    const auto kh = k.middleCols(hd * head_dim, head_dim);
    const auto vh = v.middleCols(hd * head_dim, head_dim);
    Matrix scores = qh * kh.transpose();
    for (Eigen::Index r = 0; r < scores.rows(); ++r) {
      const float mx = scores.row(r).maxCoeff();
      scores.row(r) = (scores.row(r).array() - mx).exp();
      scores.row(r) /= scores.row(r).sum();
    }
    ctx.middleCols(hd * head_dim, head_dim) = scores * vh;
  }
  return layer.out.apply(ctx);
}

Matrix SslEncoder::feed_forward(const TransformerLayer& layer, const Matrix& x) const {
  Matrix hidden = layer.ff_in.apply(x);
  gelu_inplace(hidden);
  return layer.ff_out.apply(hidden);
}

Eigen::MatrixXf SslEncoder::forward(std::span<const float> waveform, int layer) const {
  const int depth = config_.num_hidden_layers;
  if (layer < 0) layer = depth;
  if (layer > depth)
    throw BackboneFailure("requested hidden state " + std::to_string(layer) + " of a " +
                          std::to_string(depth) + "-layer encoder");
  if (config_.frame_count(static_cast<long long>(waveform.size())) < 1)
    throw BackboneFailure("waveform too short for the convolutional front end");

  Matrix features = conv_frontend(waveform);
  if (projection_norm_.weight.size()) features = projection_norm_.apply(features, config_.layer_norm_eps);
  Matrix h = projection_.apply(features);
  const double eps = config_.layer_norm_eps;

  if (!config_.do_stable_layer_norm) {
    h = h + position_embedding(h);
    h = encoder_norm_.apply(h, eps);
    for (int l = 0; l < layer; ++l) {
      const auto& tl = layers_[static_cast<std::size_t>(l)];
      h = tl.attn_norm.apply(h + attention(tl, h), eps);
      h = h + feed_forward(tl, h);
      h = tl.final_norm.apply(h, eps);
    }
    return h;
  }

  h = h + position_embedding(h);
  for (int l = 0; l < layer; ++l) {
    const auto& tl = layers_[static_cast<std::size_t>(l)];
    h = h + attention(tl, tl.attn_norm.apply(h, eps));
    h = h + feed_forward(tl, tl.final_norm.apply(h, eps));
  }
  if (layer == depth) h = encoder_norm_.apply(h, eps);
  return h;
}

}  // namespace baved
