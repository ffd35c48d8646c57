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

#include "baved/heads.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

#include "baved/errors.hpp"
#include "baved/safetensors.hpp"

namespace baved::heads {

using Eigen::MatrixXd;
using Eigen::VectorXd;

std::string_view to_string(HeadKind kind) { return kind == HeadKind::kMlp ? "mlp" : "bilstm"; }

HeadKind parse_head_kind(std::string_view text) {
  if (text == "mlp") return HeadKind::kMlp;
  if (text == "bilstm") return HeadKind::kBiLstm;
  throw ConfigError("unknown head kind '" + std::string(text) + "' (expected mlp or bilstm)");
}

std::string_view to_string(Activation a) { return a == Activation::kRelu ? "relu" : "tanh"; }

Activation parse_activation(std::string_view text) {
  if (text == "relu") return Activation::kRelu;
  if (text == "tanh") return Activation::kTanh;
  throw ConfigError("unknown activation '" + std::string(text) + "' (expected relu or tanh)");
}

std::string_view to_string(Pooling p) { return p == Pooling::kMean ? "mean" : "max"; }

Pooling parse_pooling(std::string_view text) {
  if (text == "mean") return Pooling::kMean;
  if (text == "max") return Pooling::kMax;
  throw ConfigError("unknown pooling '" + std::string(text) + "' (expected mean or max)");
}

void HeadConfig::validate() const {
  for (int h : hidden_sizes)
    if (h < 1) throw ConfigError("head.hidden_sizes entries must be >= 1");
  if (lstm_hidden < 1) throw ConfigError("head.lstm_hidden must be >= 1");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("head.dropout must be in [0, 1)");
}

std::string HeadConfig::to_json() const {
  nlohmann::ordered_json j;
  j["kind"] = std::string(heads::to_string(kind));
  j["hidden_sizes"] = hidden_sizes;
  j["lstm_hidden"] = lstm_hidden;
  j["dropout"] = dropout;
  j["activation"] = std::string(heads::to_string(activation));
  j["pooling"] = std::string(heads::to_string(pooling));
  j["standardize"] = standardize;
  return j.dump();
}

HeadConfig HeadConfig::from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  HeadConfig c;
  c.kind = parse_head_kind(j.at("kind").get<std::string>());
  c.hidden_sizes = j.at("hidden_sizes").get<std::vector<int>>();
  c.lstm_hidden = j.at("lstm_hidden").get<int>();
  c.dropout = j.at("dropout").get<double>();
  c.activation = parse_activation(j.at("activation").get<std::string>());
  c.pooling = parse_pooling(j.at("pooling").get<std::string>());
  c.standardize = j.at("standardize").get<bool>();
  return c;
}

PooledFeature pool_mean(const FeatureSequence& features) {
  return {features.frames.cast<double>().colwise().mean().transpose()};
}

PooledFeature pool_max(const FeatureSequence& features) {
  return {features.frames.cast<double>().colwise().maxCoeff().transpose()};
}

Eigen::Vector3d EmotionLogits::probabilities() const {
  const Eigen::Vector3d e = (scores.array() - scores.maxCoeff()).exp();
  return e / e.sum();
}

int EmotionLogits::argmax() const {
  Eigen::Index best = 0;
  scores.maxCoeff(&best);
  return static_cast<int>(best);
}

double cross_entropy(const Eigen::Vector3d& scores, int label) {
  const double mx = scores.maxCoeff();
  const double lse = mx + std::log((scores.array() - mx).exp().sum());
  return lse - scores(label);
}

PaddedBatch PaddedBatch::from_examples(std::span<const TrainingExample> batch) {
  PaddedBatch out;
  Eigen::Index t_max = 0;
  Eigen::Index dim = 0;
  for (const auto& ex : batch) {
    t_max = std::max(t_max, ex.frames->rows());
    dim = ex.frames->cols();
  }
  for (const auto& ex : batch) {
    MatrixXd seq = MatrixXd::Zero(t_max, dim);
    seq.topRows(ex.frames->rows()) = ex.frames->cast<double>();
    out.sequences.push_back(std::move(seq));
    out.lengths.push_back(ex.frames->rows());
    out.labels.push_back(ex.label);
  }
  return out;
}

Head::Head(HeadConfig config, int input_dim) : config_(std::move(config)), input_dim_(input_dim) {
  config_.validate();
  if (input_dim_ < 1) throw DimensionMismatch("head input dimension must be >= 1");
}

Parameter& Head::add_param(std::string name, Eigen::Index rows, Eigen::Index cols) {
  params_.push_back({std::move(name), MatrixXd::Zero(rows, cols), MatrixXd::Zero(rows, cols)});
  return params_.back();
}

void Head::zero_grad() {
  for (auto& p : params_) p.grad.setZero();
}

void Head::check_dim(const FrameMatrix& frames) const {
  if (frames.cols() != input_dim_)
    throw DimensionMismatch("features have width " + std::to_string(frames.cols()) +
                            ", head expects " + std::to_string(input_dim_));
  if (frames.rows() < 1) throw DimensionMismatch("feature sequence has no frames");
}

void Head::init_standardizer() {
  buffers_.push_back({"input_mean", MatrixXd::Zero(input_dim_, 1), MatrixXd()});
  buffers_.push_back({"input_scale", MatrixXd::Ones(input_dim_, 1), MatrixXd()});
}

MatrixXd Head::standardized(const FrameMatrix& frames) const {
  MatrixXd x = frames.cast<double>();
  const auto& mean = buffers_[0].value;
  const auto& scale = buffers_[1].value;
  x.rowwise() -= mean.col(0).transpose();
  x.array().rowwise() *= scale.col(0).transpose().array();
  return x;
}

namespace {

void fit_mean_scale(const MatrixXd& rows_data, MatrixXd& mean, MatrixXd& scale) {
  const VectorXd mu = rows_data.colwise().mean().transpose();
  const VectorXd var =
      (rows_data.rowwise() - mu.transpose()).array().square().colwise().mean().transpose();
  mean.col(0) = mu;
  for (Eigen::Index d = 0; d < var.size(); ++d) scale(d, 0) = 1.0 / std::max(std::sqrt(var(d)), 1e-6);
}

MatrixXd activate(const MatrixXd& z, Activation a) {
  return a == Activation::kRelu ? MatrixXd(z.cwiseMax(0.0)) : MatrixXd(z.array().tanh().matrix());
}

MatrixXd activation_grad(const MatrixXd& z, const MatrixXd& act, Activation a) {
  if (a == Activation::kRelu) return (z.array() > 0.0).cast<double>().matrix();
  return (1.0 - act.array().square()).matrix();
}

MatrixXd dropout_mask(Eigen::Index rows, Eigen::Index cols, double rate, Rng& rng) {
  MatrixXd m(rows, cols);
  const double keep = 1.0 - rate;
  for (Eigen::Index c = 0; c < cols; ++c)
    for (Eigen::Index r = 0; r < rows; ++r) m(r, c) = rng.uniform() < keep ? 1.0 / keep : 0.0;
  return m;
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

// ---------------------------------------------------------------------------
// MLP

MlpHead::MlpHead(HeadConfig config, int input_dim) : Head(std::move(config), input_dim) {
  if (config_.kind != HeadKind::kMlp) throw ConfigError("MlpHead needs head.kind = mlp");
  int in = input_dim_;
  for (std::size_t i = 0; i < config_.hidden_sizes.size(); ++i) {
    const int out = config_.hidden_sizes[i];
    add_param("fc" + std::to_string(i) + ".weight", out, in);
    add_param("fc" + std::to_string(i) + ".bias", out, 1);
    in = out;
  }
  add_param("out.weight", kNumClasses, in);
  add_param("out.bias", kNumClasses, 1);
  init_standardizer();
}

VectorXd MlpHead::pooled_input(const FrameMatrix& frames) const {
  check_dim(frames);
  VectorXd x = config_.pooling == Pooling::kMean ? VectorXd(frames.cast<double>().colwise().mean().transpose())
                                                 : VectorXd(frames.cast<double>().colwise().maxCoeff().transpose());
  return ((x - buffers_[0].value.col(0)).array() * buffers_[1].value.col(0).array()).matrix();
}

EmotionLogits MlpHead::forward_pooled(const VectorXd& x) const {
  if (x.size() != input_dim_)
    throw DimensionMismatch("pooled input has " + std::to_string(x.size()) + " dims, head expects " +
                            std::to_string(input_dim_));
  VectorXd a = x;
  const std::size_t layers = config_.hidden_sizes.size();
  for (std::size_t i = 0; i < layers; ++i) {
    const VectorXd z = params_[2 * i].value * a + params_[2 * i + 1].value.col(0);
    a = activate(z, config_.activation);
  }
  EmotionLogits out;
  out.scores = params_[2 * layers].value * a + params_[2 * layers + 1].value.col(0);
  return out;
}

EmotionLogits MlpHead::forward(const FrameMatrix& frames) const {
  return forward_pooled(pooled_input(frames));
}

void MlpHead::fit_standardizer(std::span<const TrainingExample> train) {
  if (!config_.standardize || train.empty()) return;
  buffers_[0].value.setZero();
  buffers_[1].value.setOnes();
  MatrixXd pooled(static_cast<Eigen::Index>(train.size()), input_dim_);
  for (std::size_t i = 0; i < train.size(); ++i)
    pooled.row(static_cast<Eigen::Index>(i)) = pooled_input(*train[i].frames).transpose();
  fit_mean_scale(pooled, buffers_[0].value, buffers_[1].value);
}

double MlpHead::loss_and_gradients(std::span<const TrainingExample> batch, Rng* dropout_rng) {
  const auto n = static_cast<Eigen::Index>(batch.size());
  if (n == 0) throw DimensionMismatch("empty batch");
  MatrixXd x(input_dim_, n);
  for (Eigen::Index b = 0; b < n; ++b) x.col(b) = pooled_input(*batch[static_cast<std::size_t>(b)].frames);

  const std::size_t layers = config_.hidden_sizes.size();
  const bool use_dropout = dropout_rng != nullptr && config_.dropout > 0.0;
  std::vector<MatrixXd> inputs;  // input to each affine map
  std::vector<MatrixXd> pre;     // pre-activations
  std::vector<MatrixXd> acts;    // activations before dropout
  std::vector<MatrixXd> masks;
  MatrixXd a = x;
  for (std::size_t i = 0; i < layers; ++i) {
    inputs.push_back(a);
    MatrixXd z = params_[2 * i].value * a;
    z.colwise() += params_[2 * i + 1].value.col(0);
    MatrixXd h = activate(z, config_.activation);
    pre.push_back(z);
    acts.push_back(h);
    if (use_dropout) {
      masks.push_back(dropout_mask(h.rows(), h.cols(), config_.dropout, *dropout_rng));
      a = h.cwiseProduct(masks.back());
    } else {
      a = h;
    }
  }
  inputs.push_back(a);
  MatrixXd logits = params_[2 * layers].value * a;
  logits.colwise() += params_[2 * layers + 1].value.col(0);

  double loss = 0.0;
  MatrixXd dlogits(kNumClasses, n);
  for (Eigen::Index b = 0; b < n; ++b) {
    const Eigen::Vector3d s = logits.col(b);
    const int label = batch[static_cast<std::size_t>(b)].label;
    loss += cross_entropy(s, label);
    EmotionLogits l{s};
    Eigen::Vector3d g = l.probabilities();
    g(label) -= 1.0;
    dlogits.col(b) = g / static_cast<double>(n);
  }

  params_[2 * layers].grad = dlogits * inputs[layers].transpose();
  params_[2 * layers + 1].grad = dlogits.rowwise().sum();
  MatrixXd da = params_[2 * layers].value.transpose() * dlogits;
  for (std::size_t i = layers; i-- > 0;) {
    if (use_dropout) da = da.cwiseProduct(masks[i]);
    const MatrixXd dz = da.cwiseProduct(activation_grad(pre[i], acts[i], config_.activation));
    params_[2 * i].grad = dz * inputs[i].transpose();
    params_[2 * i + 1].grad = dz.rowwise().sum();
    if (i > 0) da = params_[2 * i].value.transpose() * dz;
  }
  return loss / static_cast<double>(n);
}

// ---------------------------------------------------------------------------
// Bi-LSTM

struct BiLstmHead::Direction {
  const MatrixXd& w_ih;  // [4H, D]
  const MatrixXd& w_hh;  // [4H, H]
  const MatrixXd& bias;  // [4H, 1]
  int hidden;

  struct Trace {
    MatrixXd inputs;   // [L, D] in processing order
    MatrixXd gates;    // [L, 4H] post-activation i, f, g, o
    MatrixXd cells;    // [L, H]
    MatrixXd hiddens;  // [L, H]
  };

  /// Runs over rows [0, length) of x, in reverse when `reverse`.
  VectorXd run(const MatrixXd& x, Eigen::Index length, bool reverse, Trace* trace) const {
    const int h4 = 4 * hidden;
    MatrixXd ordered(length, x.cols());
    for (Eigen::Index t = 0; t < length; ++t) ordered.row(t) = x.row(reverse ? length - 1 - t : t);
    MatrixXd projected = ordered * w_ih.transpose();  // [L, 4H]
    projected.rowwise() += bias.col(0).transpose();

    VectorXd h = VectorXd::Zero(hidden);
    VectorXd c = VectorXd::Zero(hidden);
    if (trace) {
      trace->gates.resize(length, h4);
      trace->cells.resize(length, hidden);
      trace->hiddens.resize(length, hidden);
    }
    for (Eigen::Index t = 0; t < length; ++t) {
      VectorXd a = projected.row(t).transpose() + w_hh * h;
      for (int k = 0; k < hidden; ++k) {
        a(k) = sigmoid(a(k));
        a(hidden + k) = sigmoid(a(hidden + k));
        a(2 * hidden + k) = std::tanh(a(2 * hidden + k));
        a(3 * hidden + k) = sigmoid(a(3 * hidden + k));
      }
      c = a.segment(hidden, hidden).cwiseProduct(c) + a.head(hidden).cwiseProduct(a.segment(2 * hidden, hidden));
      h = a.tail(hidden).cwiseProduct(c.array().tanh().matrix());
      if (trace) {
        trace->gates.row(t) = a.transpose();
        trace->cells.row(t) = c.transpose();
        trace->hiddens.row(t) = h.transpose();
      }
    }
    if (trace) trace->inputs = std::move(ordered);
    return h;
  }

  /// Backpropagates d(loss)/d(final hidden state) through the trace.
  static void backward(const Trace& trace, const VectorXd& dh_final, const MatrixXd& w_hh, int hidden,
                       MatrixXd& g_w_ih, MatrixXd& g_w_hh, MatrixXd& g_bias) {
    const Eigen::Index length = trace.gates.rows();
    MatrixXd dpre(length, 4 * hidden);
    VectorXd dh = dh_final;
    VectorXd dc = VectorXd::Zero(hidden);
    for (Eigen::Index t = length - 1; t >= 0; --t) {
      const auto gates = trace.gates.row(t);
      const VectorXd c = trace.cells.row(t).transpose();
      const VectorXd c_prev = t > 0 ? VectorXd(trace.cells.row(t - 1).transpose()) : VectorXd::Zero(hidden);
      const VectorXd tanh_c = c.array().tanh();
      VectorXd da(4 * hidden);
      for (int k = 0; k < hidden; ++k) {
        const double i = gates(k), f = gates(hidden + k), g = gates(2 * hidden + k), o = gates(3 * hidden + k);
        const double d_o = dh(k) * tanh_c(k);
        const double dck = dc(k) + dh(k) * o * (1.0 - tanh_c(k) * tanh_c(k));
        da(k) = dck * g * i * (1.0 - i);
        da(hidden + k) = dck * c_prev(k) * f * (1.0 - f);
        da(2 * hidden + k) = dck * i * (1.0 - g * g);
        da(3 * hidden + k) = d_o * o * (1.0 - o);
        dc(k) = dck * f;
      }
      dpre.row(t) = da.transpose();
      if (t > 0) g_w_hh.noalias() += da * trace.hiddens.row(t - 1);
      dh = w_hh.transpose() * da;
    }
    g_w_ih.noalias() += dpre.transpose() * trace.inputs;
    g_bias += dpre.colwise().sum().transpose();
  }
};

BiLstmHead::BiLstmHead(HeadConfig config, int input_dim) : Head(std::move(config), input_dim) {
  if (config_.kind != HeadKind::kBiLstm) throw ConfigError("BiLstmHead needs head.kind = bilstm");
  const int h = config_.lstm_hidden;
  for (const char* dir : {"fwd", "bwd"}) {
    add_param(std::string("lstm.") + dir + ".w_ih", 4 * h, input_dim_);
    add_param(std::string("lstm.") + dir + ".w_hh", 4 * h, h);
    add_param(std::string("lstm.") + dir + ".bias", 4 * h, 1);
  }
  add_param("out.weight", kNumClasses, 2 * h);
  add_param("out.bias", kNumClasses, 1);
  init_standardizer();
}

std::pair<VectorXd, VectorXd> BiLstmHead::final_states(const FrameMatrix& frames) const {
  check_dim(frames);
  const MatrixXd x = standardized(frames);
  const int h = config_.lstm_hidden;
  const Direction fwd{params_[0].value, params_[1].value, params_[2].value, h};
  const Direction bwd{params_[3].value, params_[4].value, params_[5].value, h};
  return {fwd.run(x, x.rows(), false, nullptr), bwd.run(x, x.rows(), true, nullptr)};
}

EmotionLogits BiLstmHead::readout(const VectorXd& fwd, const VectorXd& bwd) const {
  VectorXd r(fwd.size() + bwd.size());
  r << fwd, bwd;
  EmotionLogits out;
  out.scores = params_[6].value * r + params_[7].value.col(0);
  return out;
}

EmotionLogits BiLstmHead::forward(const FrameMatrix& frames) const {
  const auto [f, b] = final_states(frames);
  return readout(f, b);
}

std::vector<EmotionLogits> BiLstmHead::forward_batch(const PaddedBatch& batch) const {
  const int h = config_.lstm_hidden;
  const Direction fwd{params_[0].value, params_[1].value, params_[2].value, h};
  const Direction bwd{params_[3].value, params_[4].value, params_[5].value, h};
  std::vector<EmotionLogits> out;
  for (std::size_t b = 0; b < batch.sequences.size(); ++b) {
    const auto& seq = batch.sequences[b];
    if (seq.cols() != input_dim_) throw DimensionMismatch("padded batch width disagrees with head");
    const Eigen::Index len = batch.lengths[b];
    MatrixXd x = seq.topRows(len);
    x.rowwise() -= buffers_[0].value.col(0).transpose();
    x.array().rowwise() *= buffers_[1].value.col(0).transpose().array();
    out.push_back(readout(fwd.run(x, len, false, nullptr), bwd.run(x, len, true, nullptr)));
  }
  return out;
}

void BiLstmHead::fit_standardizer(std::span<const TrainingExample> train) {
  if (!config_.standardize || train.empty()) return;
  Eigen::Index total = 0;
  for (const auto& ex : train) total += ex.frames->rows();
  MatrixXd all(total, input_dim_);
  Eigen::Index row = 0;
  for (const auto& ex : train) {
    check_dim(*ex.frames);
    all.middleRows(row, ex.frames->rows()) = ex.frames->cast<double>();
    row += ex.frames->rows();
  }
  fit_mean_scale(all, buffers_[0].value, buffers_[1].value);
}

double BiLstmHead::loss_and_gradients(std::span<const TrainingExample> batch, Rng* dropout_rng) {
  if (batch.empty()) throw DimensionMismatch("empty batch");
  for (const auto& ex : batch) check_dim(*ex.frames);
  zero_grad();
  const PaddedBatch padded = PaddedBatch::from_examples(batch);
  const int h = config_.lstm_hidden;
  const Direction fwd{params_[0].value, params_[1].value, params_[2].value, h};
  const Direction bwd{params_[3].value, params_[4].value, params_[5].value, h};
  const bool use_dropout = dropout_rng != nullptr && config_.dropout > 0.0;
  const double n = static_cast<double>(batch.size());

  double loss = 0.0;
  for (std::size_t b = 0; b < padded.sequences.size(); ++b) {
    const Eigen::Index len = padded.lengths[b];
    MatrixXd x = padded.sequences[b].topRows(len);
    x.rowwise() -= buffers_[0].value.col(0).transpose();
    x.array().rowwise() *= buffers_[1].value.col(0).transpose().array();

    Direction::Trace tf, tb;
    VectorXd r(2 * h);
    r << fwd.run(x, len, false, &tf), bwd.run(x, len, true, &tb);
    VectorXd mask = VectorXd::Ones(2 * h);
    if (use_dropout) mask = dropout_mask(2 * h, 1, config_.dropout, *dropout_rng).col(0);
    const VectorXd r_drop = r.cwiseProduct(mask);

    const Eigen::Vector3d scores = params_[6].value * r_drop + params_[7].value.col(0);
    const int label = padded.labels[b];
    loss += cross_entropy(scores, label);
    Eigen::Vector3d dlogits = EmotionLogits{scores}.probabilities();
    dlogits(label) -= 1.0;
    dlogits /= n;

    params_[6].grad.noalias() += dlogits * r_drop.transpose();
    params_[7].grad += dlogits;
    const VectorXd dr = (params_[6].value.transpose() * dlogits).cwiseProduct(mask);
    Direction::backward(tf, dr.head(h), params_[1].value, h, params_[0].grad, params_[1].grad, params_[2].grad);
    Direction::backward(tb, dr.tail(h), params_[4].value, h, params_[3].grad, params_[4].grad, params_[5].grad);
  }
  return loss / n;
}

// ---------------------------------------------------------------------------

std::unique_ptr<Head> make_head(const HeadConfig& config, int input_dim, std::uint64_t seed) {
  std::unique_ptr<Head> head;
  if (config.kind == HeadKind::kMlp) head = std::make_unique<MlpHead>(config, input_dim);
  else head = std::make_unique<BiLstmHead>(config, input_dim);

  Rng rng(derive_seed(seed, "head_init"));
  for (auto& p : head->parameters()) {
    double fan_in;
    if (p.name.rfind("lstm.", 0) == 0) fan_in = config.lstm_hidden;
    else if (p.name.size() > 5 && p.name.compare(p.name.size() - 5, 5, ".bias") == 0) {
      // bias shares its layer's fan-in: the weight registered just before it
      const auto& weight = *(&p - 1);
      fan_in = static_cast<double>(weight.value.cols());
    } else {
      fan_in = static_cast<double>(p.value.cols());
    }
    const double bound = 1.0 / std::sqrt(fan_in);
    for (Eigen::Index c = 0; c < p.value.cols(); ++c)
      for (Eigen::Index r = 0; r < p.value.rows(); ++r) p.value(r, c) = rng.uniform(-bound, bound);
  }
  return head;
}

namespace {

TensorToWrite tensor_of(const std::string& name, const MatrixXd& m) {
  TensorToWrite t{name, {m.rows(), m.cols()}, {}};
  t.values.reserve(static_cast<std::size_t>(m.size()));
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) t.values.push_back(m(r, c));
  return t;
}

}  // namespace

void save_head(const std::filesystem::path& path, const Head& head, const HeadArtifactInfo& info) {
  std::vector<TensorToWrite> tensors;
  for (const auto& p : head.parameters()) tensors.push_back(tensor_of("param/" + p.name, p.value));
  for (const auto& b : head.buffers()) tensors.push_back(tensor_of("buffer/" + b.name, b.value));
  const std::map<std::string, std::string> meta{
      {"format", kHeadArtifactFormat},
      {"version", std::to_string(kHeadArtifactVersion)},
      {"head_config", head.config().to_json()},
      {"backbone", std::string(to_string(info.backbone.name))},
      {"checkpoint_ref", info.backbone.checkpoint_ref},
      {"layer", std::to_string(info.backbone.layer)},
      {"stub", info.backbone.stub ? "true" : "false"},
      {"input_dim", std::to_string(head.input_dim())},
      {"seed", std::to_string(info.seed)},
      {"final_epoch", std::to_string(info.final_epoch)},
  };
  try {
    write_safetensors(path, tensors, meta);
  } catch (const std::runtime_error& e) {
    throw WriteFailure(e.what());
  }
}

LoadedHead load_head(const std::filesystem::path& path) {
  auto fail = [&](const std::string& why) { return ArtifactMismatch(path.string() + ": " + why); };
  SafetensorsFile file = [&] {
    try {
      return SafetensorsFile::open(path);
    } catch (const std::runtime_error& e) {
      throw fail(e.what());
    }
  }();
  const auto& meta = file.metadata();
  auto get = [&](const std::string& key) {
    const auto it = meta.find(key);
    if (it == meta.end()) throw fail("missing metadata '" + key + "'");
    return it->second;
  };
  if (get("format") != kHeadArtifactFormat) throw fail("not a trained-head artifact");
  if (get("version") != std::to_string(kHeadArtifactVersion))
    throw fail("artifact version " + get("version") + ", this build reads " +
               std::to_string(kHeadArtifactVersion));

  LoadedHead out;
  HeadConfig config;
  try {
    config = HeadConfig::from_json(get("head_config"));
    out.info.backbone.name = parse_backbone_name(get("backbone"));
    out.info.backbone.checkpoint_ref = get("checkpoint_ref");
    out.info.backbone.layer = std::stoi(get("layer"));
    out.info.backbone.stub = get("stub") == "true";
    out.info.seed = std::stoull(get("seed"));
    out.info.final_epoch = std::stoi(get("final_epoch"));
  } catch (const ArtifactMismatch&) {
    throw;
  } catch (const std::exception& e) {
    throw fail(std::string("bad metadata: ") + e.what());
  }
  const int input_dim = std::stoi(get("input_dim"));
  if (input_dim != out.info.backbone.width()) throw fail("input_dim disagrees with the backbone width");
  out.head = make_head(config, input_dim, 0);

  auto restore = [&](Parameter& p, const std::string& name) {
    if (!file.contains(name)) throw fail("missing tensor " + name);
    const auto& e = file.at(name);
    if (e.shape.size() != 2 || e.shape[0] != p.value.rows() || e.shape[1] != p.value.cols())
      throw fail("tensor " + name + " has the wrong shape");
    const auto values = file.to_double(name);
    for (Eigen::Index r = 0; r < p.value.rows(); ++r)
      for (Eigen::Index c = 0; c < p.value.cols(); ++c)
        p.value(r, c) = values[static_cast<std::size_t>(r * p.value.cols() + c)];
  };
  for (auto& p : out.head->parameters()) restore(p, "param/" + p.name);
  for (auto& b : out.head->buffers()) restore(b, "buffer/" + b.name);
  return out;
}

}  // namespace baved::heads
