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

#include <doctest.h>

#include "baved/errors.hpp"
#include "baved/heads.hpp"
#include "baved/safetensors.hpp"
#include "support.hpp"

using namespace baved;
using namespace baved::heads;
using baved::testing::TempDir;

namespace {

HeadConfig mlp_config(std::vector<int> hidden, Activation act = Activation::kRelu) {
  HeadConfig c;
  c.kind = HeadKind::kMlp;
  c.hidden_sizes = std::move(hidden);
  c.activation = act;
  c.dropout = 0.0;
  c.standardize = false;
  return c;
}

HeadConfig lstm_config(int hidden) {
  HeadConfig c;
  c.kind = HeadKind::kBiLstm;
  c.lstm_hidden = hidden;
  c.dropout = 0.0;
  c.standardize = false;
  return c;
}

Parameter& param(Head& h, const std::string& name) {
  for (auto& p : h.parameters())
    if (p.name == name) return p;
  FAIL("no parameter " << name);
  throw std::logic_error("unreachable");
}

FrameMatrix rows(std::initializer_list<std::initializer_list<float>> data) {
  FrameMatrix m(static_cast<Eigen::Index>(data.size()), static_cast<Eigen::Index>(data.begin()->size()));
  Eigen::Index i = 0;
  for (const auto& r : data) {
    Eigen::Index j = 0;
    for (float v : r) m(i, j++) = v;
    ++i;
  }
  return m;
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Scalar single-direction LSTM with PyTorch gate order i, f, g, o.
Eigen::VectorXd reference_lstm(const Eigen::MatrixXd& w_ih, const Eigen::MatrixXd& w_hh, const Eigen::VectorXd& b,
                               const Eigen::MatrixXd& x, bool reverse) {
  const int h = static_cast<int>(w_hh.cols());
  std::vector<double> hs(h, 0.0), cs(h, 0.0);
  for (Eigen::Index s = 0; s < x.rows(); ++s) {
    const Eigen::Index t = reverse ? x.rows() - 1 - s : s;
    std::vector<double> pre(4 * h);
    for (int r = 0; r < 4 * h; ++r) {
      double acc = b(r);
      for (Eigen::Index d = 0; d < x.cols(); ++d) acc += w_ih(r, d) * x(t, d);
      for (int k = 0; k < h; ++k) acc += w_hh(r, k) * hs[k];
      pre[r] = acc;
    }
    for (int k = 0; k < h; ++k) {
      const double i = sigmoid(pre[k]), f = sigmoid(pre[h + k]), g = std::tanh(pre[2 * h + k]),
                   o = sigmoid(pre[3 * h + k]);
      cs[k] = f * cs[k] + i * g;
      hs[k] = o * std::tanh(cs[k]);
    }
  }
  return Eigen::Map<Eigen::VectorXd>(hs.data(), h);
}

}  // namespace

TEST_SUITE("heads") {

TEST_CASE("pool_mean: identity, hand arithmetic, permutation and linearity") {
  FeatureSequence f;
  f.frames = rows({{1, 3}, {3, 1}});
  CHECK(pool_mean(f).vector == Eigen::Vector2d(2, 2));
  f.frames = rows({{0.5f, -2}});
  CHECK(pool_mean(f).vector == Eigen::Vector2d(0.5, -2));

  Rng rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    FeatureSequence a, b, perm;
    a.frames = testing::random_frames(rng, 6, 5);
    b.frames = testing::random_frames(rng, 6, 5);
    std::vector<Eigen::Index> order = {0, 1, 2, 3, 4, 5};
    rng.shuffle(order);
    perm.frames.resize(6, 5);
    for (Eigen::Index i = 0; i < 6; ++i) perm.frames.row(i) = a.frames.row(order[static_cast<std::size_t>(i)]);
    CHECK((pool_mean(perm).vector - pool_mean(a).vector).cwiseAbs().maxCoeff() < 1e-6);

    const float alpha = 0.7f, beta = -1.3f;
    FeatureSequence mix;
    mix.frames = alpha * a.frames + beta * b.frames;
    const Eigen::VectorXd lin = alpha * pool_mean(a).vector + beta * pool_mean(b).vector;
    CHECK((pool_mean(mix).vector - lin).cwiseAbs().maxCoeff() < 1e-5);
    CHECK(pool_max(perm).vector == pool_max(a).vector);
  }
}

TEST_CASE("softmax is shift invariant and sums to one") {
  Rng rng(2);
  for (int trial = 0; trial < 100; ++trial) {
    EmotionLogits l;
    l.scores = Eigen::Vector3d(rng.normal() * 10, rng.normal() * 10, rng.normal() * 10);
    EmotionLogits shifted = l;
    shifted.scores.array() += rng.uniform(-500, 500);
    CHECK(std::abs(l.probabilities().sum() - 1.0) < 1e-6);
    CHECK((l.probabilities() - shifted.probabilities()).cwiseAbs().maxCoeff() < 1e-6);
    CHECK(l.argmax() == shifted.argmax());
  }
  CHECK(cross_entropy(Eigen::Vector3d(0, 0, 0), 1) == doctest::Approx(std::log(3.0)));
  CHECK(std::isfinite(cross_entropy(Eigen::Vector3d(1000, -1000, 0), 1)));
}

TEST_CASE("zero parameters give zero logits for both heads") {
  FrameMatrix x = FrameMatrix::Constant(4, 8, 0.3f);
  MlpHead mlp(mlp_config({5, 4}), 8);
  BiLstmHead lstm(lstm_config(3), 8);
  for (Head* h : std::initializer_list<Head*>{&mlp, &lstm}) {
    const auto l = h->forward(x);
    CHECK(l.scores == Eigen::Vector3d::Zero());
    CHECK((l.probabilities().array() - 1.0 / 3.0).abs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("MLP forward matches hand evaluation") {
  MlpHead h(mlp_config({2}), 3);
  param(h, "fc0.weight").value << 1, 0, 0, 0, -1, 0;
  param(h, "fc0.bias").value << 0.5, 0.5;
  param(h, "out.weight").value << 1, 0, 0, 1, 1, 1;
  param(h, "out.bias").value << 0, 0, -1;
  // x = [1,0,0]: hidden relu([1.5, 0.5]) = [1.5, 0.5]; logits [1.5, 0.5, 1.0]
  CHECK(h.forward(rows({{1, 0, 0}})).scores == Eigen::Vector3d(1.5, 0.5, 1.0));
  // x = [0,2,0]: hidden relu([0.5, -1.5]) = [0.5, 0]; logits [0.5, 0, -0.5]
  CHECK(h.forward(rows({{0, 2, 0}})).scores == Eigen::Vector3d(0.5, 0.0, -0.5));
  // mean pooling of the two frames gives x = [0.5, 1, 0]: hidden [1, 0]; logits [1, 0, 0]
  CHECK(h.forward(rows({{1, 0, 0}, {0, 2, 0}})).scores == Eigen::Vector3d(1.0, 0.0, 0.0));
  CHECK(h.forward(rows({{1, 0, 0}})).scores == h.forward(rows({{1, 0, 0}})).scores);
  CHECK_THROWS_AS(h.forward(rows({{1, 0}})), DimensionMismatch);
}

TEST_CASE("Bi-LSTM matches a scalar reference and is symmetric at T = 1") {
  BiLstmHead h(lstm_config(2), 3);
  testing::randomize(h, 11);
  Rng rng(3);
  const FrameMatrix x = testing::random_frames(rng, 4, 3);
  const auto [fwd, bwd] = h.final_states(x);
  const Eigen::MatrixXd xd = x.cast<double>();
  CHECK((fwd - reference_lstm(param(h, "lstm.fwd.w_ih").value, param(h, "lstm.fwd.w_hh").value,
                              param(h, "lstm.fwd.bias").value.col(0), xd, false))
            .cwiseAbs()
            .maxCoeff() < 1e-12);
  CHECK((bwd - reference_lstm(param(h, "lstm.bwd.w_ih").value, param(h, "lstm.bwd.w_hh").value,
                              param(h, "lstm.bwd.bias").value.col(0), xd, true))
            .cwiseAbs()
            .maxCoeff() < 1e-12);
  Eigen::VectorXd r(4);
  r << fwd, bwd;
  const Eigen::Vector3d expected = param(h, "out.weight").value * r + param(h, "out.bias").value.col(0);
  CHECK((h.forward(x).scores - expected).cwiseAbs().maxCoeff() < 1e-12);

  for (const char* part : {".w_ih", ".w_hh", ".bias"})
    param(h, std::string("lstm.bwd") + part).value = param(h, std::string("lstm.fwd") + part).value;
  const auto [f1, b1] = h.final_states(x.topRows(1));
  CHECK(f1 == b1);
  CHECK(h.forward(x.topRows(1)).scores.allFinite());
}

TEST_CASE("padded batches never read padding") {
  BiLstmHead h(lstm_config(3), 4);
  testing::randomize(h, 12);
  Rng rng(4);
  std::vector<FrameMatrix> seqs = {testing::random_frames(rng, 2, 4), testing::random_frames(rng, 7, 4),
                                   testing::random_frames(rng, 1, 4)};
  std::vector<TrainingExample> ex;
  for (const auto& s : seqs) ex.push_back({&s, 1});
  PaddedBatch batch = PaddedBatch::from_examples(ex);
  CHECK(batch.lengths == std::vector<Eigen::Index>{2, 7, 1});
  for (auto& s : batch.sequences) CHECK(s.rows() == 7);
  // garbage in the padded region must not matter
  batch.sequences[0].bottomRows(5).setConstant(1e6);
  batch.sequences[2].bottomRows(6).setConstant(-1e6);
  const auto logits = h.forward_batch(batch);
  for (std::size_t i = 0; i < seqs.size(); ++i)
    CHECK((logits[i].scores - h.forward(seqs[i]).scores).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("analytic gradients match central differences (D = 8, T = 5)") {
  Rng rng(8);
  std::vector<FrameMatrix> frames;
  for (int i = 0; i < 4; ++i) frames.push_back(testing::random_frames(rng, 5, 8));
  std::vector<TrainingExample> batch;
  for (int i = 0; i < 4; ++i) batch.push_back({&frames[static_cast<std::size_t>(i)], i % 3});

  SUBCASE("mlp tanh") {
    MlpHead h(mlp_config({6, 4}, Activation::kTanh), 8);
    testing::randomize(h, 21);
    CHECK(testing::gradient_check(h, batch) <= 1e-4);
  }
  SUBCASE("mlp relu") {
    MlpHead h(mlp_config({6, 4}), 8);
    testing::randomize(h, 22);
    CHECK(testing::gradient_check(h, batch) <= 1e-4);
  }
  SUBCASE("mlp max pooling with standardization") {
    HeadConfig c = mlp_config({5}, Activation::kTanh);
    c.pooling = Pooling::kMax;
    c.standardize = true;
    MlpHead h(c, 8);
    h.fit_standardizer(batch);
    testing::randomize(h, 23);
    CHECK(testing::gradient_check(h, batch) <= 1e-4);
  }
  SUBCASE("bilstm") {
    BiLstmHead h(lstm_config(4), 8);
    testing::randomize(h, 24);
    CHECK(testing::gradient_check(h, batch) <= 1e-4);
  }
  SUBCASE("bilstm with mixed lengths") {
    std::vector<FrameMatrix> mixed = {testing::random_frames(rng, 5, 8), testing::random_frames(rng, 2, 8),
                                      testing::random_frames(rng, 1, 8)};
    std::vector<TrainingExample> b;
    for (std::size_t i = 0; i < mixed.size(); ++i) b.push_back({&mixed[i], static_cast<int>(i)});
    BiLstmHead h(lstm_config(3), 8);
    testing::randomize(h, 25);
    CHECK(testing::gradient_check(h, b) <= 1e-4);
  }
}

TEST_CASE("dropout only acts when a generator is supplied") {
  Rng rng(9);
  std::vector<FrameMatrix> frames = {testing::random_frames(rng, 3, 8), testing::random_frames(rng, 4, 8)};
  std::vector<TrainingExample> batch = {{&frames[0], 0}, {&frames[1], 2}};
  HeadConfig c = mlp_config({16});
  c.dropout = 0.5;
  MlpHead h(c, 8);
  testing::randomize(h, 30);
  const double clean = h.loss_and_gradients(batch, nullptr);
  CHECK(h.loss_and_gradients(batch, nullptr) == clean);
  Rng d(1);
  bool differs = false;
  for (int i = 0; i < 5; ++i) differs |= h.loss_and_gradients(batch, &d) != clean;
  CHECK(differs);
}

TEST_CASE("initialization is seeded fan-in uniform") {
  HeadConfig c = mlp_config({64});
  auto a = make_head(c, 100, 7);
  auto b = make_head(c, 100, 7);
  auto other = make_head(c, 100, 8);
  CHECK(a->parameters()[0].value == b->parameters()[0].value);
  CHECK(a->parameters()[0].value != other->parameters()[0].value);
  const double bound = 1.0 / std::sqrt(100.0);
  CHECK(a->parameters()[0].value.cwiseAbs().maxCoeff() <= bound);
  CHECK(a->parameters()[0].value.cwiseAbs().maxCoeff() > 0.9 * bound);

  auto lstm = make_head(lstm_config(50), 768, 7);
  CHECK(lstm->parameters()[0].value.rows() == 200);
  CHECK(lstm->parameters()[0].value.cwiseAbs().maxCoeff() <= 1.0 / std::sqrt(50.0));
  CHECK(lstm->parameters()[6].value.rows() == 3);
  CHECK(lstm->parameters()[6].value.cols() == 100);
}

TEST_CASE("head config validation and JSON round trip") {
  HeadConfig c;
  CHECK(c.hidden_sizes == std::vector<int>{256, 64});
  CHECK(c.lstm_hidden == 50);
  CHECK(HeadConfig::from_json(c.to_json()) == c);
  c.dropout = 1.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c.dropout = 0.1;
  c.hidden_sizes = {4, 0};
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c.hidden_sizes = {4};
  c.lstm_hidden = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("head artifact round trip and refusal of mismatched files") {
  TempDir dir("artifact");
  Rng rng(10);
  const FrameMatrix x = testing::random_frames(rng, 6, 768);
  for (HeadKind kind : {HeadKind::kMlp, HeadKind::kBiLstm}) {
    HeadConfig c;
    c.kind = kind;
    c.lstm_hidden = 5;
    c.hidden_sizes = {7};
    auto head = make_head(c, 768, 3);
    std::vector<TrainingExample> ex = {{&x, 0}};
    head->fit_standardizer(ex);
    const HeadArtifactInfo info{BackboneId::stub_of(BackboneName::kHubertBase), 3, 5};
    save_head(dir / "h.safetensors", *head, info);
    const auto loaded = load_head(dir / "h.safetensors");
    CHECK(loaded.head->config() == c);
    CHECK(loaded.info.backbone == info.backbone);
    CHECK(loaded.info.final_epoch == 5);
    CHECK(loaded.head->forward(x).scores == head->forward(x).scores);
  }
  write_safetensors(dir / "foreign.safetensors", {{"w", {1}, {1.0}}}, {{"format", "other"}});
  CHECK_THROWS_AS(load_head(dir / "foreign.safetensors"), ArtifactMismatch);

  auto head = make_head(HeadConfig{}, 768, 1);
  save_head(dir / "v.safetensors", *head, {BackboneId::stub_of(BackboneName::kHubertBase), 1, 1});
  auto file = SafetensorsFile::open(dir / "v.safetensors");
  auto meta = file.metadata();
  std::vector<TensorToWrite> tensors;
  for (const auto& [name, e] : file.entries()) tensors.push_back({name, e.shape, file.to_double(name)});
  meta["version"] = "99";
  write_safetensors(dir / "v99.safetensors", tensors, meta);
  CHECK_THROWS_AS(load_head(dir / "v99.safetensors"), ArtifactMismatch);
  meta["version"] = "1";
  meta["input_dim"] = "1024";
  write_safetensors(dir / "dim.safetensors", tensors, meta);
  CHECK_THROWS_AS(load_head(dir / "dim.safetensors"), ArtifactMismatch);
}

}  // TEST_SUITE
