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

#include <cstring>
#include <fstream>

#include "baved/backbone.hpp"
#include "baved/errors.hpp"
#include "baved/safetensors.hpp"
#include "baved/ssl_encoder.hpp"
#include "support.hpp"

using namespace baved;
using baved::testing::TempDir;

namespace {

const std::filesystem::path kFixtures = BAVED_FIXTURE_DIR;

Eigen::MatrixXf load_matrix(const SafetensorsFile& f, const std::string& name) {
  const auto& e = f.at(name);
  REQUIRE(e.shape.size() == 2);
  const auto values = f.to_float(name);
  Eigen::MatrixXf m(e.shape[0], e.shape[1]);
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = values[static_cast<std::size_t>(i * m.cols() + j)];
  return m;
}

double relative_max_error(const Eigen::MatrixXf& got, const Eigen::MatrixXf& want) {
  return (got - want).cwiseAbs().maxCoeff() / std::max(1e-6f, want.cwiseAbs().maxCoeff());
}

}  // namespace

TEST_SUITE("encoder") {

TEST_CASE("native encoder matches the reference implementation on tiny checkpoints") {
  for (const char* name : {"wav2vec2_stable", "hubert_group", "hubert_stable"}) {
    CAPTURE(name);
    const auto dir = kFixtures / name;
    const SslEncoder enc = SslEncoder::load(dir);
    const auto expected = SafetensorsFile::open(dir / "expected.safetensors");
    const auto input = expected.to_float("input");

    const Eigen::MatrixXf last = enc.forward(input);
    const Eigen::MatrixXf want = load_matrix(expected, "last_hidden_state");
    REQUIRE(last.rows() == want.rows());
    REQUIRE(last.cols() == want.cols());
    CHECK(last.rows() == 49);
    CHECK(relative_max_error(last, want) < 1e-4);

    CHECK(relative_max_error(enc.forward(input, 0), load_matrix(expected, "hidden_state_0")) < 1e-4);
    CHECK(relative_max_error(enc.forward(input, 1), load_matrix(expected, "hidden_state_1")) < 1e-4);
    CHECK(enc.forward(input) == last);
  }
}

TEST_CASE("encoder frame count follows the convolutional front end") {
  const SslEncoder enc = SslEncoder::load(kFixtures / "hubert_group");
  for (long long n : {400LL, 401LL, 719LL, 720LL, 8000LL, 16000LL, 23456LL}) {
    CAPTURE(n);
    std::vector<float> x(static_cast<std::size_t>(n), 0.1f);
    for (std::size_t i = 0; i < x.size(); i += 3) x[i] = -0.2f;
    CHECK(enc.forward(x).rows() == frontend_frame_count(n));
    CHECK(enc.config().frame_count(n) == frontend_frame_count(n));
  }
}

TEST_CASE("checkpoint loading boundary") {
  BackboneLoaderOptions opts;
  opts.checkpoint_root = kFixtures;
  CHECK(resolve_checkpoint_dir("facebook/hubert-base-ls960", opts) == kFixtures / "facebook__hubert-base-ls960");
  CHECK(resolve_checkpoint_dir((kFixtures / "hubert_group").string(), opts) == kFixtures / "hubert_group");

  // a tiny checkpoint cannot stand in for a backbone of declared width 768
  BackboneId id = BackboneId::real(BackboneName::kHubertBase);
  id.checkpoint_ref = (kFixtures / "hubert_group").string();
  CHECK_THROWS_AS(load_backbone(id, opts), CheckpointUnavailable);

  TempDir empty("ckpt");
  opts.checkpoint_root = empty.path();
  CHECK_THROWS_AS(load_backbone(BackboneId::real(BackboneName::kHubertLarge), opts), CheckpointUnavailable);
  CHECK_THROWS_AS(SslEncoder::load(empty.path()), CheckpointUnavailable);
}

TEST_CASE("SslBackbone normalizes input when asked") {
  const auto dir = kFixtures / "hubert_group";
  const auto expected = SafetensorsFile::open(dir / "expected.safetensors");
  const auto input = expected.to_float("input");
  const SslEncoder enc = SslEncoder::load(dir);
  const auto direct = enc.forward(zero_mean_unit_variance(input));

  const auto norm = zero_mean_unit_variance(input);
  double mean = 0.0, var = 0.0;
  for (float v : norm) mean += v;
  mean /= norm.size();
  for (float v : norm) var += (v - mean) * (v - mean);
  var /= norm.size();
  CHECK(std::abs(mean) < 1e-5);
  CHECK(var == doctest::Approx(1.0).epsilon(1e-4));
  CHECK(direct.allFinite());
}

TEST_CASE("safetensors reader converts half and bfloat16") {
  TempDir dir("st");
  const std::string header = R"({"h":{"dtype":"F16","shape":[2],"data_offsets":[0,4]},)"
                             R"("b":{"dtype":"BF16","shape":[2],"data_offsets":[4,8]}})";
  std::ofstream out(dir / "t.safetensors", std::ios::binary);
  const std::uint64_t n = header.size();
  out.write(reinterpret_cast<const char*>(&n), 8);
  out << header;
  // F16: 1.0 = 0x3C00, -2.5 = 0xC100; BF16: 1.0 = 0x3F80, 0.15625 = 0x3E20
  const unsigned char payload[8] = {0x00, 0x3C, 0x00, 0xC1, 0x80, 0x3F, 0x20, 0x3E};
  out.write(reinterpret_cast<const char*>(payload), 8);
  out.close();
  const auto f = SafetensorsFile::open(dir / "t.safetensors");
  CHECK(f.to_float("h") == std::vector<float>{1.0f, -2.5f});
  CHECK(f.to_float("b") == std::vector<float>{1.0f, 0.15625f});
}

TEST_CASE("safetensors writer round trip with metadata") {
  TempDir dir("st_rt");
  write_safetensors(dir / "w.safetensors", {{"z", {2, 2}, {1, 2, 3, 4}}, {"a", {1}, {-0.5}}}, {{"k", "v"}});
  const auto f = SafetensorsFile::open(dir / "w.safetensors");
  CHECK(f.to_double("z") == std::vector<double>{1, 2, 3, 4});
  CHECK(f.at("z").shape == std::vector<std::int64_t>{2, 2});
  CHECK(f.to_double("a") == std::vector<double>{-0.5});
  CHECK(f.metadata().at("k") == "v");
}

}  // TEST_SUITE
