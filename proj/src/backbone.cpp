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

#include "baved/backbone.hpp"

#include <array>
#include <cmath>
#include <cstdlib>
#include <fstream>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "baved/errors.hpp"
#include "baved/random.hpp"

namespace fs = std::filesystem;

namespace baved {

std::string_view to_string(BackboneName name) {
  switch (name) {
    case BackboneName::kWav2vec2Arabic: return "wav2vec2_arabic";
    case BackboneName::kHubertBase: return "hubert_base";
    case BackboneName::kHubertLarge: return "hubert_large";
  }
  return "unknown";
}

BackboneName parse_backbone_name(std::string_view text) {
  for (auto n : {BackboneName::kWav2vec2Arabic, BackboneName::kHubertBase, BackboneName::kHubertLarge})
    if (to_string(n) == text) return n;
  throw ConfigError("unknown backbone '" + std::string(text) +
                    "' (expected wav2vec2_arabic, hubert_base or hubert_large)");
}

int embedding_width(BackboneName name) {
  return name == BackboneName::kHubertBase ? 768 : 1024;
}

std::string_view default_checkpoint_ref(BackboneName name) {
  switch (name) {
    case BackboneName::kWav2vec2Arabic: return "elgeish/wav2vec2-large-xlsr-53-arabic";
    case BackboneName::kHubertBase: return "facebook/hubert-base-ls960";
    case BackboneName::kHubertLarge: return "facebook/hubert-large-ll60k";
  }
  return "";
}

BackboneId BackboneId::real(BackboneName name) {
  return BackboneId{name, std::string(default_checkpoint_ref(name)), -1, false};
}

BackboneId BackboneId::stub_of(BackboneName name) {
  return BackboneId{name, "stub", -1, true};
}

std::string BackboneId::cache_dir_name() const {
  std::string dir(to_string(name));
  if (stub) return dir + "__stub";
  if (checkpoint_ref != default_checkpoint_ref(name)) {
    std::string tag;
    for (char c : checkpoint_ref) tag.push_back(std::isalnum(static_cast<unsigned char>(c)) ? c : '_');
    dir += "__" + tag;
  }
  if (layer >= 0) dir += "__layer" + std::to_string(layer);
  return dir;
}

void FeatureSequence::validate() const {
  if (frames.rows() < 1) throw BackboneFailure(record_id + ": no frames");
  if (frames.cols() != backbone.width())
    throw BackboneFailure(record_id + ": width " + std::to_string(frames.cols()) + " but " +
                          std::string(to_string(backbone.name)) + " declares " +
                          std::to_string(backbone.width()));
  if (!frames.allFinite()) throw BackboneFailure(record_id + ": non-finite frame entries");
}

long long frontend_frame_count(long long num_samples) {
  static constexpr int kKernel[] = {10, 3, 3, 3, 3, 2, 2};
  static constexpr int kStride[] = {5, 2, 2, 2, 2, 2, 2};
  long long n = num_samples;
  for (int i = 0; i < 7; ++i) {
    if (n < kKernel[i]) return 0;
    n = (n - kKernel[i]) / kStride[i] + 1;
  }
  return n;
}

StubBackbone::StubBackbone(BackboneId id, std::uint64_t seed) : id_(std::move(id)) {
  const int d = id_.width();
  constexpr int kInputs = kBands + 2;
  Rng rng(derive_seed(seed, "stub:" + std::string(to_string(id_.name))));
  projection_.resize(kInputs, d);
  offset_.resize(d);
  const double scale = 1.0 / std::sqrt(static_cast<double>(kInputs));
  for (int i = 0; i < kInputs; ++i)
    for (int j = 0; j < d; ++j) projection_(i, j) = static_cast<float>(rng.normal() * scale);
  for (int j = 0; j < d; ++j) offset_(j) = static_cast<float>(rng.uniform(-0.5, 0.5));
}

FeatureSequence StubBackbone::extract(const Waveform& waveform, const std::string& record_id) const {
  constexpr int kWindow = 400;
  constexpr int kHop = 320;
  const long long frames = frontend_frame_count(static_cast<long long>(waveform.samples.size()));
  if (frames < 1) throw BackboneFailure(record_id + ": waveform shorter than one analysis window");

  // log-spaced band centres between 100 Hz and 7 kHz
  static const auto kCentres = [] {
    std::array<double, kBands> c{};
    for (int b = 0; b < kBands; ++b) c[static_cast<std::size_t>(b)] = 100.0 * std::pow(70.0, b / (kBands - 1.0));
    return c;
  }();

  Eigen::MatrixXf inputs(frames, kBands + 2);
  std::array<double, kWindow> buf{};
  for (long long t = 0; t < frames; ++t) {
    const std::size_t start = static_cast<std::size_t>(t) * kHop;
    double energy = 0.0;
    int crossings = 0;
    for (int n = 0; n < kWindow; ++n) {
      const std::size_t idx = start + static_cast<std::size_t>(n);
      const double s = idx < waveform.samples.size() ? waveform.samples[idx] : 0.0;
      const double hann = 0.5 - 0.5 * std::cos(2.0 * M_PI * n / (kWindow - 1));
      buf[static_cast<std::size_t>(n)] = s * hann;
      energy += s * s;
      if (n > 0 && (buf[static_cast<std::size_t>(n)] >= 0) != (buf[static_cast<std::size_t>(n) - 1] >= 0)) ++crossings;
    }
    for (int b = 0; b < kBands; ++b) {
      const double w = 2.0 * M_PI * kCentres[static_cast<std::size_t>(b)] / kTargetSampleRate;
      double re = 0.0, im = 0.0;
      for (int n = 0; n < kWindow; ++n) {
        re += buf[static_cast<std::size_t>(n)] * std::cos(w * n);
        im -= buf[static_cast<std::size_t>(n)] * std::sin(w * n);
      }
      inputs(t, b) = static_cast<float>(0.1 * std::log(re * re + im * im + 1e-8));
    }
    inputs(t, kBands) = static_cast<float>(0.1 * std::log(energy / kWindow + 1e-8));
    inputs(t, kBands + 1) = static_cast<float>(static_cast<double>(crossings) / kWindow);
  }

  FeatureSequence out;
  out.backbone = id_;
  out.record_id = record_id;
  out.frames = ((inputs * projection_).rowwise() + offset_).array().tanh().matrix();
  out.validate();
  return out;
}

std::vector<float> zero_mean_unit_variance(std::span<const float> samples) {
  double mean = 0.0;
  for (float s : samples) mean += s;
  mean /= static_cast<double>(samples.size());
  double var = 0.0;
  for (float s : samples) var += (s - mean) * (s - mean);
  var /= static_cast<double>(samples.size());
  const double inv = 1.0 / std::sqrt(var + 1e-7);
  std::vector<float> out(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) out[i] = static_cast<float>((samples[i] - mean) * inv);
  return out;
}

SslBackbone::SslBackbone(BackboneId id, SslEncoder encoder, bool normalize_input)
    : id_(std::move(id)), encoder_(std::move(encoder)), normalize_input_(normalize_input) {
  if (encoder_.hidden_size() != id_.width())
    throw CheckpointUnavailable(id_.checkpoint_ref + " has hidden size " +
                                std::to_string(encoder_.hidden_size()) + " but " +
                                std::string(to_string(id_.name)) + " declares " +
                                std::to_string(id_.width()));
  if (id_.layer > encoder_.num_layers())
    throw CheckpointUnavailable("layer " + std::to_string(id_.layer) + " exceeds the " +
                                std::to_string(encoder_.num_layers()) + "-layer encoder");
}

FeatureSequence SslBackbone::extract(const Waveform& waveform, const std::string& record_id) const {
  FeatureSequence out;
  out.backbone = id_;
  out.record_id = record_id;
  if (normalize_input_) {
    const auto normalized = zero_mean_unit_variance(waveform.samples);
    out.frames = encoder_.forward(normalized, id_.layer);
  } else {
    out.frames = encoder_.forward(waveform.samples, id_.layer);
  }
  out.validate();
  return out;
}

fs::path resolve_checkpoint_dir(const std::string& checkpoint_ref, const BackboneLoaderOptions& options) {
  if (fs::is_directory(checkpoint_ref)) return checkpoint_ref;
  fs::path root = options.checkpoint_root;
  if (const char* env = std::getenv(kCheckpointDirEnv); env && *env) root = env;
  std::string flat;
  for (std::size_t i = 0; i < checkpoint_ref.size(); ++i) {
    if (checkpoint_ref[i] == '/') flat += "__";
    else flat.push_back(checkpoint_ref[i]);
  }
  return root / flat;
}

namespace {

bool default_normalization(BackboneName name) {
  // matches the published feature-extractor configs of the default checkpoints
  return name != BackboneName::kHubertBase;
}

bool checkpoint_normalization(const fs::path& dir, BackboneName name) {
  std::ifstream in(dir / "preprocessor_config.json");
  if (in) {
    const auto j = nlohmann::json::parse(in, nullptr, false);
    if (!j.is_discarded() && j.contains("do_normalize")) return j["do_normalize"].get<bool>();
  }
  return default_normalization(name);
}

}  // namespace

std::unique_ptr<Backbone> load_backbone(const BackboneId& id, const BackboneLoaderOptions& options) {
  if (id.stub) return std::make_unique<StubBackbone>(id, options.stub_seed);

  const fs::path dir = resolve_checkpoint_dir(id.checkpoint_ref, options);
  if (!fs::is_directory(dir))
    throw CheckpointUnavailable("checkpoint '" + id.checkpoint_ref + "' not found at " + dir.string() +
                                "; convert it with tools/convert_checkpoint.py or set " +
                                kCheckpointDirEnv);
  bool normalize = false;
  switch (options.normalize) {
    case InputNormalization::kOn: normalize = true; break;
    case InputNormalization::kOff: normalize = false; break;
    case InputNormalization::kAuto: normalize = checkpoint_normalization(dir, id.name); break;
  }
  spdlog::info("loading {} from {} (input normalization {})", to_string(id.name), dir.string(),
               normalize ? "on" : "off");
  return std::make_unique<SslBackbone>(id, SslEncoder::load(dir), normalize);
}

FeatureSequence extract_features(const Waveform& waveform, const Backbone& backbone,
                                 const std::string& record_id) {
  return backbone.extract(waveform, record_id);
}

}  // namespace baved
