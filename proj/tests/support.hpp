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

#include <atomic>
#include <cmath>
#include <filesystem>
#include <functional>
#include <string>
#include <unistd.h>
#include <vector>

#include <Eigen/Core>

#include "baved/dataset.hpp"
#include "baved/heads.hpp"
#include "baved/random.hpp"

namespace baved::testing {

class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("baved_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline FrameMatrix random_frames(Rng& rng, Eigen::Index t, Eigen::Index d, double scale = 1.0) {
  FrameMatrix m(t, d);
  for (Eigen::Index i = 0; i < t; ++i)
    for (Eigen::Index j = 0; j < d; ++j) m(i, j) = static_cast<float>(scale * rng.normal());
  return m;
}

/// In-memory dataset with `per_class` records per level and no audio files.
inline Dataset memory_dataset(int per_class, int speakers = 5) {
  Dataset d;
  d.root = "/nonexistent";
  int counter = 0;
  for (int level = 0; level < 3; ++level)
    for (int i = 0; i < per_class; ++i) {
      RecordMeta r;
      r.word = i % 7;
      r.speaker_id = i % speakers;
      r.gender = r.speaker_id % 2 ? Gender::kFemale : Gender::kMale;
      r.age = 30;
      r.emotion_level = level;
      r.record_id = std::to_string(level) + "/" + std::to_string(r.word) + "-" + std::to_string(r.speaker_id) + "-" +
                    (r.gender == Gender::kFemale ? "1" : "0") + "-30-" + std::to_string(level) + "-" +
                    std::to_string(counter++) + ".wav";
      d.records.push_back(r);
    }
  std::sort(d.records.begin(), d.records.end(),
            [](const RecordMeta& a, const RecordMeta& b) { return a.record_id < b.record_id; });
  return d;
}

/// Largest elementwise relative error between analytic gradients and
/// central finite differences of loss_and_gradients (no dropout), using
/// |a - n| / max(|a| + |n|, floor).
inline double gradient_check(heads::Head& head, std::span<const heads::TrainingExample> batch, double eps = 1e-5,
                             double floor = 1e-7) {
  head.loss_and_gradients(batch, nullptr);
  std::vector<Eigen::MatrixXd> analytic;
  for (const auto& p : head.parameters()) analytic.push_back(p.grad);
  double worst = 0.0;
  auto& params = head.parameters();
  for (std::size_t k = 0; k < params.size(); ++k) {
    for (Eigen::Index i = 0; i < params[k].value.size(); ++i) {
      double& w = params[k].value.data()[i];
      const double saved = w;
      w = saved + eps;
      const double up = head.loss_and_gradients(batch, nullptr);
      w = saved - eps;
      const double down = head.loss_and_gradients(batch, nullptr);
      w = saved;
      const double numeric = (up - down) / (2.0 * eps);
      const double a = analytic[k].data()[i];
      worst = std::max(worst, std::abs(a - numeric) / std::max(std::abs(a) + std::abs(numeric), floor));
    }
  }
  head.loss_and_gradients(batch, nullptr);
  return worst;
}

/// Fills every parameter with seeded N(0, scale^2) values.
inline void randomize(heads::Head& head, std::uint64_t seed, double scale = 0.5) {
  Rng rng(seed);
  for (auto& p : head.parameters())
    for (Eigen::Index i = 0; i < p.value.size(); ++i) p.value.data()[i] = scale * rng.normal();
}

}  // namespace baved::testing
