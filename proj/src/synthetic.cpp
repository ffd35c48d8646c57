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

#include "baved/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "baved/audio.hpp"
#include "baved/errors.hpp"
#include "baved/random.hpp"

namespace fs = std::filesystem;

namespace baved {
namespace {

constexpr double kTwoPi = 6.283185307179586;

std::vector<float> voice(Rng& rng, int rate, double duration_s, double f0, int harmonics, double amplitude,
                         double tremolo_hz) {
  const auto n = static_cast<std::size_t>(duration_s * rate);
  std::vector<float> out(n);
  const double attack = 0.04 * rate;
  double phase = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / rate;
    const double glide = 1.0 + 0.05 * std::sin(kTwoPi * 1.5 * t);
    phase += kTwoPi * f0 * glide / rate;
    double s = 0.0;
    for (int h = 1; h <= harmonics; ++h) s += std::sin(h * phase) / h;
    const double env = std::min({1.0, i / attack, (n - i) / attack}) *
                       (1.0 + 0.3 * std::sin(kTwoPi * tremolo_hz * t));
    out[i] = static_cast<float>(amplitude * env * s / 1.8 + 0.005 * rng.normal());
  }
  return out;
}

}  // namespace

std::vector<fs::path> write_synthetic_corpus(const fs::path& root, const SynthOptions& options) {
  if (options.speakers < 1 || options.words < 1 || options.words > 7 || options.takes < 1 ||
      options.sample_rates.empty())
    throw ConfigError("synthetic corpus needs >= 1 speaker and take, and 1..7 words");
  static constexpr double kLevelPitch[] = {0.8, 1.0, 1.35};
  static constexpr double kLevelAmp[] = {0.12, 0.3, 0.7};
  static constexpr int kLevelHarmonics[] = {2, 4, 8};

  Rng rng(options.seed);
  std::vector<fs::path> written;
  for (int level = 0; level < 3; ++level) fs::create_directories(root / std::to_string(level));
  for (int s = 0; s < options.speakers; ++s) {
    const int gender = s % 3 == 2 ? 1 : 0;
    const int age = 18 + (s * 7) % 45;
    const double speaker_pitch = (gender ? 210.0 : 120.0) * rng.uniform(0.9, 1.1);
    for (int w = 0; w < options.words; ++w) {
      for (int level = 0; level < 3; ++level) {
        for (int take = 0; take < options.takes; ++take) {
          const int rate = options.sample_rates[rng.below(options.sample_rates.size())];
          const bool stereo = rng.uniform() < options.stereo_fraction;
          const double dur = rng.uniform(options.min_duration_s, options.max_duration_s);
          const double f0 = speaker_pitch * kLevelPitch[level] * (1.0 + 0.03 * w);
          auto mono = voice(rng, rate, dur, f0, kLevelHarmonics[level], kLevelAmp[level] * rng.uniform(0.85, 1.15),
                            2.0 + w);
          std::vector<float> samples;
          if (stereo) {
            samples.reserve(mono.size() * 2);
            for (float v : mono) {
              samples.push_back(v);
              samples.push_back(0.9f * v);
            }
          } else {
            samples = std::move(mono);
          }
          const std::string name = std::to_string(w) + "-" + std::to_string(s) + "-" + std::to_string(gender) + "-" +
                                   std::to_string(age) + "-" + std::to_string(level) + "-" + std::to_string(take) +
                                   ".wav";
          const fs::path path = root / std::to_string(level) / name;
          write_wav_pcm16(path, samples, rate, stereo ? 2 : 1);
          written.push_back(path);
        }
      }
    }
  }
  std::sort(written.begin(), written.end());
  return written;
}

}  // namespace baved
