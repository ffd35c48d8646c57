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

#include <cstdint>
#include <filesystem>
#include <vector>

namespace baved {

/// Parameters of a synthetic corpus laid out like BAVED: level directories
/// `0/ 1/ 2/` holding `word-speaker-gender-age-level-take.wav`. Emotion
/// level shifts loudness, pitch and harmonic richness, so heads have
/// something to learn.
struct SynthOptions {
  int speakers = 6;
  int words = 7;
  int takes = 1;
  std::uint64_t seed = 7;
  double min_duration_s = 0.35;
  double max_duration_s = 0.9;
  /// Rates are drawn per file from this list.
  std::vector<int> sample_rates = {16000, 22050, 44100, 48000};
  double stereo_fraction = 0.2;
};

/// Writes the corpus under `root` and returns the written paths, sorted.
std::vector<std::filesystem::path> write_synthetic_corpus(const std::filesystem::path& root,
                                                          const SynthOptions& options = {});

}  // namespace baved
