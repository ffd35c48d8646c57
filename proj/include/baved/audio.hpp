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
#include <span>
#include <vector>

namespace baved {

inline constexpr int kTargetSampleRate = 16000;
/// One 25 ms analysis window at 16 kHz; anything shorter has no frames.
inline constexpr std::size_t kMinSamples = 400;

struct Waveform {
  std::vector<float> samples;  // mono, amplitude in [-1, 1]
  int sample_rate = kTargetSampleRate;

  double duration_s() const {
    return static_cast<double>(samples.size()) / static_cast<double>(sample_rate);
  }
};

struct WavInfo {
  int sample_rate = 0;
  int channels = 0;
  int bits_per_sample = 0;
  bool is_float = false;
  std::uint64_t frames = 0;

  double duration_s() const {
    return sample_rate > 0 ? static_cast<double>(frames) / sample_rate : 0.0;
  }
};

struct DecodedWav {
  WavInfo info;
  std::vector<float> interleaved;  // frames * channels, full scale = 1.0
};

/// Reads the RIFF header only. Throws DecodeFailure.
WavInfo probe_wav(const std::filesystem::path& path);

/// Decodes 8/16/24/32-bit integer PCM and 32/64-bit float WAV, including
/// WAVE_FORMAT_EXTENSIBLE. Throws DecodeFailure.
DecodedWav read_wav(const std::filesystem::path& path);

/// Writes 16-bit PCM from interleaved samples (values clipped to [-1, 1]).
void write_wav_pcm16(const std::filesystem::path& path, std::span<const float> samples,
                     int sample_rate, int channels = 1);

/// Channel average.
std::vector<float> downmix(const DecodedWav& wav);

/// Output length of a rate conversion: round(n * to / from).
std::size_t resampled_length(std::size_t n, int from_rate, int to_rate);

/// Band-limited rational resampler (Kaiser-windowed sinc). Identity when
/// the rates match.
std::vector<float> resample(std::span<const float> input, int from_rate, int to_rate);

/// Decode, downmix, resample to 16 kHz and clip to [-1, 1]. Throws
/// DecodeFailure or TooShort.
Waveform load_waveform(const std::filesystem::path& path);

}  // namespace baved
