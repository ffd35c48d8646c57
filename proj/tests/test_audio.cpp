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

#include <cmath>
#include <cstring>
#include <fstream>

#include "baved/audio.hpp"
#include "baved/errors.hpp"
#include "support.hpp"

using namespace baved;
using baved::testing::TempDir;

namespace {

// Minimal RIFF writer for formats the library does not write itself.
void write_raw_wav(const std::filesystem::path& path, int rate, int channels, int bits, bool is_float,
                   bool extensible, const std::vector<double>& interleaved) {
  std::vector<unsigned char> data;
  for (double v : interleaved) {
    if (is_float && bits == 32) {
      float f = static_cast<float>(v);
      unsigned char b[4];
      std::memcpy(b, &f, 4);
      data.insert(data.end(), b, b + 4);
    } else if (bits == 24) {
      const auto s = static_cast<std::int32_t>(std::lround(v * 8388607.0));
      data.push_back(static_cast<unsigned char>(s));
      data.push_back(static_cast<unsigned char>(s >> 8));
      data.push_back(static_cast<unsigned char>(s >> 16));
    } else if (bits == 8) {
      data.push_back(static_cast<unsigned char>(std::lround(v * 127.0) + 128));
    }
  }
  std::ofstream out(path, std::ios::binary);
  auto u32 = [&](std::uint32_t v) { for (int i = 0; i < 4; ++i) out.put(static_cast<char>(v >> (8 * i))); };
  auto u16 = [&](std::uint16_t v) { out.put(static_cast<char>(v)); out.put(static_cast<char>(v >> 8)); };
  const std::uint32_t fmt_size = extensible ? 40 : 16;
  out.write("RIFF", 4);
  u32(4 + 8 + fmt_size + 8 + static_cast<std::uint32_t>(data.size()));
  out.write("WAVE", 4);
  out.write("fmt ", 4);
  u32(fmt_size);
  u16(extensible ? 0xFFFE : (is_float ? 3 : 1));
  u16(static_cast<std::uint16_t>(channels));
  u32(static_cast<std::uint32_t>(rate));
  u32(static_cast<std::uint32_t>(rate * channels * bits / 8));
  u16(static_cast<std::uint16_t>(channels * bits / 8));
  u16(static_cast<std::uint16_t>(bits));
  if (extensible) {
    u16(22);
    u16(static_cast<std::uint16_t>(bits));
    u32(0);
    u16(is_float ? 3 : 1);  // sub-format GUID, first two bytes carry the format code
    const unsigned char tail[14] = {0x00, 0x00, 0x00, 0x00, 0x10, 0x00, 0x80, 0x00, 0x00, 0xAA, 0x00, 0x38, 0x9B, 0x71};
    out.write(reinterpret_cast<const char*>(tail), 14);
  }
  out.write("LIST", 4);  // an unrelated chunk the reader must skip
  u32(4);
  out.write("INFO", 4);
  out.write("data", 4);
  u32(static_cast<std::uint32_t>(data.size()));
  out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
}

std::vector<float> sine(std::size_t n, double freq, int rate, double amp = 0.5) {
  std::vector<float> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = static_cast<float>(amp * std::sin(2 * M_PI * freq * i / rate));
  return x;
}

}  // namespace

TEST_SUITE("audio") {

TEST_CASE("16 kHz mono input of N samples keeps exactly N samples") {
  TempDir dir("audio_id");
  const auto x = sine(12345, 440, 16000);
  write_wav_pcm16(dir / "a.wav", x, 16000);
  const Waveform w = load_waveform(dir / "a.wav");
  CHECK(w.sample_rate == 16000);
  REQUIRE(w.samples.size() == x.size());
  for (std::size_t i = 0; i < x.size(); ++i) CHECK(std::abs(w.samples[i] - x[i]) <= 1.0f / 32767.0f);
}

TEST_CASE("48 kHz input of 48000 samples resamples to 16000 +- 1") {
  TempDir dir("audio_48");
  write_wav_pcm16(dir / "a.wav", sine(48000, 300, 48000), 48000);
  const Waveform w = load_waveform(dir / "a.wav");
  const double expected = 48000.0 * 16000.0 / 48000.0;
  CHECK(std::abs(static_cast<double>(w.samples.size()) - expected) <= 1.0);
}

TEST_CASE("resampled length follows N * to / from for assorted rates") {
  for (int from : {8000, 11025, 22050, 44100, 48000, 96000})
    for (std::size_t n : {400u, 999u, 16000u, 44101u}) {
      const auto y = resample(sine(n, 200, from), from, 16000);
      CHECK(std::abs(static_cast<double>(y.size()) - static_cast<double>(n) * 16000.0 / from) <= 1.0);
      CHECK(y.size() == resampled_length(n, from, 16000));
    }
}

TEST_CASE("resampling preserves an in-band tone and removes an out-of-band one") {
  const int from = 44100;
  const auto in_band = resample(sine(44100, 1000, from), from, 16000);
  const auto ref = sine(in_band.size(), 1000, 16000);
  double err = 0.0;
  for (std::size_t i = 200; i + 200 < ref.size(); ++i) err = std::max(err, std::abs(double(in_band[i]) - ref[i]));
  CHECK(err < 0.01);

  const auto alias = resample(sine(44100, 12000, from), from, 16000);
  double peak = 0.0;
  for (std::size_t i = 200; i + 200 < alias.size(); ++i) peak = std::max(peak, std::abs(double(alias[i])));
  CHECK(peak < 0.01);
}

TEST_CASE("stereo is averaged, 24-bit, 8-bit, float and extensible files decode") {
  TempDir dir("audio_fmt");
  std::vector<double> stereo;
  for (int i = 0; i < 1000; ++i) {
    stereo.push_back(0.5);
    stereo.push_back(-0.25);
  }
  write_raw_wav(dir / "s24.wav", 16000, 2, 24, false, false, stereo);
  auto w = load_waveform(dir / "s24.wav");
  REQUIRE(w.samples.size() == 1000);
  CHECK(w.samples[10] == doctest::Approx(0.125).epsilon(1e-5));

  write_raw_wav(dir / "f32.wav", 16000, 1, 32, true, false, std::vector<double>(800, -0.75));
  w = load_waveform(dir / "f32.wav");
  CHECK(w.samples[5] == doctest::Approx(-0.75));

  write_raw_wav(dir / "ext.wav", 16000, 2, 32, true, true, stereo);
  w = load_waveform(dir / "ext.wav");
  CHECK(w.samples[7] == doctest::Approx(0.125));

  write_raw_wav(dir / "u8.wav", 16000, 1, 8, false, false, std::vector<double>(800, 0.5));
  w = load_waveform(dir / "u8.wav");
  CHECK(w.samples[3] == doctest::Approx(0.5).epsilon(0.01));
}

TEST_CASE("out-of-range float input is clipped to [-1, 1]") {
  TempDir dir("audio_clip");
  write_raw_wav(dir / "hot.wav", 16000, 1, 32, true, false, std::vector<double>(800, 1.7));
  const auto w = load_waveform(dir / "hot.wav");
  for (float s : w.samples) CHECK(s <= 1.0f);
}

TEST_CASE("clips under 25 ms are rejected, garbage fails to decode") {
  TempDir dir("audio_short");
  write_wav_pcm16(dir / "short.wav", sine(399, 300, 16000), 16000);
  CHECK_THROWS_AS(load_waveform(dir / "short.wav"), TooShort);
  write_wav_pcm16(dir / "ok.wav", sine(400, 300, 16000), 16000);
  CHECK(load_waveform(dir / "ok.wav").samples.size() == 400);
  // 25 ms at 8 kHz is 200 samples, which becomes 400 at 16 kHz
  write_wav_pcm16(dir / "ok8k.wav", sine(200, 300, 8000), 8000);
  CHECK(load_waveform(dir / "ok8k.wav").samples.size() == 400);

  std::ofstream(dir / "junk.wav") << "definitely not RIFF data";
  CHECK_THROWS_AS(load_waveform(dir / "junk.wav"), DecodeFailure);
  CHECK_THROWS_AS(load_waveform(dir / "absent.wav"), DecodeFailure);
}

TEST_CASE("probe_wav reports header facts without decoding") {
  TempDir dir("audio_probe");
  write_wav_pcm16(dir / "a.wav", sine(22050, 300, 22050), 22050);
  const auto info = probe_wav(dir / "a.wav");
  CHECK(info.sample_rate == 22050);
  CHECK(info.channels == 1);
  CHECK(info.bits_per_sample == 16);
  CHECK(info.frames == 22050);
  CHECK(info.duration_s() == doctest::Approx(1.0));
}

}  // TEST_SUITE
