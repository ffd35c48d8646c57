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

#include "baved/audio.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>

#include "baved/errors.hpp"

namespace baved {
namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

std::uint32_t le32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint16_t le16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

struct ParsedHeader {
  WavInfo info;
  std::uint64_t data_offset = 0;
  std::uint64_t data_bytes = 0;
};

ParsedHeader parse_header(std::istream& in, const std::filesystem::path& path) {
  auto fail = [&](const std::string& why) -> DecodeFailure {
    return DecodeFailure(path.string() + ": " + why);
  };
  unsigned char riff[12];
  if (!in.read(reinterpret_cast<char*>(riff), 12)) throw fail("file shorter than RIFF header");
  if (std::memcmp(riff, "RIFF", 4) != 0 || std::memcmp(riff + 8, "WAVE", 4) != 0)
    throw fail("not a RIFF/WAVE file");

  ParsedHeader h;
  bool have_fmt = false;
  std::uint16_t format = 0;
  std::uint16_t block_align = 0;
  std::uint64_t offset = 12;
  while (true) {
    unsigned char chunk[8];
    if (!in.read(reinterpret_cast<char*>(chunk), 8)) throw fail("no data chunk");
    offset += 8;
    const std::uint32_t size = le32(chunk + 4);
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (size < 16) throw fail("fmt chunk too small");
      std::vector<unsigned char> fmt(size);
      if (!in.read(reinterpret_cast<char*>(fmt.data()), size)) throw fail("truncated fmt chunk");
      format = le16(fmt.data());
      h.info.channels = le16(fmt.data() + 2);
      h.info.sample_rate = static_cast<int>(le32(fmt.data() + 4));
      block_align = le16(fmt.data() + 12);
      h.info.bits_per_sample = le16(fmt.data() + 14);
      if (format == kFormatExtensible) {
        if (size < 40) throw fail("extensible fmt chunk too small");
        format = le16(fmt.data() + 24);  // first two bytes of the subformat GUID
      }
      have_fmt = true;
      if (size % 2) in.ignore(1);
      offset += size + (size % 2);
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      if (!have_fmt) throw fail("data chunk before fmt chunk");
      h.data_offset = offset;
      h.data_bytes = size;
      break;
    } else {
      in.ignore(static_cast<std::streamsize>(size) + (size % 2));
      offset += size + (size % 2);
    }
  }

  if (format != kFormatPcm && format != kFormatFloat) throw fail("unsupported sample format");
  h.info.is_float = format == kFormatFloat;
  const int bits = h.info.bits_per_sample;
  const bool bits_ok = h.info.is_float ? (bits == 32 || bits == 64)
                                       : (bits == 8 || bits == 16 || bits == 24 || bits == 32);
  if (!bits_ok) throw fail("unsupported bit depth " + std::to_string(bits));
  if (h.info.channels < 1) throw fail("zero channels");
  if (h.info.sample_rate <= 0) throw fail("invalid sample rate");
  const std::uint64_t frame_bytes = static_cast<std::uint64_t>(h.info.channels) * (bits / 8);
  if (block_align != frame_bytes) throw fail("block alignment disagrees with format");
  h.info.frames = h.data_bytes / frame_bytes;
  return h;
}

double bessel_i0(double x) {
  double sum = 1.0;
  double term = 1.0;
  const double q = x * x / 4.0;
  for (int k = 1; k < 64; ++k) {
    term *= q / (static_cast<double>(k) * k);
    sum += term;
    if (term < sum * 1e-17) break;
  }
  return sum;
}

}  // namespace

WavInfo probe_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DecodeFailure(path.string() + ": cannot open");
  return parse_header(in, path).info;
}

DecodedWav read_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DecodeFailure(path.string() + ": cannot open");
  const ParsedHeader h = parse_header(in, path);

  const int bytes = h.info.bits_per_sample / 8;
  const std::uint64_t count = h.info.frames * static_cast<std::uint64_t>(h.info.channels);
  std::vector<unsigned char> raw(count * bytes);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (static_cast<std::uint64_t>(in.gcount()) != raw.size())
    throw DecodeFailure(path.string() + ": truncated data chunk");

  DecodedWav out;
  out.info = h.info;
  out.interleaved.resize(count);
  const unsigned char* p = raw.data();
  for (std::uint64_t i = 0; i < count; ++i, p += bytes) {
    double v = 0.0;
    if (h.info.is_float) {
      if (bytes == 4) {
        float f;
        std::uint32_t u = le32(p);
        std::memcpy(&f, &u, 4);
        v = f;
      } else {
        std::uint64_t u = static_cast<std::uint64_t>(le32(p)) |
                          (static_cast<std::uint64_t>(le32(p + 4)) << 32);
        double d;
        std::memcpy(&d, &u, 8);
        v = d;
      }
    } else {
      switch (bytes) {
        case 1:
          v = (static_cast<int>(p[0]) - 128) / 128.0;
          break;
        case 2:
          v = static_cast<std::int16_t>(le16(p)) / 32768.0;
          break;
        case 3: {
          std::int32_t s = static_cast<std::int32_t>(p[0] | (p[1] << 8) | (p[2] << 16));
          if (s & 0x800000) s -= 0x1000000;
          v = s / 8388608.0;
          break;
        }
        default:
          v = static_cast<std::int32_t>(le32(p)) / 2147483648.0;
      }
    }
    if (!std::isfinite(v)) throw DecodeFailure(path.string() + ": non-finite sample");
    out.interleaved[i] = static_cast<float>(v);
  }
  return out;
}

void write_wav_pcm16(const std::filesystem::path& path, std::span<const float> samples,
                     int sample_rate, int channels) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DecodeFailure(path.string() + ": cannot open for writing");
  auto put32 = [&](std::uint32_t v) {
    const unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                                static_cast<unsigned char>(v >> 16),
                                static_cast<unsigned char>(v >> 24)};
    out.write(reinterpret_cast<const char*>(b), 4);
  };
  auto put16 = [&](std::uint16_t v) {
    const unsigned char b[2] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8)};
    out.write(reinterpret_cast<const char*>(b), 2);
  };
  const auto data_bytes = static_cast<std::uint32_t>(samples.size() * 2);
  out.write("RIFF", 4);
  put32(36 + data_bytes);
  out.write("WAVEfmt ", 8);
  put32(16);
  put16(kFormatPcm);
  put16(static_cast<std::uint16_t>(channels));
  put32(static_cast<std::uint32_t>(sample_rate));
  put32(static_cast<std::uint32_t>(sample_rate * channels) * 2);
  put16(static_cast<std::uint16_t>(2 * channels));
  put16(16);
  out.write("data", 4);
  put32(data_bytes);
  for (float s : samples) {
    const float c = std::clamp(s, -1.0f, 1.0f);
    put16(static_cast<std::uint16_t>(static_cast<std::int16_t>(std::lround(c * 32767.0f))));
  }
  if (!out) throw DecodeFailure(path.string() + ": write failed");
}

std::vector<float> downmix(const DecodedWav& wav) {
  const int ch = wav.info.channels;
  std::vector<float> mono(wav.info.frames);
  for (std::size_t f = 0; f < mono.size(); ++f) {
    double acc = 0.0;
    for (int c = 0; c < ch; ++c) acc += wav.interleaved[f * ch + c];
    mono[f] = static_cast<float>(acc / ch);
  }
  return mono;
}

std::size_t resampled_length(std::size_t n, int from_rate, int to_rate) {
  const auto num = static_cast<unsigned long long>(n) * static_cast<unsigned long long>(to_rate);
  return static_cast<std::size_t>((num + static_cast<unsigned long long>(from_rate) / 2) /
                                  static_cast<unsigned long long>(from_rate));
}

std::vector<float> resample(std::span<const float> input, int from_rate, int to_rate) {
  if (from_rate == to_rate) return {input.begin(), input.end()};

  constexpr int kZeroCrossings = 16;
  constexpr double kBeta = 8.6;
  const int g = std::gcd(from_rate, to_rate);
  const int up = to_rate / g;    // output steps per period
  const int down = from_rate / g;  // input steps per period

  // Cutoff relative to the input Nyquist; lowpass only when decimating.
  const double cutoff = std::min(1.0, static_cast<double>(to_rate) / from_rate) * 0.97;
  const double half_width = kZeroCrossings / cutoff;
  const int taps_each_side = static_cast<int>(std::ceil(half_width));
  const int taps = 2 * taps_each_side;
  const double i0_beta = bessel_i0(kBeta);

  // Output n sits at input position n * down / up = base + phase / up.
  std::vector<double> table(static_cast<std::size_t>(up) * taps);
  for (int phase = 0; phase < up; ++phase) {
    const double frac = static_cast<double>(phase) / up;
    double norm = 0.0;
    for (int k = 0; k < taps; ++k) {
      const double dist = (k - taps_each_side + 1) - frac;
      double w = 0.0;
      if (std::abs(dist) < half_width) {
        const double r = dist / half_width;
        const double window = bessel_i0(kBeta * std::sqrt(1.0 - r * r)) / i0_beta;
        const double x = cutoff * dist;
        const double sinc = x == 0.0 ? 1.0 : std::sin(M_PI * x) / (M_PI * x);
        w = cutoff * sinc * window;
      }
      table[static_cast<std::size_t>(phase) * taps + k] = w;
      norm += w;
    }
    // unity DC gain per phase
    for (int k = 0; k < taps; ++k) table[static_cast<std::size_t>(phase) * taps + k] /= norm;
  }

  const std::size_t out_len = resampled_length(input.size(), from_rate, to_rate);
  const auto in_len = static_cast<long long>(input.size());
  std::vector<float> out(out_len);
  for (std::size_t n = 0; n < out_len; ++n) {
    const unsigned long long pos = static_cast<unsigned long long>(n) * down;
    const long long base = static_cast<long long>(pos / up);
    const int phase = static_cast<int>(pos % up);
    const double* h = table.data() + static_cast<std::size_t>(phase) * taps;
    double acc = 0.0;
    for (int k = 0; k < taps; ++k) {
      const long long idx = base + k - taps_each_side + 1;
      if (idx >= 0 && idx < in_len) acc += h[k] * input[static_cast<std::size_t>(idx)];
    }
    out[n] = static_cast<float>(acc);
  }
  return out;
}

Waveform load_waveform(const std::filesystem::path& path) {
  const DecodedWav wav = read_wav(path);
  std::vector<float> mono = downmix(wav);
  Waveform w;
  w.samples = resample(mono, wav.info.sample_rate, kTargetSampleRate);
  w.sample_rate = kTargetSampleRate;
  for (float& s : w.samples) s = std::clamp(s, -1.0f, 1.0f);
  if (w.samples.size() < kMinSamples)
    throw TooShort(path.string() + ": " + std::to_string(w.samples.size()) +
                   " samples at 16 kHz, need at least " + std::to_string(kMinSamples));
  return w;
}

}  // namespace baved
