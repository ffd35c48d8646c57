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

#include "baved/feature_cache.hpp"

#include <atomic>
#include <bit>
#include <cstring>
#include <fstream>
#include <system_error>
#include <thread>

#include <unistd.h>

#include "baved/errors.hpp"

namespace fs = std::filesystem;

namespace baved {
namespace {

static_assert(std::endian::native == std::endian::little, "cache format assumes a little-endian host");

void put_u32(unsigned char* p, std::uint32_t v) { std::memcpy(p, &v, 4); }
void put_u64(unsigned char* p, std::uint64_t v) { std::memcpy(p, &v, 8); }
std::uint32_t get_u32(const unsigned char* p) {
  std::uint32_t v;
  std::memcpy(&v, p, 4);
  return v;
}
std::uint64_t get_u64(const unsigned char* p) {
  std::uint64_t v;
  std::memcpy(&v, p, 8);
  return v;
}

std::atomic<std::uint64_t> temp_counter{0};

}  // namespace

fs::path cache_entry_path(const fs::path& cache_root, const BackboneId& backbone,
                          const std::string& record_id) {
  return cache_root / backbone.cache_dir_name() / fs::path(record_id + ".feat");
}

void cache_put(const FeatureSequence& features, const fs::path& cache_root) {
  const fs::path target = cache_entry_path(cache_root, features.backbone, features.record_id);
  std::error_code ec;
  fs::create_directories(target.parent_path(), ec);
  if (ec) throw WriteFailure("cannot create " + target.parent_path().string() + ": " + ec.message());

  unsigned char header[kCacheHeaderBytes];
  std::memcpy(header, kCacheMagic, 4);
  put_u32(header + 4, kCacheVersion);
  put_u64(header + 8, static_cast<std::uint64_t>(features.frames.rows()));
  put_u32(header + 16, static_cast<std::uint32_t>(features.frames.cols()));
  put_u32(header + 20, kCacheFloat32);

  const std::string suffix = ".tmp." + std::to_string(::getpid()) + "." +
                             std::to_string(std::hash<std::thread::id>{}(std::this_thread::get_id())) +
                             "." + std::to_string(temp_counter.fetch_add(1));
  const fs::path temp = target.string() + suffix;
  {
    std::ofstream out(temp, std::ios::binary);
    if (!out) throw WriteFailure("cannot open " + temp.string());
    out.write(reinterpret_cast<const char*>(header), kCacheHeaderBytes);
    out.write(reinterpret_cast<const char*>(features.frames.data()),
              static_cast<std::streamsize>(features.frames.size() * sizeof(float)));
    out.flush();
    if (!out) {
      fs::remove(temp, ec);
      throw WriteFailure("failed writing " + temp.string());
    }
  }
  fs::rename(temp, target, ec);
  if (ec) {
    fs::remove(temp, ec);
    throw WriteFailure("cannot rename into " + target.string());
  }
}

std::optional<FeatureSequence> cache_get(const std::string& record_id, const BackboneId& backbone,
                                         const fs::path& cache_root) {
  const fs::path path = cache_entry_path(cache_root, backbone, record_id);
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;

  auto corrupt = [&](const std::string& why) { return CorruptCacheEntry(path.string() + ": " + why); };
  unsigned char header[kCacheHeaderBytes];
  if (!in.read(reinterpret_cast<char*>(header), kCacheHeaderBytes)) throw corrupt("truncated header");
  if (std::memcmp(header, kCacheMagic, 4) != 0) throw corrupt("bad magic");
  if (get_u32(header + 4) != kCacheVersion) throw corrupt("unsupported version");
  if (get_u32(header + 20) != kCacheFloat32) throw corrupt("unsupported element type");
  const std::uint64_t frames = get_u64(header + 8);
  const std::uint32_t width = get_u32(header + 16);
  if (frames < 1) throw corrupt("zero frames");
  if (static_cast<int>(width) != backbone.width()) throw corrupt("width does not match backbone");

  std::error_code ec;
  const auto size = fs::file_size(path, ec);
  if (ec || size != kCacheHeaderBytes + frames * width * sizeof(float))
    throw corrupt("payload size does not match header");

  FeatureSequence out;
  out.backbone = backbone;
  out.record_id = record_id;
  out.frames.resize(static_cast<Eigen::Index>(frames), width);
  if (!in.read(reinterpret_cast<char*>(out.frames.data()),
               static_cast<std::streamsize>(frames * width * sizeof(float))))
    throw corrupt("truncated payload");
  if (!out.frames.allFinite()) throw corrupt("non-finite payload");
  return out;
}

}  // namespace baved
