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
#include <optional>
#include <string>

#include "baved/features.hpp"

namespace baved {

// On-disk entry: a 24-byte little-endian header followed by T*D row-major
// float32 values.
//
//   offset  size  field
//   0       4     magic "BVFC"
//   4       4     format version (1)
//   8       8     T (frames)
//   16      4     D (width)
//   20      4     element type code (1 = float32)
inline constexpr char kCacheMagic[4] = {'B', 'V', 'F', 'C'};
inline constexpr std::uint32_t kCacheVersion = 1;
inline constexpr std::uint32_t kCacheFloat32 = 1;
inline constexpr std::size_t kCacheHeaderBytes = 24;

/// `<cache_root>/<backbone dir>/<record_id>.feat`
std::filesystem::path cache_entry_path(const std::filesystem::path& cache_root,
                                       const BackboneId& backbone, const std::string& record_id);

/// Writes to a temporary sibling and renames it into place, so readers
/// never observe a partial entry. Throws WriteFailure.
void cache_put(const FeatureSequence& features, const std::filesystem::path& cache_root);

/// std::nullopt on a miss. Throws CorruptCacheEntry when the entry exists
/// but its header, size or payload is invalid.
std::optional<FeatureSequence> cache_get(const std::string& record_id, const BackboneId& backbone,
                                         const std::filesystem::path& cache_root);

}  // namespace baved
