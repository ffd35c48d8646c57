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

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "baved/audio.hpp"

namespace baved {

inline constexpr int kNumEmotionLevels = 3;
inline constexpr int kNumWords = 7;

enum class Gender { kMale, kFemale };

std::string_view to_string(Gender g);

struct RecordMeta {
  std::string record_id;  // path relative to the corpus root, '/' separated
  int word = 0;
  int speaker_id = 0;
  Gender gender = Gender::kMale;
  int age = 0;
  int emotion_level = 0;

  bool operator==(const RecordMeta&) const = default;
};

/// Which dash-separated filename token feeds which field. The public BAVED
/// distribution names files `word-speaker-gender-age-level-counter.wav`.
struct NameSchema {
  enum class Field { kWord, kSpeaker, kGender, kAge, kEmotion, kIgnore };

  std::vector<Field> tokens;
  std::map<std::string, Gender> gender_codes;

  static NameSchema baved();

  /// Parses "word,speaker_id,gender,age,emotion_level,counter" style lists.
  /// Unknown names throw ConfigError.
  static std::vector<Field> parse_fields(std::string_view spec);
  /// Parses "0:male,1:female". Throws ConfigError.
  static std::map<std::string, Gender> parse_gender_codes(std::string_view spec);
};

/// Parses a recording name (a bare basename or a relative path whose last
/// component is the basename). Throws MalformedName.
RecordMeta parse_record_name(std::string_view filename,
                             const NameSchema& schema = NameSchema::baved());

struct Dataset {
  std::filesystem::path root;
  std::vector<RecordMeta> records;  // sorted by record_id

  std::array<std::size_t, kNumEmotionLevels> class_counts() const;
  std::size_t speaker_count() const;
  /// Records per gender, and distinct speakers per gender.
  std::map<Gender, std::size_t> gender_record_counts() const;
  std::map<Gender, std::size_t> gender_speaker_counts() const;
  const RecordMeta& find(const std::string& record_id) const;
};

struct ScanOptions {
  NameSchema schema = NameSchema::baved();
  /// Cross-check the emotion token against an enclosing `0/ 1/ 2/` directory.
  bool check_level_dirs = true;
};

/// Collects every parseable `.wav` under root. Throws EmptyCorpus,
/// InconsistentLabel, DegenerateClass (a level with no records).
Dataset scan_dataset(const std::filesystem::path& root, const ScanOptions& options = {});

Waveform load_audio(const RecordMeta& record, const std::filesystem::path& root);

struct SplitRatios {
  double train = 0.8;
  double val = 0.2;
};

struct SplitAssignment {
  std::set<std::string> train_ids;
  std::set<std::string> val_ids;
  std::uint64_t seed = 0;
  SplitRatios ratios;
  bool speaker_disjoint = false;
};

/// Per-level seeded shuffle over the sorted records, then prefix
/// assignment of round(val * class_total) records to validation.
/// Throws DegenerateClass or ConfigError (bad ratios).
SplitAssignment stratified_split(const Dataset& dataset, SplitRatios ratios, std::uint64_t seed);

/// Whole speakers go to one side. Stratification is only approximate.
SplitAssignment speaker_disjoint_split(const Dataset& dataset, SplitRatios ratios,
                                       std::uint64_t seed);

/// `record_id,word,speaker_id,gender,age,emotion_level,duration_s`
void write_manifest_csv(const Dataset& dataset, const std::vector<double>& durations_s,
                        const std::filesystem::path& path);
/// Per-record durations read from WAV headers, in record order.
std::vector<double> probe_durations(const Dataset& dataset);

/// `record_id,split`
void write_split_csv(const SplitAssignment& split, const std::filesystem::path& path);
SplitAssignment read_split_csv(const std::filesystem::path& path);

}  // namespace baved
