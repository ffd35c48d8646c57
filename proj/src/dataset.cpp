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

#include "baved/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <spdlog/spdlog.h>

#include "baved/errors.hpp"
#include "baved/random.hpp"

namespace fs = std::filesystem;

namespace baved {
namespace {

std::vector<std::string_view> split_on(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = s.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(s.substr(start));
      break;
    }
    out.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

bool parse_int(std::string_view token, int& value) {
  if (token.empty()) return false;
  const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
  return ec == std::errc() && ptr == token.data() + token.size();
}

bool ends_with_wav(std::string_view name) {
  if (name.size() < 4) return false;
  std::string ext(name.substr(name.size() - 4));
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return ext == ".wav";
}

std::ofstream open_for_write(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw WriteFailure("cannot open " + path.string());
  return out;
}

}  // namespace

std::string_view to_string(Gender g) { return g == Gender::kMale ? "male" : "female"; }

NameSchema NameSchema::baved() {
  using F = Field;
  return NameSchema{{F::kWord, F::kSpeaker, F::kGender, F::kAge, F::kEmotion, F::kIgnore},
                    {{"0", Gender::kMale}, {"1", Gender::kFemale}}};
}

std::vector<NameSchema::Field> NameSchema::parse_fields(std::string_view spec) {
  std::vector<Field> fields;
  for (auto raw : split_on(spec, ',')) {
    const auto name = trim(raw);
    if (name == "word") fields.push_back(Field::kWord);
    else if (name == "speaker_id") fields.push_back(Field::kSpeaker);
    else if (name == "gender") fields.push_back(Field::kGender);
    else if (name == "age") fields.push_back(Field::kAge);
    else if (name == "emotion_level") fields.push_back(Field::kEmotion);
    else if (name == "ignore" || name == "counter") fields.push_back(Field::kIgnore);
    else throw ConfigError("unknown filename field '" + std::string(name) + "'");
  }
  for (Field required : {Field::kWord, Field::kSpeaker, Field::kGender, Field::kAge, Field::kEmotion}) {
    if (std::count(fields.begin(), fields.end(), required) != 1)
      throw ConfigError("filename field list must name each of word, speaker_id, gender, age, "
                        "emotion_level exactly once");
  }
  return fields;
}

std::map<std::string, Gender> NameSchema::parse_gender_codes(std::string_view spec) {
  std::map<std::string, Gender> codes;
  for (auto raw : split_on(spec, ',')) {
    const auto pair = split_on(trim(raw), ':');
    if (pair.size() != 2) throw ConfigError("gender map entry '" + std::string(raw) + "' is not code:gender");
    const auto value = trim(pair[1]);
    Gender g;
    if (value == "male") g = Gender::kMale;
    else if (value == "female") g = Gender::kFemale;
    else throw ConfigError("unknown gender '" + std::string(value) + "'");
    codes[std::string(trim(pair[0]))] = g;
  }
  if (codes.empty()) throw ConfigError("empty gender map");
  return codes;
}

RecordMeta parse_record_name(std::string_view filename, const NameSchema& schema) {
  const auto slash = filename.find_last_of('/');
  std::string_view base = slash == std::string_view::npos ? filename : filename.substr(slash + 1);
  auto fail = [&](const std::string& why) {
    return MalformedName("'" + std::string(filename) + "': " + why);
  };
  if (!ends_with_wav(base)) throw fail("not a .wav file");
  base.remove_suffix(4);
  const auto tokens = split_on(base, '-');
  if (tokens.size() != schema.tokens.size())
    throw fail("expected " + std::to_string(schema.tokens.size()) + " dash-separated tokens, got " +
               std::to_string(tokens.size()));

  RecordMeta meta;
  meta.record_id = std::string(filename);
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const auto field = schema.tokens[i];
    if (field == NameSchema::Field::kGender) {
      const auto it = schema.gender_codes.find(std::string(tokens[i]));
      if (it == schema.gender_codes.end()) throw fail("unknown gender code '" + std::string(tokens[i]) + "'");
      meta.gender = it->second;
      continue;
    }
    int value = 0;
    if (!parse_int(tokens[i], value)) throw fail("token '" + std::string(tokens[i]) + "' is not an integer");
    switch (field) {
      case NameSchema::Field::kWord:
        if (value < 0 || value >= kNumWords) throw fail("word id out of range");
        meta.word = value;
        break;
      case NameSchema::Field::kSpeaker:
        meta.speaker_id = value;
        break;
      case NameSchema::Field::kAge:
        if (value < 0) throw fail("negative age");
        meta.age = value;
        break;
      case NameSchema::Field::kEmotion:
        if (value < 0 || value >= kNumEmotionLevels) throw fail("emotion level out of range");
        meta.emotion_level = value;
        break;
      default:
        break;
    }
  }
  return meta;
}

std::array<std::size_t, kNumEmotionLevels> Dataset::class_counts() const {
  std::array<std::size_t, kNumEmotionLevels> counts{};
  for (const auto& r : records) ++counts[static_cast<std::size_t>(r.emotion_level)];
  return counts;
}

std::size_t Dataset::speaker_count() const {
  std::set<int> speakers;
  for (const auto& r : records) speakers.insert(r.speaker_id);
  return speakers.size();
}

std::map<Gender, std::size_t> Dataset::gender_record_counts() const {
  std::map<Gender, std::size_t> counts{{Gender::kMale, 0}, {Gender::kFemale, 0}};
  for (const auto& r : records) ++counts[r.gender];
  return counts;
}

std::map<Gender, std::size_t> Dataset::gender_speaker_counts() const {
  std::map<Gender, std::set<int>> speakers;
  for (const auto& r : records) speakers[r.gender].insert(r.speaker_id);
  std::map<Gender, std::size_t> counts{{Gender::kMale, 0}, {Gender::kFemale, 0}};
  for (const auto& [g, s] : speakers) counts[g] = s.size();
  return counts;
}

const RecordMeta& Dataset::find(const std::string& record_id) const {
  const auto it = std::lower_bound(records.begin(), records.end(), record_id,
                                   [](const RecordMeta& r, const std::string& id) { return r.record_id < id; });
  if (it == records.end() || it->record_id != record_id)
    throw EmptyEvalSet("record '" + record_id + "' is not in the dataset");
  return *it;
}

Dataset scan_dataset(const fs::path& root, const ScanOptions& options) {
  if (!fs::is_directory(root)) throw EmptyCorpus(root.string() + " is not a directory");

  Dataset ds;
  ds.root = root;
  std::size_t skipped = 0;
  for (auto it = fs::recursive_directory_iterator(root, fs::directory_options::follow_directory_symlink);
       it != fs::recursive_directory_iterator(); ++it) {
    if (!it->is_regular_file()) continue;
    const fs::path rel = fs::relative(it->path(), root);
    const std::string id = rel.generic_string();
    if (!ends_with_wav(id)) continue;
    RecordMeta meta;
    try {
      meta = parse_record_name(id, options.schema);
    } catch (const MalformedName& e) {
      spdlog::warn("skipping {}", e.what());
      ++skipped;
      continue;
    }
    if (options.check_level_dirs && rel.has_parent_path()) {
      const std::string parent = rel.parent_path().filename().string();
      int level = 0;
      if (parse_int(parent, level) && level >= 0 && level < kNumEmotionLevels &&
          level != meta.emotion_level) {
        throw InconsistentLabel(id + ": filename says level " + std::to_string(meta.emotion_level) +
                                " but it sits in directory " + parent);
      }
    }
    ds.records.push_back(std::move(meta));
  }
  if (ds.records.empty())
    throw EmptyCorpus("no parseable .wav files under " + root.string());
  std::sort(ds.records.begin(), ds.records.end(),
            [](const RecordMeta& a, const RecordMeta& b) { return a.record_id < b.record_id; });

  const auto counts = ds.class_counts();
  const auto genders = ds.gender_record_counts();
  const auto gender_speakers = ds.gender_speaker_counts();
  spdlog::info("scanned {}: {} records ({} skipped), levels [0]={} [1]={} [2]={}, "
               "{} speakers ({} male / {} female), records male={} female={}",
               root.string(), ds.records.size(), skipped, counts[0], counts[1], counts[2],
               ds.speaker_count(), gender_speakers.at(Gender::kMale),
               gender_speakers.at(Gender::kFemale), genders.at(Gender::kMale),
               genders.at(Gender::kFemale));
  for (int c = 0; c < kNumEmotionLevels; ++c) {
    if (counts[static_cast<std::size_t>(c)] == 0)
      throw DegenerateClass("emotion level " + std::to_string(c) + " has no records");
  }
  return ds;
}

Waveform load_audio(const RecordMeta& record, const fs::path& root) {
  return load_waveform(root / fs::path(record.record_id));
}

namespace {

void check_ratios(SplitRatios ratios) {
  if (!(ratios.train >= 0.0) || !(ratios.val >= 0.0) ||
      std::abs(ratios.train + ratios.val - 1.0) > 1e-9 || ratios.train == 0.0)
    throw ConfigError("split ratios must be nonnegative, sum to 1, and leave a training side");
}

}  // namespace

SplitAssignment stratified_split(const Dataset& dataset, SplitRatios ratios, std::uint64_t seed) {
  check_ratios(ratios);
  SplitAssignment split;
  split.seed = seed;
  split.ratios = ratios;

  std::array<std::vector<std::string>, kNumEmotionLevels> by_class;
  for (const auto& r : dataset.records)
    by_class[static_cast<std::size_t>(r.emotion_level)].push_back(r.record_id);

  Rng rng(derive_seed(seed, "stratified_split"));
  for (int c = 0; c < kNumEmotionLevels; ++c) {
    auto& ids = by_class[static_cast<std::size_t>(c)];
    std::sort(ids.begin(), ids.end());
    const std::size_t n = ids.size();
    std::size_t n_val = static_cast<std::size_t>(std::llround(ratios.val * static_cast<double>(n)));
    if (ratios.val > 0.0) {
      if (n < 2)
        throw DegenerateClass("emotion level " + std::to_string(c) + " has " + std::to_string(n) +
                              " record(s); both split sides need one");
      n_val = std::clamp<std::size_t>(n_val, 1, n - 1);
    }
    rng.shuffle(ids);
    for (std::size_t i = 0; i < n; ++i) (i < n_val ? split.val_ids : split.train_ids).insert(ids[i]);
  }
  return split;
}

SplitAssignment speaker_disjoint_split(const Dataset& dataset, SplitRatios ratios,
                                       std::uint64_t seed) {
  check_ratios(ratios);
  SplitAssignment split;
  split.seed = seed;
  split.ratios = ratios;
  split.speaker_disjoint = true;

  std::map<int, std::vector<const RecordMeta*>> by_speaker;
  for (const auto& r : dataset.records) by_speaker[r.speaker_id].push_back(&r);
  std::vector<int> speakers;
  for (const auto& [s, recs] : by_speaker) speakers.push_back(s);
  if (ratios.val > 0.0 && speakers.size() < 2)
    throw DegenerateClass("speaker-disjoint split needs at least two speakers");

  Rng rng(derive_seed(seed, "speaker_disjoint_split"));
  rng.shuffle(speakers);
  const double target = ratios.val * static_cast<double>(dataset.records.size());
  std::size_t taken = 0;
  std::size_t taken_speakers = 0;
  for (int s : speakers) {
    const auto& recs = by_speaker[s];
    const bool to_val = ratios.val > 0.0 && taken_speakers + 1 < speakers.size() &&
                        static_cast<double>(taken) + 0.5 * static_cast<double>(recs.size()) < target;
    if (to_val) {
      taken += recs.size();
      ++taken_speakers;
    }
    for (const auto* r : recs) (to_val ? split.val_ids : split.train_ids).insert(r->record_id);
  }
  if (ratios.val > 0.0 && split.val_ids.empty()) {
    // every speaker is larger than the target; give validation the smallest one
    const auto smallest = std::min_element(speakers.begin(), speakers.end(), [&](int a, int b) {
      return by_speaker[a].size() < by_speaker[b].size();
    });
    for (const auto* r : by_speaker[*smallest]) {
      split.train_ids.erase(r->record_id);
      split.val_ids.insert(r->record_id);
    }
  }
  return split;
}

std::vector<double> probe_durations(const Dataset& dataset) {
  std::vector<double> out;
  out.reserve(dataset.records.size());
  for (const auto& r : dataset.records) out.push_back(probe_wav(dataset.root / r.record_id).duration_s());
  return out;
}

void write_manifest_csv(const Dataset& dataset, const std::vector<double>& durations_s,
                        const fs::path& path) {
  if (durations_s.size() != dataset.records.size())
    throw LengthMismatch("manifest needs one duration per record");
  auto out = open_for_write(path);
  out << "record_id,word,speaker_id,gender,age,emotion_level,duration_s\n";
  char dur[32];
  for (std::size_t i = 0; i < dataset.records.size(); ++i) {
    const auto& r = dataset.records[i];
    std::snprintf(dur, sizeof dur, "%.6f", durations_s[i]);
    out << r.record_id << ',' << r.word << ',' << r.speaker_id << ',' << to_string(r.gender) << ','
        << r.age << ',' << r.emotion_level << ',' << dur << '\n';
  }
  if (!out) throw WriteFailure("failed writing " + path.string());
}

void write_split_csv(const SplitAssignment& split, const fs::path& path) {
  std::vector<std::pair<std::string_view, std::string_view>> rows;
  for (const auto& id : split.train_ids) rows.emplace_back(id, "train");
  for (const auto& id : split.val_ids) rows.emplace_back(id, "val");
  std::sort(rows.begin(), rows.end());
  auto out = open_for_write(path);
  out << "record_id,split\n";
  for (const auto& [id, side] : rows) out << id << ',' << side << '\n';
  if (!out) throw WriteFailure("failed writing " + path.string());
}

SplitAssignment read_split_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open split file " + path.string());
  std::string line;
  std::getline(in, line);
  if (trim(line) != "record_id,split") throw ConfigError(path.string() + ": unexpected split header");
  SplitAssignment split;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    const auto cols = split_on(trim(line), ',');
    if (cols.size() != 2) throw ConfigError(path.string() + ": bad row '" + line + "'");
    if (cols[1] == "train") split.train_ids.emplace(cols[0]);
    else if (cols[1] == "val") split.val_ids.emplace(cols[0]);
    else throw ConfigError(path.string() + ": unknown split side '" + std::string(cols[1]) + "'");
  }
  return split;
}

}  // namespace baved
