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

#include "baved/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "baved/errors.hpp"

namespace baved {
namespace {

const char* const kKeys[] = {
    "corpus.root",
    "corpus.name_fields",
    "corpus.gender_map",
    "corpus.check_level_dirs",
    "split.train_fraction",
    "split.val_fraction",
    "split.seed",
    "split.speaker_disjoint",
    "backbone.name",
    "backbone.checkpoint_ref",
    "backbone.layer",
    "backbone.stub",
    "backbone.normalize_input",
    "backbone.checkpoint_root",
    "cache.root",
    "cache.enabled",
    "extract.workers",
    "head.kind",
    "head.hidden_sizes",
    "head.lstm_hidden",
    "head.dropout",
    "head.activation",
    "head.pooling",
    "head.standardize",
    "train.epochs",
    "train.batch_size",
    "train.learning_rate",
    "train.seed",
    "train.keep_best_val",
    "compare.backbones",
    "compare.heads",
    "output.plots",
};

// shortest text that parses back to the same double
std::string fmt_double(double v) {
  char buf[40];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) out += (i ? "," : "") + items[i];
  return out;
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    if (b != std::string::npos) out.push_back(item.substr(b, e - b + 1));
  }
  return out;
}

class Values {
 public:
  explicit Values(std::map<std::string, std::string> raw) : raw_(std::move(raw)) {}

  bool has(const std::string& key) const { return raw_.count(key) != 0; }

  std::string str(const std::string& key, const std::string& fallback) const {
    const auto it = raw_.find(key);
    return it == raw_.end() ? fallback : it->second;
  }

  bool boolean(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    const auto v = raw_.at(key);
    if (v == "true" || v == "yes" || v == "on" || v == "1") return true;
    if (v == "false" || v == "no" || v == "off" || v == "0") return false;
    throw ConfigError(key + ": '" + v + "' is not a boolean");
  }

  long long integer(const std::string& key, long long fallback) const {
    if (!has(key)) return fallback;
    const auto& v = raw_.at(key);
    long long out = 0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size()) throw ConfigError(key + ": '" + v + "' is not an integer");
    return out;
  }

  double real(const std::string& key, double fallback) const {
    if (!has(key)) return fallback;
    const auto& v = raw_.at(key);
    try {
      std::size_t used = 0;
      const double out = std::stod(v, &used);
      if (used != v.size()) throw std::invalid_argument(v);
      return out;
    } catch (const std::exception&) {
      throw ConfigError(key + ": '" + v + "' is not a number");
    }
  }

 private:
  std::map<std::string, std::string> raw_;
};

std::string scalar_text(const YAML::Node& node, const std::string& key) {
  if (node.IsScalar()) return node.as<std::string>();
  if (node.IsSequence()) {
    std::vector<std::string> items;
    for (const auto& item : node) {
      if (!item.IsScalar()) throw ConfigError(key + ": nested lists are not allowed");
      items.push_back(item.as<std::string>());
    }
    return join(items);
  }
  if (node.IsNull()) return "";
  throw ConfigError(key + ": nested mappings are not allowed; use dotted keys");
}

}  // namespace

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys(std::begin(kKeys), std::end(kKeys));
  return keys;
}

RunConfig parse_config(const std::string& yaml_text) {
  YAML::Node root;
  try {
    root = YAML::Load(yaml_text);
  } catch (const YAML::Exception& e) {
    throw ConfigError(std::string("config is not valid YAML: ") + e.what());
  }
  std::map<std::string, std::string> raw;
  if (root.IsMap()) {
    const auto& known = config_keys();
    for (const auto& kv : root) {
      const auto key = kv.first.as<std::string>();
      if (std::find(known.begin(), known.end(), key) == known.end())
        throw ConfigError("unknown config key '" + key + "'");
      raw[key] = scalar_text(kv.second, key);
    }
  } else if (!root.IsNull()) {
    throw ConfigError("config must be a flat mapping of dotted keys");
  }
  const Values v(std::move(raw));

  RunConfig c;
  c.corpus_root = v.str("corpus.root", "");
  c.scan.schema.tokens = NameSchema::parse_fields(
      v.str("corpus.name_fields", "word,speaker_id,gender,age,emotion_level,counter"));
  c.scan.schema.gender_codes = NameSchema::parse_gender_codes(v.str("corpus.gender_map", "0:male,1:female"));
  c.scan.check_level_dirs = v.boolean("corpus.check_level_dirs", true);

  auto& x = c.experiment;
  x.split.ratios.train = v.real("split.train_fraction", 0.8);
  x.split.ratios.val = v.real("split.val_fraction", 0.2);
  if (x.split.ratios.train < 0 || x.split.ratios.val < 0 ||
      std::abs(x.split.ratios.train + x.split.ratios.val - 1.0) > 1e-9 || x.split.ratios.train == 0)
    throw ConfigError("split.train_fraction and split.val_fraction must be nonnegative and sum to 1");
  x.split.seed = static_cast<std::uint64_t>(v.integer("split.seed", 42));
  x.split.speaker_disjoint = v.boolean("split.speaker_disjoint", false);

  const BackboneName name = parse_backbone_name(v.str("backbone.name", "wav2vec2_arabic"));
  x.backbone = BackboneId::real(name);
  c.checkpoint_ref_explicit = v.has("backbone.checkpoint_ref");
  if (c.checkpoint_ref_explicit) x.backbone.checkpoint_ref = v.str("backbone.checkpoint_ref", "");
  const std::string layer = v.str("backbone.layer", "last");
  x.backbone.layer = layer == "last" ? -1 : static_cast<int>(v.integer("backbone.layer", -1));
  if (x.backbone.layer < -1) throw ConfigError("backbone.layer must be 'last' or >= 0");
  x.backbone.stub = v.boolean("backbone.stub", false);
  if (x.backbone.stub) x.backbone.checkpoint_ref = "stub";
  const std::string norm = v.str("backbone.normalize_input", "auto");
  if (norm == "auto") c.loader.normalize = InputNormalization::kAuto;
  else if (norm == "true" || norm == "on") c.loader.normalize = InputNormalization::kOn;
  else if (norm == "false" || norm == "off") c.loader.normalize = InputNormalization::kOff;
  else throw ConfigError("backbone.normalize_input must be auto, true or false");
  c.loader.checkpoint_root = v.str("backbone.checkpoint_root", "checkpoints");

  c.cache.root = v.str("cache.root", ".baved_cache");
  c.cache.enabled = v.boolean("cache.enabled", true);
  c.workers = static_cast<int>(v.integer("extract.workers", 1));
  if (c.workers < 1) throw ConfigError("extract.workers must be >= 1");

  auto& h = x.head;
  h.kind = heads::parse_head_kind(v.str("head.kind", "mlp"));
  h.hidden_sizes.clear();
  for (const auto& s : split_list(v.str("head.hidden_sizes", "256,64"))) {
    try {
      h.hidden_sizes.push_back(std::stoi(s));
    } catch (const std::exception&) {
      throw ConfigError("head.hidden_sizes: '" + s + "' is not an integer");
    }
  }
  h.lstm_hidden = static_cast<int>(v.integer("head.lstm_hidden", 50));
  h.dropout = v.real("head.dropout", 0.1);
  h.activation = heads::parse_activation(v.str("head.activation", "relu"));
  h.pooling = heads::parse_pooling(v.str("head.pooling", "mean"));
  h.standardize = v.boolean("head.standardize", true);

  x.epochs = static_cast<int>(v.integer("train.epochs", 5));
  x.batch_size = static_cast<int>(v.integer("train.batch_size", 32));
  x.learning_rate = v.real("train.learning_rate", 1e-3);
  x.seed = static_cast<std::uint64_t>(v.integer("train.seed", 42));
  x.keep_best_val = v.boolean("train.keep_best_val", false);
  x.validate();

  c.compare_backbones.clear();
  for (const auto& s : split_list(v.str("compare.backbones", "wav2vec2_arabic,hubert_base,hubert_large")))
    c.compare_backbones.push_back(parse_backbone_name(s));
  if (c.compare_backbones.empty()) throw ConfigError("compare.backbones is empty");
  c.compare_heads.clear();
  for (const auto& s : split_list(v.str("compare.heads", "mlp,bilstm"))) c.compare_heads.push_back(heads::parse_head_kind(s));
  if (c.compare_heads.empty()) throw ConfigError("compare.heads is empty");
  c.emit_plots = v.boolean("output.plots", true);
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

RunConfig RunConfig::with_backbone(BackboneName name) const {
  RunConfig c = *this;
  const auto layer = c.experiment.backbone.layer;
  const bool stub = c.experiment.backbone.stub;
  c.experiment.backbone = stub ? BackboneId::stub_of(name) : BackboneId::real(name);
  c.experiment.backbone.layer = layer;
  c.checkpoint_ref_explicit = false;
  return c;
}

std::vector<std::pair<std::string, std::string>> RunConfig::resolved() const {
  const auto& x = experiment;
  const auto b = [](bool v) { return std::string(v ? "true" : "false"); };
  std::vector<std::string> fields;
  for (auto f : scan.schema.tokens) {
    switch (f) {
      case NameSchema::Field::kWord: fields.push_back("word"); break;
      case NameSchema::Field::kSpeaker: fields.push_back("speaker_id"); break;
      case NameSchema::Field::kGender: fields.push_back("gender"); break;
      case NameSchema::Field::kAge: fields.push_back("age"); break;
      case NameSchema::Field::kEmotion: fields.push_back("emotion_level"); break;
      case NameSchema::Field::kIgnore: fields.push_back("counter"); break;
    }
  }
  std::vector<std::string> genders;
  for (const auto& [code, g] : scan.schema.gender_codes) genders.push_back(code + ":" + std::string(to_string(g)));
  std::vector<std::string> hidden;
  for (int s : x.head.hidden_sizes) hidden.push_back(std::to_string(s));
  std::vector<std::string> backbones;
  for (auto n : compare_backbones) backbones.emplace_back(to_string(n));
  std::vector<std::string> head_kinds;
  for (auto k : compare_heads) head_kinds.emplace_back(heads::to_string(k));
  const char* norm = loader.normalize == InputNormalization::kAuto ? "auto"
                     : loader.normalize == InputNormalization::kOn ? "true" : "false";

  return {
      {"corpus.root", corpus_root.string()},
      {"corpus.name_fields", join(fields)},
      {"corpus.gender_map", join(genders)},
      {"corpus.check_level_dirs", b(scan.check_level_dirs)},
      {"split.train_fraction", fmt_double(x.split.ratios.train)},
      {"split.val_fraction", fmt_double(x.split.ratios.val)},
      {"split.seed", std::to_string(x.split.seed)},
      {"split.speaker_disjoint", b(x.split.speaker_disjoint)},
      {"backbone.name", std::string(to_string(x.backbone.name))},
      {"backbone.checkpoint_ref", x.backbone.checkpoint_ref},
      {"backbone.layer", x.backbone.layer < 0 ? "last" : std::to_string(x.backbone.layer)},
      {"backbone.stub", b(x.backbone.stub)},
      {"backbone.normalize_input", norm},
      {"backbone.checkpoint_root", loader.checkpoint_root.string()},
      {"cache.root", cache.root.string()},
      {"cache.enabled", b(cache.enabled)},
      {"extract.workers", std::to_string(workers)},
      {"head.kind", std::string(heads::to_string(x.head.kind))},
      {"head.hidden_sizes", join(hidden)},
      {"head.lstm_hidden", std::to_string(x.head.lstm_hidden)},
      {"head.dropout", fmt_double(x.head.dropout)},
      {"head.activation", std::string(heads::to_string(x.head.activation))},
      {"head.pooling", std::string(heads::to_string(x.head.pooling))},
      {"head.standardize", b(x.head.standardize)},
      {"train.epochs", std::to_string(x.epochs)},
      {"train.batch_size", std::to_string(x.batch_size)},
      {"train.learning_rate", fmt_double(x.learning_rate)},
      {"train.seed", std::to_string(x.seed)},
      {"train.keep_best_val", b(x.keep_best_val)},
      {"compare.backbones", join(backbones)},
      {"compare.heads", join(head_kinds)},
      {"output.plots", b(emit_plots)},
  };
}

}  // namespace baved
