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

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "baved/backbone.hpp"
#include "baved/dataset.hpp"
#include "baved/heads.hpp"
#include "baved/trainer.hpp"

namespace baved {

/// Fully resolved run configuration. The file form is a flat YAML mapping
/// with dotted keys (`backbone.name: hubert_base`); every key has a
/// default and unknown keys are rejected.
struct RunConfig {
  std::filesystem::path corpus_root;
  ScanOptions scan;

  ExperimentConfig experiment;

  CacheOptions cache;
  int workers = 1;
  BackboneLoaderOptions loader{"checkpoints", InputNormalization::kAuto, 0x5eed};

  std::vector<BackboneName> compare_backbones = {BackboneName::kWav2vec2Arabic, BackboneName::kHubertBase,
                                                 BackboneName::kHubertLarge};
  std::vector<heads::HeadKind> compare_heads = {heads::HeadKind::kMlp, heads::HeadKind::kBiLstm};
  bool emit_plots = true;

  /// Every key with its effective value, in a fixed order.
  std::vector<std::pair<std::string, std::string>> resolved() const;

  /// Same config with the backbone switched (checkpoint ref reset to the
  /// default for that name unless it was set explicitly).
  RunConfig with_backbone(BackboneName name) const;

  bool checkpoint_ref_explicit = false;
};

/// Every accepted key, in canonical order.
const std::vector<std::string>& config_keys();

/// Throws ConfigError.
RunConfig parse_config(const std::string& yaml_text);
RunConfig load_config(const std::filesystem::path& path);

}  // namespace baved
