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
#include <vector>

#include "baved/metrics.hpp"
#include "baved/trainer.hpp"

namespace baved::plots {

struct HistorySeries {
  std::string label;
  TrainingHistory history;
};

struct LabeledReport {
  std::string label;
  metrics::MetricsReport report;
};

/// Writes train-loss, val-loss and val-macro-F1 line plots (one series per
/// entry) plus one confusion heatmap per report, as PNG, each next to a CSV
/// of the plotted data. All inputs are checked before anything is written;
/// an empty series list or history throws std::invalid_argument. Returns
/// the image paths. Throws WriteFailure.
std::vector<std::filesystem::path> emit_plots(const std::vector<HistorySeries>& series,
                                              const std::vector<LabeledReport>& reports,
                                              const std::filesystem::path& out_dir);

}  // namespace baved::plots
