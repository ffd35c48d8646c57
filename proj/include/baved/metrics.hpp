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
#include <span>
#include <string>

namespace baved::metrics {

inline constexpr int kClasses = 3;

/// Rows are true emotion levels, columns predicted.
struct ConfusionMatrix {
  std::array<std::array<std::uint64_t, kClasses>, kClasses> counts{};

  std::uint64_t total() const;
  std::uint64_t trace() const;
  std::uint64_t row_sum(int i) const;
  std::uint64_t col_sum(int j) const;
  bool operator==(const ConfusionMatrix&) const = default;
};

struct ClassScores {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::uint64_t support = 0;
  /// Set when a 0/0 ratio was defined as 0 (no predictions or no support).
  bool undefined = false;
};

struct MetricsReport {
  ConfusionMatrix confusion;
  std::array<ClassScores, kClasses> per_class{};
  double macro_f1 = 0.0;
  double weighted_f1 = 0.0;  // support-weighted, for comparison only
  double accuracy = 0.0;

  bool operator==(const MetricsReport& other) const;
};

/// Throws LengthMismatch (different or zero lengths), LabelOutOfRange.
ConfusionMatrix confusion_matrix(std::span<const int> true_labels, std::span<const int> predicted);

/// Harmonic mean 2pr/(p+r); 0 when p + r == 0, and exactly p when p == r.
double f1_from_pr(double precision, double recall);

/// Throws EmptyMatrix.
MetricsReport report(const ConfusionMatrix& confusion);

/// Machine-readable JSON.
std::string to_json(const MetricsReport& report);
MetricsReport report_from_json(const std::string& text);

/// Confusion counts with a labeled header row and column.
void write_confusion_csv(const ConfusionMatrix& confusion, const std::filesystem::path& path);

}  // namespace baved::metrics
