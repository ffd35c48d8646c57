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

#include "baved/metrics.hpp"

#include <fstream>

#include <nlohmann/json.hpp>

#include "baved/errors.hpp"

namespace baved::metrics {

std::uint64_t ConfusionMatrix::total() const {
  std::uint64_t t = 0;
  for (const auto& row : counts)
    for (auto c : row) t += c;
  return t;
}

std::uint64_t ConfusionMatrix::trace() const {
  std::uint64_t t = 0;
  for (int i = 0; i < kClasses; ++i) t += counts[i][i];
  return t;
}

std::uint64_t ConfusionMatrix::row_sum(int i) const {
  std::uint64_t s = 0;
  for (int j = 0; j < kClasses; ++j) s += counts[i][j];
  return s;
}

std::uint64_t ConfusionMatrix::col_sum(int j) const {
  std::uint64_t s = 0;
  for (int i = 0; i < kClasses; ++i) s += counts[i][j];
  return s;
}

bool MetricsReport::operator==(const MetricsReport& other) const {
  if (!(confusion == other.confusion) || macro_f1 != other.macro_f1 ||
      weighted_f1 != other.weighted_f1 || accuracy != other.accuracy)
    return false;
  for (int c = 0; c < kClasses; ++c) {
    const auto& a = per_class[c];
    const auto& b = other.per_class[c];
    if (a.precision != b.precision || a.recall != b.recall || a.f1 != b.f1 ||
        a.support != b.support || a.undefined != b.undefined)
      return false;
  }
  return true;
}

ConfusionMatrix confusion_matrix(std::span<const int> true_labels, std::span<const int> predicted) {
  if (true_labels.size() != predicted.size())
    throw LengthMismatch(std::to_string(true_labels.size()) + " labels vs " +
                         std::to_string(predicted.size()) + " predictions");
  if (true_labels.empty()) throw LengthMismatch("no labels");
  ConfusionMatrix m;
  for (std::size_t k = 0; k < true_labels.size(); ++k) {
    const int t = true_labels[k];
    const int p = predicted[k];
    if (t < 0 || t >= kClasses || p < 0 || p >= kClasses)
      throw LabelOutOfRange("pair " + std::to_string(k) + " = (" + std::to_string(t) + ", " +
                            std::to_string(p) + ")");
    ++m.counts[t][p];
  }
  return m;
}

double f1_from_pr(double precision, double recall) {
  if (precision == recall) return precision;
  const double denom = precision + recall;
  if (denom == 0.0) return 0.0;
  return 2.0 * (precision * recall) / denom;
}

MetricsReport report(const ConfusionMatrix& confusion) {
  const std::uint64_t total = confusion.total();
  if (total == 0) throw EmptyMatrix("confusion matrix has no counts");

  MetricsReport r;
  r.confusion = confusion;
  double f1_sum = 0.0;
  double weighted = 0.0;
  for (int c = 0; c < kClasses; ++c) {
    auto& s = r.per_class[c];
    const std::uint64_t tp = confusion.counts[c][c];
    const std::uint64_t predicted = confusion.col_sum(c);
    s.support = confusion.row_sum(c);
    if (predicted > 0) s.precision = static_cast<double>(tp) / static_cast<double>(predicted);
    else s.undefined = true;
    if (s.support > 0) s.recall = static_cast<double>(tp) / static_cast<double>(s.support);
    else s.undefined = true;
    s.f1 = f1_from_pr(s.precision, s.recall);
    f1_sum += s.f1;
    weighted += s.f1 * static_cast<double>(s.support);
  }
  r.macro_f1 = f1_sum / kClasses;
  r.weighted_f1 = weighted / static_cast<double>(total);
  r.accuracy = static_cast<double>(confusion.trace()) / static_cast<double>(total);
  return r;
}

std::string to_json(const MetricsReport& report) {
  nlohmann::ordered_json j;
  j["accuracy"] = report.accuracy;
  j["macro_f1"] = report.macro_f1;
  j["weighted_f1"] = report.weighted_f1;
  j["total"] = report.confusion.total();
  nlohmann::ordered_json classes = nlohmann::ordered_json::array();
  for (int c = 0; c < kClasses; ++c) {
    const auto& s = report.per_class[c];
    classes.push_back({{"emotion_level", c},
                       {"precision", s.precision},
                       {"recall", s.recall},
                       {"f1", s.f1},
                       {"support", s.support},
                       {"undefined", s.undefined}});
  }
  j["per_class"] = classes;
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (const auto& row : report.confusion.counts) rows.push_back(row);
  j["confusion"] = rows;
  return j.dump(2) + "\n";
}

MetricsReport report_from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  MetricsReport r;
  r.accuracy = j.at("accuracy").get<double>();
  r.macro_f1 = j.at("macro_f1").get<double>();
  r.weighted_f1 = j.at("weighted_f1").get<double>();
  const auto& rows = j.at("confusion");
  for (int i = 0; i < kClasses; ++i)
    for (int k = 0; k < kClasses; ++k) r.confusion.counts[i][k] = rows.at(i).at(k).get<std::uint64_t>();
  const auto& classes = j.at("per_class");
  for (int c = 0; c < kClasses; ++c) {
    auto& s = r.per_class[c];
    const auto& e = classes.at(c);
    s.precision = e.at("precision").get<double>();
    s.recall = e.at("recall").get<double>();
    s.f1 = e.at("f1").get<double>();
    s.support = e.at("support").get<std::uint64_t>();
    s.undefined = e.at("undefined").get<bool>();
  }
  return r;
}

void write_confusion_csv(const ConfusionMatrix& confusion, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw WriteFailure("cannot open " + path.string());
  out << "true\\pred,pred_0,pred_1,pred_2\n";
  for (int i = 0; i < kClasses; ++i) {
    out << "true_" << i;
    for (int j = 0; j < kClasses; ++j) out << ',' << confusion.counts[i][j];
    out << '\n';
  }
  if (!out) throw WriteFailure("failed writing " + path.string());
}

}  // namespace baved::metrics
