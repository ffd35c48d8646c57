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

#include "baved/plots.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <stdexcept>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "baved/errors.hpp"

namespace fs = std::filesystem;

namespace baved::plots {
namespace {

constexpr int kWidth = 900;
constexpr int kHeight = 560;
constexpr int kLeft = 90, kRight = 220, kTop = 60, kBottom = 70;
const int kFont = cv::FONT_HERSHEY_SIMPLEX;

const cv::Scalar kPalette[] = {
    {180, 119, 31}, {14, 127, 255}, {44, 160, 44}, {40, 39, 214}, {189, 103, 148}, {75, 86, 140},
};

std::string short_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

using Metric = std::function<double(const EpochRecord&)>;

void write_series_csv(const std::vector<HistorySeries>& series, const Metric& metric, const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw WriteFailure("cannot open " + path.string());
  out << "series,epoch,value\n";
  char buf[64];
  for (const auto& s : series)
    for (const auto& e : s.history.epochs) {
      std::snprintf(buf, sizeof buf, "%.17g", metric(e));
      out << s.label << ',' << e.epoch << ',' << buf << '\n';
    }
  if (!out) throw WriteFailure("failed writing " + path.string());
}

void save_png(const cv::Mat& img, const fs::path& path) {
  bool ok = false;
  try {
    ok = cv::imwrite(path.string(), img);
  } catch (const cv::Exception& e) {
    throw WriteFailure(path.string() + ": " + e.what());
  }
  if (!ok) throw WriteFailure("cannot write image " + path.string());
}

cv::Mat line_plot(const std::vector<HistorySeries>& series, const Metric& metric, const std::string& title,
                  const std::string& y_label) {
  cv::Mat img(kHeight, kWidth, CV_8UC3, cv::Scalar(255, 255, 255));
  const int plot_w = kWidth - kLeft - kRight;
  const int plot_h = kHeight - kTop - kBottom;

  int max_epoch = 1;
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const auto& s : series)
    for (const auto& e : s.history.epochs) {
      max_epoch = std::max(max_epoch, e.epoch);
      lo = std::min(lo, metric(e));
      hi = std::max(hi, metric(e));
    }
  if (hi - lo < 1e-9) {
    lo -= 0.5;
    hi += 0.5;
  }
  const double pad = 0.05 * (hi - lo);
  lo -= pad;
  hi += pad;

  auto to_px = [&](double epoch, double value) {
    const double fx = max_epoch > 1 ? (epoch - 1.0) / (max_epoch - 1.0) : 0.5;
    return cv::Point(kLeft + static_cast<int>(std::lround(fx * plot_w)),
                     kTop + static_cast<int>(std::lround((hi - value) / (hi - lo) * plot_h)));
  };

  const cv::Scalar axis(60, 60, 60), grid(225, 225, 225);
  for (int i = 0; i <= 5; ++i) {
    const double v = lo + (hi - lo) * i / 5.0;
    const int y = kTop + static_cast<int>(std::lround((hi - v) / (hi - lo) * plot_h));
    cv::line(img, {kLeft, y}, {kLeft + plot_w, y}, grid, 1);
    cv::putText(img, short_num(v), {10, y + 5}, kFont, 0.45, axis, 1, cv::LINE_AA);
  }
  const int step = std::max(1, max_epoch / 10);
  for (int e = 1; e <= max_epoch; e += step) {
    const auto p = to_px(e, lo);
    cv::line(img, {p.x, kTop + plot_h}, {p.x, kTop + plot_h + 6}, axis, 1);
    cv::putText(img, std::to_string(e), {p.x - 6, kTop + plot_h + 24}, kFont, 0.45, axis, 1, cv::LINE_AA);
  }
  cv::rectangle(img, {kLeft, kTop}, {kLeft + plot_w, kTop + plot_h}, axis, 1);
  cv::putText(img, title, {kLeft, 38}, kFont, 0.75, cv::Scalar(0, 0, 0), 2, cv::LINE_AA);
  cv::putText(img, "epoch", {kLeft + plot_w / 2 - 25, kHeight - 20}, kFont, 0.55, axis, 1, cv::LINE_AA);
  cv::putText(img, y_label, {10, kTop - 12}, kFont, 0.5, axis, 1, cv::LINE_AA);

  for (std::size_t i = 0; i < series.size(); ++i) {
    const auto color = kPalette[i % std::size(kPalette)];
    std::vector<cv::Point> pts;
    for (const auto& e : series[i].history.epochs) pts.push_back(to_px(e.epoch, metric(e)));
    if (pts.size() > 1) cv::polylines(img, pts, false, color, 2, cv::LINE_AA);
    for (const auto& p : pts) cv::circle(img, p, 4, color, cv::FILLED, cv::LINE_AA);
    const int ly = kTop + 20 + static_cast<int>(i) * 24;
    const int lx = kLeft + plot_w + 15;
    cv::line(img, {lx, ly - 5}, {lx + 25, ly - 5}, color, 3, cv::LINE_AA);
    cv::putText(img, series[i].label, {lx + 32, ly}, kFont, 0.45, cv::Scalar(0, 0, 0), 1, cv::LINE_AA);
  }
  return img;
}

cv::Mat confusion_heatmap(const LabeledReport& labeled) {
  constexpr int kCell = 120;
  constexpr int kOx = 130, kOy = 90;
  cv::Mat img(kOy + 3 * kCell + 70, kOx + 3 * kCell + 40, CV_8UC3, cv::Scalar(255, 255, 255));
  const auto& m = labeled.report.confusion;
  for (int i = 0; i < 3; ++i) {
    const double row = std::max<double>(1.0, static_cast<double>(m.row_sum(i)));
    for (int j = 0; j < 3; ++j) {
      const double frac = static_cast<double>(m.counts[i][j]) / row;
      // white to dark blue, in BGR
      const cv::Scalar fill(255 - 80 * frac, 255 - 190 * frac, 255 - 230 * frac);
      const cv::Point tl(kOx + j * kCell, kOy + i * kCell);
      cv::rectangle(img, tl, tl + cv::Point(kCell, kCell), fill, cv::FILLED);
      cv::rectangle(img, tl, tl + cv::Point(kCell, kCell), cv::Scalar(120, 120, 120), 1);
      const cv::Scalar ink = frac > 0.5 ? cv::Scalar(255, 255, 255) : cv::Scalar(0, 0, 0);
      const std::string count = std::to_string(m.counts[i][j]);
      cv::putText(img, count, tl + cv::Point(kCell / 2 - 10 * static_cast<int>(count.size()) / 2 - 4, kCell / 2 + 8),
                  kFont, 0.8, ink, 2, cv::LINE_AA);
    }
    cv::putText(img, std::to_string(i), {kOx - 30, kOy + i * kCell + kCell / 2 + 8}, kFont, 0.7,
                cv::Scalar(0, 0, 0), 1, cv::LINE_AA);
    cv::putText(img, std::to_string(i), {kOx + i * kCell + kCell / 2 - 6, kOy - 10}, kFont, 0.7,
                cv::Scalar(0, 0, 0), 1, cv::LINE_AA);
  }
  cv::putText(img, "confusion: " + labeled.label, {10, 30}, kFont, 0.65, cv::Scalar(0, 0, 0), 2, cv::LINE_AA);
  cv::putText(img, "predicted level", {kOx + 3 * kCell / 2 - 70, kOy - 40}, kFont, 0.5, cv::Scalar(60, 60, 60), 1,
              cv::LINE_AA);
  cv::putText(img, "true", {20, kOy + 3 * kCell / 2}, kFont, 0.5, cv::Scalar(60, 60, 60), 1, cv::LINE_AA);
  char acc[64];
  std::snprintf(acc, sizeof acc, "accuracy %.3f  macro-F1 %.3f", labeled.report.accuracy, labeled.report.macro_f1);
  cv::putText(img, acc, {kOx, kOy + 3 * kCell + 40}, kFont, 0.55, cv::Scalar(0, 0, 0), 1, cv::LINE_AA);
  return img;
}

std::string file_tag(const std::string& label) {
  std::string out;
  for (char c : label) out.push_back(std::isalnum(static_cast<unsigned char>(c)) || c == '-' ? c : '_');
  return out;
}

}  // namespace

std::vector<fs::path> emit_plots(const std::vector<HistorySeries>& series,
                                 const std::vector<LabeledReport>& reports, const fs::path& out_dir) {
  if (series.empty()) throw std::invalid_argument("emit_plots: no training histories");
  for (const auto& s : series)
    if (s.history.epochs.empty()) throw std::invalid_argument("emit_plots: history '" + s.label + "' is empty");

  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw WriteFailure("cannot create " + out_dir.string());

  struct Spec {
    const char* stem;
    const char* title;
    const char* y_label;
    Metric metric;
  };
  const Spec specs[] = {
      {"train_loss", "training loss", "TL", [](const EpochRecord& e) { return e.train_loss; }},
      {"val_loss", "validation loss", "VL", [](const EpochRecord& e) { return e.val_loss; }},
      {"val_f1", "validation macro-F1", "macro-F1", [](const EpochRecord& e) { return e.val_macro_f1; }},
  };

  std::vector<fs::path> images;
  for (const auto& spec : specs) {
    write_series_csv(series, spec.metric, out_dir / (std::string(spec.stem) + ".csv"));
    const auto png = out_dir / (std::string(spec.stem) + ".png");
    save_png(line_plot(series, spec.metric, spec.title, spec.y_label), png);
    images.push_back(png);
  }
  for (const auto& r : reports) {
    const std::string stem = reports.size() == 1 ? "confusion" : "confusion_" + file_tag(r.label);
    metrics::write_confusion_csv(r.report.confusion, out_dir / (stem + ".csv"));
    const auto png = out_dir / (stem + ".png");
    save_png(confusion_heatmap(r), png);
    images.push_back(png);
  }
  return images;
}

}  // namespace baved::plots
