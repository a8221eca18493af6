// Copyright 2026 The mgatune Authors. All Rights Reserved.
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

#include <algorithm>
#include <cstdio>
#include <string>
#include <vector>

namespace mga::plot {

struct Series {
  std::string name;
  std::vector<double> values;
  std::string color;
};

inline std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

inline std::string fmt(double v, const char* spec = "%.3f") {
  char buf[64];
  std::snprintf(buf, sizeof(buf), spec, v);
  return buf;
}

// Grouped vertical bar chart as a standalone SVG document. An optional
// horizontal reference line is drawn at `reference` when it is positive.
inline std::string bar_chart_svg(const std::string& title, const std::vector<std::string>& categories,
                                 const std::vector<Series>& series, const std::string& y_label,
                                 double reference = 0.0) {
  const double width = std::max(480.0, 90.0 + categories.size() * (series.size() * 26.0 + 24.0));
  const double height = 360, left = 70, right = 20, top = 40, bottom = 80;
  const double plot_w = width - left - right, plot_h = height - top - bottom;
  double ymax = reference;
  for (const auto& s : series)
    for (double v : s.values) ymax = std::max(ymax, v);
  ymax = ymax > 0 ? ymax * 1.1 : 1.0;
  auto y = [&](double v) { return top + plot_h * (1.0 - v / ymax); };

  std::string svg = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt(width, "%.0f") + "\" height=\"" +
                    fmt(height, "%.0f") + "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg += "<text x=\"" + fmt(width / 2, "%.1f") + "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" + escape(title) +
         "</text>\n";
  svg += "<line x1=\"" + fmt(left) + "\" y1=\"" + fmt(top) + "\" x2=\"" + fmt(left) + "\" y2=\"" + fmt(top + plot_h) +
         "\" stroke=\"black\"/>\n";
  svg += "<line x1=\"" + fmt(left) + "\" y1=\"" + fmt(top + plot_h) + "\" x2=\"" + fmt(left + plot_w) + "\" y2=\"" +
         fmt(top + plot_h) + "\" stroke=\"black\"/>\n";
  for (int t = 0; t <= 4; ++t) {
    const double v = ymax * t / 4.0;
    svg += "<text x=\"" + fmt(left - 6) + "\" y=\"" + fmt(y(v) + 4) + "\" text-anchor=\"end\">" + fmt(v, "%.2f") +
           "</text>\n";
  }
  svg += "<text transform=\"translate(16," + fmt(top + plot_h / 2) + ") rotate(-90)\" text-anchor=\"middle\">" +
         escape(y_label) + "</text>\n";
  if (reference > 0)
    svg += "<line x1=\"" + fmt(left) + "\" y1=\"" + fmt(y(reference)) + "\" x2=\"" + fmt(left + plot_w) + "\" y2=\"" +
           fmt(y(reference)) + "\" stroke=\"gray\" stroke-dasharray=\"4 3\"/>\n";

  const double group_w = plot_w / std::max<std::size_t>(1, categories.size());
  const double bar_w = std::min(24.0, (group_w - 12.0) / std::max<std::size_t>(1, series.size()));
  for (std::size_t c = 0; c < categories.size(); ++c) {
    const double gx = left + group_w * c + (group_w - bar_w * series.size()) / 2;
    for (std::size_t s = 0; s < series.size(); ++s) {
      const double v = c < series[s].values.size() ? series[s].values[c] : 0.0;
      svg += "<rect x=\"" + fmt(gx + bar_w * s) + "\" y=\"" + fmt(y(v)) + "\" width=\"" + fmt(bar_w - 2) +
             "\" height=\"" + fmt(top + plot_h - y(v)) + "\" fill=\"" + series[s].color + "\"><title>" +
             escape(series[s].name + " " + categories[c]) + ": " + fmt(v, "%.4f") + "</title></rect>\n";
    }
    svg += "<text transform=\"translate(" + fmt(left + group_w * (c + 0.5)) + "," + fmt(top + plot_h + 14) +
           ") rotate(30)\" text-anchor=\"start\">" + escape(categories[c]) + "</text>\n";
  }
  for (std::size_t s = 0; s < series.size(); ++s) {
    const double lx = left + 10 + 140.0 * s;
    svg += "<rect x=\"" + fmt(lx) + "\" y=\"" + fmt(height - 18) + "\" width=\"10\" height=\"10\" fill=\"" +
           series[s].color + "\"/>\n";
    svg += "<text x=\"" + fmt(lx + 14) + "\" y=\"" + fmt(height - 9) + "\">" + escape(series[s].name) + "</text>\n";
  }
  svg += "</svg>\n";
  return svg;
}

}  // namespace mga::plot
