#pragma once

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace sheetcap {

struct ChartSeries {
  std::string name;
  std::vector<std::pair<double, double>> points;
};

// Minimal line chart, enough for capacity-vs-refinement and p-vs-eps plots.
inline void write_line_chart(std::ostream& os, const std::string& title,
                             const std::string& x_label, const std::string& y_label,
                             const std::vector<ChartSeries>& series) {
  constexpr int width = 640;
  constexpr int height = 400;
  constexpr int margin_left = 70;
  constexpr int margin_right = 20;
  constexpr int margin_top = 40;
  constexpr int margin_bottom = 50;
  static const char* palette[] = {"#1f6fb2", "#c23b22", "#2a8f4e", "#8258a8"};

  double x_min = 0.0, x_max = 1.0, y_min = 0.0, y_max = 1.0;
  bool first = true;
  for (const ChartSeries& s : series) {
    for (const auto& [x, y] : s.points) {
      if (first) {
        x_min = x_max = x;
        y_min = y_max = y;
        first = false;
      }
      x_min = std::min(x_min, x);
      x_max = std::max(x_max, x);
      y_min = std::min(y_min, y);
      y_max = std::max(y_max, y);
    }
  }
  if (x_max == x_min) x_max = x_min + 1.0;
  if (y_max == y_min) y_max = y_min + 1.0;

  const double plot_w = width - margin_left - margin_right;
  const double plot_h = height - margin_top - margin_bottom;
  auto px = [&](double x) { return margin_left + (x - x_min) / (x_max - x_min) * plot_w; };
  auto py = [&](double y) { return margin_top + (1.0 - (y - y_min) / (y_max - y_min)) * plot_h; };

  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
     << height << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
  os << "<rect width=\"" << width << "\" height=\"" << height << "\" fill=\"white\"/>\n";
  os << "<text x=\"" << width / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">"
     << title << "</text>\n";
  os << "<line x1=\"" << margin_left << "\" y1=\"" << margin_top + plot_h << "\" x2=\""
     << margin_left + plot_w << "\" y2=\"" << margin_top + plot_h
     << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << margin_left << "\" y1=\"" << margin_top << "\" x2=\"" << margin_left
     << "\" y2=\"" << margin_top + plot_h << "\" stroke=\"black\"/>\n";

  for (int tick = 0; tick <= 4; ++tick) {
    const double xv = x_min + tick * (x_max - x_min) / 4.0;
    const double yv = y_min + tick * (y_max - y_min) / 4.0;
    std::ostringstream xs, ys;
    xs.precision(4);
    ys.precision(4);
    xs << xv;
    ys << yv;
    os << "<text x=\"" << px(xv) << "\" y=\"" << margin_top + plot_h + 18
       << "\" text-anchor=\"middle\" font-size=\"11\">" << xs.str() << "</text>\n";
    os << "<text x=\"" << margin_left - 8 << "\" y=\"" << py(yv) + 4
       << "\" text-anchor=\"end\" font-size=\"11\">" << ys.str() << "</text>\n";
  }
  os << "<text x=\"" << margin_left + plot_w / 2 << "\" y=\"" << height - 12
     << "\" text-anchor=\"middle\" font-size=\"12\">" << x_label << "</text>\n";
  os << "<text x=\"16\" y=\"" << margin_top + plot_h / 2
     << "\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 16 "
     << margin_top + plot_h / 2 << ")\">" << y_label << "</text>\n";

  for (std::size_t s = 0; s < series.size(); ++s) {
    const char* color = palette[s % 4];
    os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    for (const auto& [x, y] : series[s].points) os << px(x) << "," << py(y) << " ";
    os << "\"/>\n";
    for (const auto& [x, y] : series[s].points) {
      os << "<circle cx=\"" << px(x) << "\" cy=\"" << py(y) << "\" r=\"2.5\" fill=\"" << color
         << "\"/>\n";
    }
    os << "<text x=\"" << margin_left + plot_w - 6 << "\" y=\"" << margin_top + 14 + 14 * s
       << "\" text-anchor=\"end\" font-size=\"11\" fill=\"" << color << "\">"
       << series[s].name << "</text>\n";
  }
  os << "</svg>\n";
}

}  // namespace sheetcap
