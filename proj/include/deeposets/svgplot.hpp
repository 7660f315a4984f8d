#pragma once

#include <string>
#include <utility>
#include <vector>

namespace deeposets::plot {

struct Series {
  std::string label;
  std::vector<std::pair<double, double>> points;
};

// Minimal SVG line chart: linear or log10 axes, decade/auto ticks, legend.
// Enough to render MSE-vs-n, MSE-vs-noise, and latency-vs-n figures.
struct LineChart {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool log_x = false;
  bool log_y = false;
  std::vector<Series> series;
  std::string provenance;  // embedded as an SVG <desc> element

  std::string to_svg() const;
};

void write_svg(const LineChart& chart, const std::string& path);

}  // namespace deeposets::plot
