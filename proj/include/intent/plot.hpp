#pragma once

#include <string>
#include <vector>

namespace intent {

struct PlotSeries {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

struct PlotLabels {
  std::string title;
  std::string x_label;
  std::string y_label;
};

// Standalone SVG line chart with markers, axis ticks and a legend.
std::string line_chart_svg(const std::vector<PlotSeries>& series, const PlotLabels& labels, int width = 640,
                           int height = 420);

}  // namespace intent
