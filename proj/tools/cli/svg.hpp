#pragma once

#include <string>
#include <vector>

namespace hamembed::cli {

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

/// Self-contained SVG line chart with axes, min/max tick labels and a legend.
/// Non-finite points break the polyline.
std::string line_chart(const std::string& title, const std::string& x_label, const std::string& y_label,
                       const std::vector<Series>& series);

}  // namespace hamembed::cli
