#pragma once

#include <string>
#include <vector>

namespace affine_cdo {

struct Series {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

/// Self-contained SVG line chart; the plotted data is embedded as a CSV table in a comment.
/// Non-finite points are skipped.
std::string line_chart_svg(const std::string& title, const std::string& x_label, const std::string& y_label,
                           const std::vector<Series>& series);

}  // namespace affine_cdo
