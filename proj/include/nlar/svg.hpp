#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace nlar {

struct SvgSeries {
  std::string label;
  std::vector<double> ys;  // plotted at x = 1..n (epoch index)
};

// Self-contained SVG 1.1 polyline chart: axes, ticks, legend. Non-finite
// values break the polyline instead of being drawn.
void write_line_chart(std::ostream& out, const std::string& title,
                      const std::string& x_label, const std::string& y_label,
                      const std::vector<SvgSeries>& series, double y_min, double y_max);

}  // namespace nlar
