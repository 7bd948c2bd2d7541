#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace cgp {

struct SvgSeries {
  std::vector<double> x;
  std::vector<double> y;
  std::string color = "#000000";
  std::string dash;  // stroke-dasharray; empty draws solid
  std::string label;
};

// Vertical reference line spanning the plot height.
struct SvgMarker {
  double x = 0.0;
  std::string color = "#000000";
  std::string label;
};

// Self-contained 800x600 line chart with axes, ticks and a legend. Output is
// deterministic for identical inputs.
void write_line_chart(const std::filesystem::path& path,
                      const std::vector<SvgSeries>& series,
                      const std::vector<SvgMarker>& markers,
                      const std::string& title, const std::string& x_label,
                      const std::string& y_label);

}  // namespace cgp
