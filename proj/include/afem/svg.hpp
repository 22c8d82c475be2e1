#pragma once

#include <string>
#include <vector>

namespace afem {

// Self-contained SVG line plots (no external stylesheets or scripts), enough
// for convergence histories: linear or log10 axes, decade gridlines on log
// axes, markers, legend, and dashed reference-slope guide lines.
struct PlotSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  std::string color;   // empty picks from a fixed palette
  bool markers = true;
};

// Reference slope drawn in axis units: for log-log plots, slope is decades of
// y per decade of x; anchored near the end of the first series.
struct GuideLine {
  double slope = 0.0;
  std::string label;
};

void write_plot_svg(const std::string& path, const std::string& title, const std::string& xlabel,
                    const std::string& ylabel, const std::vector<PlotSeries>& series, bool logx,
                    bool logy, const std::vector<GuideLine>& guides = {});

}  // namespace afem
