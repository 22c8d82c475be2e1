#include "afem/svg.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "afem/util.hpp"

namespace afem {

namespace {

constexpr double kWidth = 760.0, kHeight = 540.0;
constexpr double kLeft = 78.0, kRight = 180.0, kTop = 46.0, kBottom = 62.0;

const char* kPalette[] = {"#1f6fb4", "#d1495b", "#2e8b57", "#8856a7", "#c07f00", "#3b3b3b"};

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '&')
      out += "&amp;";
    else if (c == '<')
      out += "&lt;";
    else if (c == '>')
      out += "&gt;";
    else
      out += c;
  }
  return out;
}

struct Axis {
  bool log = false;
  double lo = 0.0, hi = 1.0;  // in plot units (log10 when log)

  double unit(double v) const { return log ? std::log10(v) : v; }
  bool usable(double v) const { return std::isfinite(v) && (!log || v > 0.0); }
};

std::vector<double> linear_ticks(double lo, double hi) {
  const double span = hi - lo;
  if (!(span > 0.0)) return {lo};
  double raw = span / 5.0;
  double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double norm = raw / mag;
  double step = (norm < 1.5 ? 1.0 : norm < 3.5 ? 2.0 : norm < 7.5 ? 5.0 : 10.0) * mag;
  std::vector<double> t;
  for (double v = std::ceil(lo / step) * step; v <= hi + 1e-9 * span; v += step) t.push_back(v);
  return t;
}

std::string tick_label(double v, bool log) {
  if (log) {
    double r = std::round(v);
    if (std::abs(v - r) < 1e-9) return strf("1e%+03d", static_cast<int>(r));
    return strf("%.2g", std::pow(10.0, v));
  }
  return strf("%g", v);
}

}  // namespace

void write_plot_svg(const std::string& path, const std::string& title, const std::string& xlabel,
                    const std::string& ylabel, const std::vector<PlotSeries>& series, bool logx,
                    bool logy, const std::vector<GuideLine>& guides) {
  Axis ax{logx, 0, 1}, ay{logy, 0, 1};
  double xlo = std::numeric_limits<double>::infinity(), xhi = -xlo;
  double ylo = xlo, yhi = -xlo;
  for (const auto& s : series) {
    if (s.x.size() != s.y.size()) throw std::invalid_argument("write_plot_svg: series size mismatch");
    for (size_t i = 0; i < s.x.size(); ++i) {
      if (!ax.usable(s.x[i]) || !ay.usable(s.y[i])) continue;
      xlo = std::min(xlo, ax.unit(s.x[i]));
      xhi = std::max(xhi, ax.unit(s.x[i]));
      ylo = std::min(ylo, ay.unit(s.y[i]));
      yhi = std::max(yhi, ay.unit(s.y[i]));
    }
  }
  if (!(xlo <= xhi)) {  // no plottable point
    xlo = logx ? 0.0 : 0.0;
    xhi = logx ? 1.0 : 1.0;
    ylo = 0.0;
    yhi = 1.0;
  }
  if (xhi - xlo < 1e-12) {
    xlo -= 0.5;
    xhi += 0.5;
  }
  if (yhi - ylo < 1e-12) {
    ylo -= 0.5;
    yhi += 0.5;
  }
  const double padx = 0.04 * (xhi - xlo), pady = 0.06 * (yhi - ylo);
  ax.lo = xlo - padx;
  ax.hi = xhi + padx;
  ay.lo = ylo - pady;
  ay.hi = yhi + pady;

  const double pw = kWidth - kLeft - kRight, ph = kHeight - kTop - kBottom;
  auto px = [&](double unit_x) { return kLeft + (unit_x - ax.lo) / (ax.hi - ax.lo) * pw; };
  auto py = [&](double unit_y) { return kTop + ph - (unit_y - ay.lo) / (ay.hi - ay.lo) * ph; };

  std::ofstream os(path);
  if (!os) throw std::runtime_error("write_plot_svg: cannot open '" + path + "'");
  os << strf(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%g\" height=\"%g\" "
      "viewBox=\"0 0 %g %g\" font-family=\"Helvetica,Arial,sans-serif\">\n",
      kWidth, kHeight, kWidth, kHeight);
  os << strf("<rect width=\"%g\" height=\"%g\" fill=\"white\"/>\n", kWidth, kHeight);
  os << strf("<text x=\"%g\" y=\"24\" font-size=\"16\" text-anchor=\"middle\">%s</text>\n",
             kLeft + pw / 2, escape(title).c_str());

  // Grid and ticks.
  std::vector<double> xticks, yticks;
  if (logx)
    for (double e = std::ceil(ax.lo); e <= std::floor(ax.hi) + 1e-9; e += 1.0) xticks.push_back(e);
  else
    xticks = linear_ticks(ax.lo, ax.hi);
  if (logy)
    for (double e = std::ceil(ay.lo); e <= std::floor(ay.hi) + 1e-9; e += 1.0) yticks.push_back(e);
  else
    yticks = linear_ticks(ay.lo, ay.hi);
  for (double t : xticks) {
    os << strf("<line x1=\"%g\" y1=\"%g\" x2=\"%g\" y2=\"%g\" stroke=\"#dddddd\"/>\n", px(t), kTop,
               px(t), kTop + ph);
    os << strf("<text x=\"%g\" y=\"%g\" font-size=\"11\" text-anchor=\"middle\">%s</text>\n", px(t),
               kTop + ph + 18, tick_label(t, logx).c_str());
  }
  for (double t : yticks) {
    os << strf("<line x1=\"%g\" y1=\"%g\" x2=\"%g\" y2=\"%g\" stroke=\"#dddddd\"/>\n", kLeft, py(t),
               kLeft + pw, py(t));
    os << strf("<text x=\"%g\" y=\"%g\" font-size=\"11\" text-anchor=\"end\">%s</text>\n", kLeft - 6,
               py(t) + 4, tick_label(t, logy).c_str());
  }
  os << strf("<rect x=\"%g\" y=\"%g\" width=\"%g\" height=\"%g\" fill=\"none\" stroke=\"#333\"/>\n",
             kLeft, kTop, pw, ph);
  os << strf("<text x=\"%g\" y=\"%g\" font-size=\"13\" text-anchor=\"middle\">%s</text>\n",
             kLeft + pw / 2, kHeight - 16, escape(xlabel).c_str());
  os << strf(
      "<text x=\"20\" y=\"%g\" font-size=\"13\" text-anchor=\"middle\" "
      "transform=\"rotate(-90 20 %g)\">%s</text>\n",
      kTop + ph / 2, kTop + ph / 2, escape(ylabel).c_str());

  // Guide slopes, anchored near the last usable point of the first series.
  double anchor_x = ax.hi - 0.05 * (ax.hi - ax.lo), anchor_y = ay.lo + 0.4 * (ay.hi - ay.lo);
  for (const auto& s : series) {
    for (size_t i = s.x.size(); i-- > 0;) {
      if (ax.usable(s.x[i]) && ay.usable(s.y[i])) {
        anchor_x = ax.unit(s.x[i]);
        anchor_y = ay.unit(s.y[i]);
        break;
      }
    }
    break;
  }
  for (const auto& g : guides) {
    const double x1 = anchor_x - 0.35 * (ax.hi - ax.lo), x2 = anchor_x;
    const double off = 0.06 * (ay.hi - ay.lo);
    const double y2 = anchor_y - off, y1 = y2 - g.slope * (x2 - x1);
    os << strf(
        "<line x1=\"%g\" y1=\"%g\" x2=\"%g\" y2=\"%g\" stroke=\"#888\" "
        "stroke-dasharray=\"6 4\"/>\n",
        px(x1), py(y1), px(x2), py(y2));
    os << strf("<text x=\"%g\" y=\"%g\" font-size=\"11\" fill=\"#555\">%s</text>\n", px(x1) + 4,
               py(y1) - 6, escape(g.label).c_str());
  }

  // Series.
  int ci = 0;
  for (const auto& s : series) {
    const std::string color =
        s.color.empty() ? kPalette[ci % (sizeof(kPalette) / sizeof(kPalette[0]))] : s.color;
    ++ci;
    std::string pts;
    for (size_t i = 0; i < s.x.size(); ++i) {
      if (!ax.usable(s.x[i]) || !ay.usable(s.y[i])) continue;
      pts += strf("%g,%g ", px(ax.unit(s.x[i])), py(ay.unit(s.y[i])));
    }
    if (pts.empty()) continue;
    os << strf("<polyline points=\"%s\" fill=\"none\" stroke=\"%s\" stroke-width=\"1.6\"/>\n",
               pts.c_str(), color.c_str());
    if (s.markers) {
      for (size_t i = 0; i < s.x.size(); ++i) {
        if (!ax.usable(s.x[i]) || !ay.usable(s.y[i])) continue;
        os << strf("<circle cx=\"%g\" cy=\"%g\" r=\"2.4\" fill=\"%s\"/>\n", px(ax.unit(s.x[i])),
                   py(ay.unit(s.y[i])), color.c_str());
      }
    }
  }

  // Legend.
  double ly = kTop + 8;
  ci = 0;
  for (const auto& s : series) {
    const std::string color =
        s.color.empty() ? kPalette[ci % (sizeof(kPalette) / sizeof(kPalette[0]))] : s.color;
    ++ci;
    const double lx = kLeft + pw + 14;
    os << strf("<line x1=\"%g\" y1=\"%g\" x2=\"%g\" y2=\"%g\" stroke=\"%s\" stroke-width=\"2\"/>\n",
               lx, ly, lx + 22, ly, color.c_str());
    os << strf("<text x=\"%g\" y=\"%g\" font-size=\"12\">%s</text>\n", lx + 28, ly + 4,
               escape(s.label).c_str());
    ly += 18;
  }

  os << "</svg>\n";
  if (!os) throw std::runtime_error("write_plot_svg: write to '" + path + "' failed");
}

}  // namespace afem
