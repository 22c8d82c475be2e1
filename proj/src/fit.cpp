#include "afem/fit.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>

namespace afem {

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw std::invalid_argument("fit_line: size mismatch");
  LineFit f;
  f.n = static_cast<int>(x.size());
  if (f.n < 2) return f;
  const double n = static_cast<double>(f.n);
  double sx = 0.0, sy = 0.0;
  for (int i = 0; i < f.n; ++i) {
    sx += x[static_cast<size_t>(i)];
    sy += y[static_cast<size_t>(i)];
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (int i = 0; i < f.n; ++i) {
    const double dx = x[static_cast<size_t>(i)] - mx;
    const double dy = y[static_cast<size_t>(i)] - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  if (!(sxx > 0.0)) return f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  if (syy > 0.0) {
    double ss_res = 0.0;
    for (int i = 0; i < f.n; ++i) {
      const double r = y[static_cast<size_t>(i)] - (f.slope * x[static_cast<size_t>(i)] + f.intercept);
      ss_res += r * r;
    }
    f.r2 = 1.0 - ss_res / syy;
  } else {
    f.r2 = 1.0;  // constant data fitted exactly
  }
  return f;
}

LineFit fit_loglog_last_decade(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw std::invalid_argument("fit_loglog_last_decade: size mismatch");
  double xmax = 0.0;
  for (double v : x) xmax = std::max(xmax, v);
  std::vector<double> lx, ly;
  for (size_t i = 0; i < x.size(); ++i) {
    if (x[i] > 0.0 && y[i] > 0.0 && x[i] >= xmax / 10.0) {
      lx.push_back(std::log10(x[i]));
      ly.push_back(std::log10(y[i]));
    }
  }
  return fit_line(lx, ly);
}

GeometricFit fit_geometric_tail(const std::vector<double>& y, double discard_fraction) {
  if (discard_fraction < 0.0 || discard_fraction >= 1.0)
    throw std::invalid_argument("fit_geometric_tail: discard fraction outside [0, 1)");
  const size_t first = static_cast<size_t>(discard_fraction * static_cast<double>(y.size()));
  std::vector<double> ix, ly;
  for (size_t i = first; i < y.size(); ++i) {
    if (y[i] > 0.0) {
      ix.push_back(static_cast<double>(i));
      ly.push_back(std::log(y[i]));
    }
  }
  GeometricFit g;
  LineFit f = fit_line(ix, ly);
  g.n = f.n;
  if (f.n >= 2) {
    g.q = std::exp(f.slope);
    g.c = std::exp(f.intercept);
    g.r2 = f.r2;
  }
  return g;
}

}  // namespace afem
