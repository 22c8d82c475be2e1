#pragma once

#include <vector>

namespace afem {

// Least-squares line y = slope * x + intercept with the coefficient of
// determination; n is the number of points used. Degenerate inputs (fewer
// than two points, or zero variance in x) report n but slope = 0, r2 = 0.
struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  int n = 0;
};

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

// log10-log10 line fit restricted to the final decade of x: points with
// x >= max(x)/10 and positive x and y. This is the convergence-rate readout:
// slope is the asymptotic rate, early preasymptotic points are excluded.
LineFit fit_loglog_last_decade(const std::vector<double>& x, const std::vector<double>& y);

// Geometric decay y_i ~ c * q^i fitted over the tail of the sequence
// (the first discard_fraction of the indices is dropped, as is any
// nonpositive value); reports q, c and the r2 of the underlying log-linear
// fit. Degenerate input gives q = 1, r2 = 0.
struct GeometricFit {
  double q = 1.0;
  double c = 0.0;
  double r2 = 0.0;
  int n = 0;
};

GeometricFit fit_geometric_tail(const std::vector<double>& y, double discard_fraction);

}  // namespace afem
