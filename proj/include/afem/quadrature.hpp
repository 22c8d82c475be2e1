#pragma once

#include <vector>

#include "afem/geometry.hpp"

namespace afem {

// Quadrature on the reference triangle (0,0),(1,0),(0,1); weights sum to 1/2,
// so a physical integral is |det J| * sum_q w_q f(F(x_q)).
struct TriRule {
  std::vector<Vec2> pts;
  std::vector<double> wts;
  int exact_degree = 0;
};

// Quadrature on [0,1], weights summing to 1.
struct LineRule {
  std::vector<double> pts;
  std::vector<double> wts;
  int exact_degree = 0;
};

// Symmetric rules for low degrees, collapsed Gauss-Legendre tensor rule above;
// exact for all polynomials of total degree <= `degree`.
TriRule tri_rule(int degree);
LineRule line_rule(int degree);

// n-point Gauss-Legendre nodes/weights on [0,1] (exact degree 2n-1), computed
// by Newton iteration on the Legendre polynomial.
void gauss_legendre(int n, std::vector<double>& pts, std::vector<double>& wts);

}  // namespace afem
