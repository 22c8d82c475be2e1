#include "afem/quadrature.hpp"

#include <cmath>
#include <stdexcept>

namespace afem {

void gauss_legendre(int n, std::vector<double>& pts, std::vector<double>& wts) {
  if (n < 1) throw std::invalid_argument("gauss_legendre: need at least one point");
  pts.assign(static_cast<size_t>(n), 0.0);
  wts.assign(static_cast<size_t>(n), 0.0);
  for (int i = 0; i < n; ++i) {
    // Chebyshev initial guess, then Newton on P_n evaluated by recurrence.
    double x = std::cos(M_PI * (static_cast<double>(i) + 0.75) / (static_cast<double>(n) + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    pts[static_cast<size_t>(n - 1 - i)] = 0.5 * (x + 1.0);
    wts[static_cast<size_t>(n - 1 - i)] = 1.0 / ((1.0 - x * x) * dp * dp);
  }
}

LineRule line_rule(int degree) {
  if (degree < 0) throw std::invalid_argument("line_rule: negative degree");
  LineRule r;
  int n = degree / 2 + 1;
  gauss_legendre(n, r.pts, r.wts);
  r.exact_degree = 2 * n - 1;
  return r;
}

namespace {

void add_sym3(TriRule& r, double l1, double l2, double l3, double w) {
  // One orbit of barycentric permutations; cartesian coords are (l2, l3).
  r.pts.push_back({l2, l3});
  r.wts.push_back(w);
  if (l1 != l2 || l2 != l3) {
    r.pts.push_back({l3, l1});
    r.wts.push_back(w);
    r.pts.push_back({l1, l2});
    r.wts.push_back(w);
  }
}

TriRule duffy_rule(int degree) {
  // Map the unit square onto the triangle by (u,v) -> (u(1-v), v) with
  // Jacobian (1-v); a monomial x^a y^b of total degree <= d becomes a tensor
  // polynomial of degrees (a, a+b+1) <= (d, d+1), so Gauss-Legendre with
  // ceil((d+1)/2) x ceil((d+2)/2) points integrates it exactly.
  TriRule r;
  std::vector<double> up, uw, vp, vw;
  gauss_legendre((degree + 2) / 2, up, uw);
  gauss_legendre((degree + 3) / 2, vp, vw);
  for (size_t i = 0; i < up.size(); ++i)
    for (size_t j = 0; j < vp.size(); ++j) {
      r.pts.push_back({up[i] * (1.0 - vp[j]), vp[j]});
      r.wts.push_back(uw[i] * vw[j] * (1.0 - vp[j]));
    }
  r.exact_degree = degree;
  return r;
}

}  // namespace

TriRule tri_rule(int degree) {
  if (degree < 0) throw std::invalid_argument("tri_rule: negative degree");
  TriRule r;
  switch (degree) {
    case 0:
    case 1:
      add_sym3(r, 1.0 / 3, 1.0 / 3, 1.0 / 3, 0.5);
      r.exact_degree = 1;
      return r;
    case 2:
      add_sym3(r, 2.0 / 3, 1.0 / 6, 1.0 / 6, 1.0 / 6);
      r.exact_degree = 2;
      return r;
    case 3:
    case 4: {
      double a = 0.445948490915965, b = 0.091576213509771;
      add_sym3(r, 1.0 - 2.0 * a, a, a, 0.5 * 0.223381589678011);
      add_sym3(r, 1.0 - 2.0 * b, b, b, 0.5 * 0.109951743655322);
      r.exact_degree = 4;
      return r;
    }
    case 5: {
      double a = 0.470142064105115, b = 0.101286507323456;
      add_sym3(r, 1.0 / 3, 1.0 / 3, 1.0 / 3, 0.5 * 0.225);
      add_sym3(r, 1.0 - 2.0 * a, a, a, 0.5 * 0.132394152788506);
      add_sym3(r, 1.0 - 2.0 * b, b, b, 0.5 * 0.125939180544827);
      r.exact_degree = 5;
      return r;
    }
    default:
      return duffy_rule(degree);
  }
}

}  // namespace afem
