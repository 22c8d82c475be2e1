#pragma once

#include <string>
#include <vector>

#include "afem/problem.hpp"
#include "afem/space.hpp"

namespace afem {

// Element-wise squared residual indicators
//   sq[T] = h_T^2 * || f + div(A grad v - fvec) - b.grad v - c v ||_T^2
//         + h_T   * || jump of (A grad v - fvec) . n ||_{boundary of T inside the domain}^2
// with h_T the longest edge. Every interior edge integral is computed once
// and added to both adjacent elements, each weighted by its own h_T; boundary
// edges contribute nothing.
struct IndicatorField {
  std::vector<double> sq;  // per element
  double total_sq = 0.0;   // sum of sq in ascending element order

  double total() const;
};

// Optional per-level cache of coefficient evaluations at quadrature points.
// The default estimator path recomputes everything from scratch on every
// call; repeated estimates on the same (space, data) pair can opt in to the
// cache, trading memory for skipped field evaluations. Results are identical.
struct EstimatorCache {
  bool filled = false;
  std::vector<double> vol;   // per element x volume point: A, div A, b, c, f, div fvec
  std::vector<double> edge;  // per edge x line point: A
};

IndicatorField estimate(const FiniteElementSpace& s, const ProblemData& d, const std::vector<double>& u_free,
                        EstimatorCache* cache = nullptr);
// Same, but for a function given on all dofs (including boundary values).
IndicatorField estimate_full(const FiniteElementSpace& s, const ProblemData& d,
                             const std::vector<double>& u_full, EstimatorCache* cache = nullptr);

// sqrt of the indicator sum restricted to a subset of elements.
double restrict_total(const IndicatorField& ind, const MarkedSet& subset);

// One row per element: index, centroid, longest edge, squared indicator.
void write_indicators_csv(const std::string& path, const FiniteElementSpace& s, const IndicatorField& ind);

}  // namespace afem
