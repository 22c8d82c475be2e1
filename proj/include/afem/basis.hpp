#pragma once

#include <vector>

#include "afem/geometry.hpp"

namespace afem {

// Nodal Lagrange basis of given degree on the reference triangle
// (0,0),(1,0),(0,1). Node order: the 3 vertices, then for each local edge
// (v0v1, v1v2, v2v0) the degree-1 interior edge nodes walked from the first
// vertex to the second, then interior lattice nodes in lexicographic order.
// This matches the global dof layout produced by build_space().
class ReferenceBasis {
 public:
  explicit ReferenceBasis(int degree);

  int degree() const { return degree_; }
  int size() const { return n_; }
  const std::vector<Vec2>& nodes() const { return nodes_; }

  // Values of all basis functions at a reference point.
  void values(Vec2 p, double* out) const;
  // Reference gradients (d/dx, d/dy per function).
  void gradients(Vec2 p, Vec2* out) const;
  // Second derivatives per function: (dxx, dxy, dyy).
  void hessians(Vec2 p, double* out_xx, double* out_xy, double* out_yy) const;

  // Cached shared instance per degree.
  static const ReferenceBasis& get(int degree);

 private:
  int degree_;
  int n_;
  std::vector<Vec2> nodes_;
  std::vector<int> mono_px_, mono_py_;  // monomial exponents
  std::vector<double> coef_;            // coef_[i*n+j]: basis i = sum_j c_ij x^px_j y^py_j
};

}  // namespace afem
