#pragma once

#include <functional>

#include "afem/geometry.hpp"

namespace afem {

using ScalarField = std::function<double(Vec2)>;
using VectorField = std::function<Vec2(Vec2)>;
using MatrixField = std::function<Mat2(Vec2)>;

// Data of the model problem
//   -div(A grad u) + b . grad u + c u = f - div fvec   in Omega,  u = 0 on the boundary,
// with A symmetric and uniformly positive definite (verified at quadrature
// points during assembly). `div_A` (row divergences of A) and `div_fvec` feed
// the strong residual of the estimator; they default to zero, which is exact
// for constant A and divergence-free fvec — supply them when that is not the
// case. `data_degree` is the extra quadrature exactness added on top of the
// 2m needed by the shape functions, to resolve variable coefficients.
struct ProblemData {
  MatrixField A = [](Vec2) { return identity2(); };
  VectorField b = [](Vec2) { return Vec2{0.0, 0.0}; };
  ScalarField c = [](Vec2) { return 0.0; };
  ScalarField f = [](Vec2) { return 0.0; };
  VectorField fvec = [](Vec2) { return Vec2{0.0, 0.0}; };
  VectorField div_A = [](Vec2) { return Vec2{0.0, 0.0}; };
  ScalarField div_fvec = [](Vec2) { return 0.0; };
  int data_degree = 2;
};

}  // namespace afem
