#include "afem/problems.hpp"

#include <stdexcept>

#include "afem/util.hpp"

namespace afem {

namespace {

// Diffusion-convection-reaction on the L-shaped domain:
//   -Laplace(u) + x . grad(u) + u = 1,  u = 0 on the boundary.
BenchmarkProblem lshape_dcr() {
  BenchmarkProblem p;
  p.name = "lshape-dcr";
  p.description = "diffusion-convection-reaction, L-shaped domain, corner singularity";
  p.mesh = make_lshape_mesh();
  p.data.A = [](Vec2) { return identity2(); };
  p.data.b = [](Vec2 x) { return x; };
  p.data.c = [](Vec2) { return 1.0; };
  p.data.f = [](Vec2) { return 1.0; };
  p.data.data_degree = 2;
  return p;
}

// Pure strong convection on the Z-shaped domain:
//   -Laplace(u) + (5,5) . grad(u) = 1,  u = 0 on the boundary.
BenchmarkProblem zshape_convection() {
  BenchmarkProblem p;
  p.name = "zshape-convection";
  p.description = "strong convection, Z-shaped domain, strong corner singularity";
  p.mesh = make_zshape_mesh();
  p.data.A = [](Vec2) { return identity2(); };
  p.data.b = [](Vec2) { return Vec2{5.0, 5.0}; };
  p.data.c = [](Vec2) { return 0.0; };
  p.data.f = [](Vec2) { return 1.0; };
  p.data.data_degree = 2;
  return p;
}

// Manufactured problem whose solution u(x,y) = x y (1 - x - y) is the cubic
// bubble of the unit triangle: with degree m = 3 the discrete space contains
// u exactly, the residual vanishes identically, and the run must stop with
// the "exact" status at estimator zero (up to roundoff).
BenchmarkProblem manufactured_cubic() {
  BenchmarkProblem p;
  p.name = "manufactured-cubic";
  p.description = "polynomial solution on the unit triangle; estimator hits zero for degree 3";
  p.mesh = make_unit_triangle_mesh();
  p.data.A = [](Vec2) { return identity2(); };
  p.data.b = [](Vec2) { return Vec2{1.0, 1.0}; };
  p.data.c = [](Vec2) { return 1.0; };
  // f = -Laplace(u) + b . grad(u) + c u for the bubble above.
  p.data.f = [](Vec2 v) {
    double x = v.x, y = v.y;
    double ux = y - 2.0 * x * y - y * y;
    double uy = x - x * x - 2.0 * x * y;
    double u = x * y * (1.0 - x - y);
    return 2.0 * (x + y) + (ux + uy) + u;
  };
  p.data.data_degree = 3;
  p.exact = [](Vec2 v) { return v.x * v.y * (1.0 - v.x - v.y); };
  p.exact_grad = [](Vec2 v) {
    double x = v.x, y = v.y;
    return Vec2{y - 2.0 * x * y - y * y, x - x * x - 2.0 * x * y};
  };
  return p;
}

}  // namespace

std::vector<std::string> problem_names() { return {"lshape-dcr", "zshape-convection", "manufactured-cubic"}; }

BenchmarkProblem make_problem(const std::string& name) {
  if (name == "lshape-dcr") return lshape_dcr();
  if (name == "zshape-convection") return zshape_convection();
  if (name == "manufactured-cubic") return manufactured_cubic();
  // Fall back to a mesh file with default data (pure Poisson with f = 1).
  try {
    BenchmarkProblem p;
    p.mesh = load_mesh_file(name);
    p.name = name;
    p.description = "custom mesh with default data (A=Id, f=1)";
    p.data.f = [](Vec2) { return 1.0; };
    p.data.data_degree = 0;
    return p;
  } catch (const std::exception& e) {
    throw std::invalid_argument(strf(
        "unknown problem '%s' (built-ins: lshape-dcr, zshape-convection, manufactured-cubic; "
        "or a mesh file path). Mesh load said: %s",
        name.c_str(), e.what()));
  }
}

}  // namespace afem
