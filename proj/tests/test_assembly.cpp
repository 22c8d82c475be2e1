#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <stdexcept>
#include <vector>

#include "afem/assembly.hpp"
#include "afem/direct.hpp"
#include "afem/mesh.hpp"
#include "afem/problems.hpp"
#include "afem/rng.hpp"
#include "afem/space.hpp"

using namespace afem;

namespace {

// Unit right triangle with local order (0,0),(1,0),(0,1) — the reference
// ordering the textbook local matrices are written in.
Triangulation canonical_triangle() {
  Triangulation t;
  t.vertices = {{0, 0}, {1, 0}, {0, 1}};
  t.elements = {{0, 1, 2}};
  t.boundary_edges = {{0, 1}, {1, 2}, {2, 0}};
  t.generation = {0};
  return t;
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  REQUIRE(a.size() == b.size());
  double m = 0.0;
  for (size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

std::vector<double> random_vector(int n, Rng& rng) {
  std::vector<double> v(static_cast<size_t>(n));
  for (double& x : v) x = rng.next_normal();
  return v;
}

}  // namespace

TEST_CASE("lowest-order local matrices match their closed forms") {
  Triangulation t = canonical_triangle();
  FiniteElementSpace s = build_space(t, 1);
  ProblemData d;
  d.c = [](Vec2) { return 1.0; };
  d.f = [](Vec2) { return 1.0; };
  ElementSystem es = element_system(s, d, 0);
  REQUIRE(es.a_mat.size() == 9);

  const double kref[9] = {1.0, -0.5, -0.5, -0.5, 0.5, 0.0, -0.5, 0.0, 0.5};
  for (int i = 0; i < 9; ++i) CHECK(std::abs(es.a_mat[static_cast<size_t>(i)] - kref[i]) <= 1e-13);

  // b_mat - a_mat is the mass matrix |T|/12 [[2,1,1],[1,2,1],[1,1,2]].
  const double mref[9] = {2, 1, 1, 1, 2, 1, 1, 1, 2};
  for (int i = 0; i < 9; ++i)
    CHECK(std::abs(es.b_mat[static_cast<size_t>(i)] - es.a_mat[static_cast<size_t>(i)] - mref[i] / 24.0) <= 1e-13);

  // Load of f = 1: |T|/3 per hat function.
  for (int i = 0; i < 3; ++i) CHECK(std::abs(es.load[static_cast<size_t>(i)] - 1.0 / 6.0) <= 1e-14);
}

TEST_CASE("constant convection and gradient loads match their closed forms") {
  Triangulation t = canonical_triangle();
  FiniteElementSpace s = build_space(t, 1);
  ProblemData d;
  d.b = [](Vec2) { return Vec2{2.0, -1.0}; };
  d.fvec = [](Vec2) { return Vec2{3.0, -2.0}; };
  ElementSystem es = element_system(s, d, 0);
  // Convection entries: |T|/3 * (b . grad phi_j), constant in the row index.
  const Vec2 grads[3] = {{-1, -1}, {1, 0}, {0, 1}};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      double conv = (2.0 * grads[j].x - 1.0 * grads[j].y) / 6.0;
      CHECK(std::abs(es.b_mat[static_cast<size_t>(3 * i + j)] - es.a_mat[static_cast<size_t>(3 * i + j)] - conv) <=
            1e-13);
    }
  // Gradient load: |T| * (fvec . grad phi_i).
  const double want[3] = {-0.5, 1.5, -1.0};
  for (int i = 0; i < 3; ++i) CHECK(std::abs(es.load[static_cast<size_t>(i)] - want[i]) <= 1e-13);
}

TEST_CASE("the principal part scales linearly in the diffusion coefficient") {
  Triangulation t = uniform_refine(make_lshape_mesh(), 1);
  FiniteElementSpace s = build_space(t, 2);
  ProblemData d1, d2;
  d2.A = [](Vec2) { return Mat2{2.0, 0.0, 0.0, 2.0}; };
  CsrMatrix k1 = assemble_a(s, d1);
  CsrMatrix k2 = assemble_a(s, d2);
  REQUIRE(k1.val.size() == k2.val.size());
  for (size_t i = 0; i < k1.val.size(); ++i)
    CHECK(k2.val[i] == doctest::Approx(2.0 * k1.val[i]).epsilon(1e-14).scale(1e-12));
}

TEST_CASE("energy norm of the interpolant of x on the unit square is one") {
  Triangulation t = uniform_refine(make_square_mesh(), 2);
  for (int m = 1; m <= 3; ++m) {
    FiniteElementSpace s = build_space(t, m);
    ProblemData d;
    CsrMatrix k = assemble_a_full(s, d);
    std::vector<double> u(static_cast<size_t>(s.num_dofs()));
    for (int i = 0; i < s.num_dofs(); ++i) u[static_cast<size_t>(i)] = s.dof_coords[static_cast<size_t>(i)].x;
    // grad x = (1,0): integral of |grad|^2 over the unit square is 1.
    CHECK(quadratic_form(k, u, u) == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("without convection and reaction the two forms coincide") {
  Triangulation t = uniform_refine(make_zshape_mesh(), 1);
  FiniteElementSpace s = build_space(t, 2);
  ProblemData d;
  d.f = [](Vec2 p) { return p.x * p.y; };
  CsrMatrix k = assemble_a(s, d);
  CsrMatrix b = assemble_b(s, d);
  REQUIRE(k.col == b.col);
  double scale = 0.0;
  for (double v : k.val) scale = std::max(scale, std::abs(v));
  CHECK(max_abs_diff(k.val, b.val) <= 1e-14 * scale);
  CHECK(k.symmetric);
  CHECK(!b.symmetric);
}

TEST_CASE("the assembled principal part is exactly symmetric") {
  BenchmarkProblem p = make_problem("lshape-dcr");
  Triangulation t = uniform_refine(p.mesh, 2);
  FiniteElementSpace s = build_space(t, 2);
  CsrMatrix k = assemble_a(s, p.data);
  CsrMatrix kt = transpose(k);
  REQUIRE(k.row_ptr == kt.row_ptr);
  REQUIRE(k.col == kt.col);
  for (size_t i = 0; i < k.val.size(); ++i) CHECK(k.val[i] == kt.val[i]);  // bitwise
}

TEST_CASE("combined assembly equals the individual assemblies") {
  BenchmarkProblem p = make_problem("zshape-convection");
  Triangulation t = uniform_refine(p.mesh, 1);
  FiniteElementSpace s = build_space(t, 3);
  AssembledSystem sys = assemble_system(s, p.data);
  CsrMatrix k = assemble_a(s, p.data);
  CsrMatrix b = assemble_b(s, p.data);
  std::vector<double> f = assemble_load(s, p.data);
  CHECK(max_abs_diff(sys.K.val, k.val) == 0.0);
  CHECK(max_abs_diff(sys.B.val, b.val) == 0.0);
  CHECK(max_abs_diff(sys.F, f) == 0.0);
}

TEST_CASE("loads of linear data match the exact mass-matrix formula") {
  Triangulation t = make_lshape_mesh();
  FiniteElementSpace s = build_space(t, 1);
  ProblemData d;
  d.f = [](Vec2 p) { return p.x + 2.0 * p.y; };
  std::vector<double> load = assemble_load_full(s, d);
  // f is linear, so f = sum_j f(v_j) phi_j and the load is the mass matrix
  // applied to the vertex values: int phi_i phi_j = |T|/12 (1 + delta_ij).
  std::vector<double> want(static_cast<size_t>(s.num_dofs()), 0.0);
  for (int e = 0; e < t.num_elements(); ++e) {
    const auto& el = t.elements[static_cast<size_t>(e)];
    double area = t.signed_area(e);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        Vec2 vj = t.vertices[static_cast<size_t>(el[j])];
        want[static_cast<size_t>(el[i])] += area / 12.0 * (i == j ? 2.0 : 1.0) * (vj.x + 2.0 * vj.y);
      }
  }
  CHECK(max_abs_diff(load, want) <= 1e-13);
  // Sanity: the hats sum to one, so the total load is the integral of f.
  double total = 0.0, exact = 0.0;
  for (double v : load) total += v;
  for (int e = 0; e < t.num_elements(); ++e) {
    const auto& el = t.elements[static_cast<size_t>(e)];
    Vec2 c = (1.0 / 3.0) * (t.vertices[static_cast<size_t>(el[0])] + t.vertices[static_cast<size_t>(el[1])] +
                            t.vertices[static_cast<size_t>(el[2])]);
    exact += t.signed_area(e) * (c.x + 2.0 * c.y);  // centroid rule is exact for linear f
  }
  CHECK(total == doctest::Approx(exact).epsilon(1e-13).scale(1.0));
}

TEST_CASE("invalid diffusion coefficients are rejected") {
  Triangulation t = make_square_mesh();
  FiniteElementSpace s = build_space(t, 1);
  ProblemData bad;
  bad.A = [](Vec2) { return Mat2{1.0, 0.1, 0.0, 1.0}; };  // not symmetric
  CHECK_THROWS_AS(assemble_a_full(s, bad), std::invalid_argument);
  ProblemData indefinite;
  indefinite.A = [](Vec2) { return Mat2{1.0, 2.0, 2.0, 1.0}; };  // eigenvalues 3 and -1
  CHECK_THROWS_AS(assemble_a_full(s, indefinite), std::invalid_argument);
  ProblemData negative;
  negative.A = [](Vec2) { return Mat2{-1.0, 0.0, 0.0, -1.0}; };
  CHECK_THROWS_AS(assemble_a_full(s, negative), std::invalid_argument);
}

TEST_CASE("energy norms are consistent and guarded") {
  Triangulation t = uniform_refine(make_lshape_mesh(), 2);
  FiniteElementSpace s = build_space(t, 1);
  ProblemData d;
  CsrMatrix k = assemble_a(s, d);
  Rng rng(9);
  std::vector<double> u = random_vector(s.dim(), rng);
  std::vector<double> w = random_vector(s.dim(), rng);
  std::vector<double> diff(u.size());
  for (size_t i = 0; i < u.size(); ++i) diff[i] = u[i] - w[i];
  CHECK(energy_norm_diff(k, u, w) == doctest::Approx(energy_norm(k, diff)).epsilon(1e-13));
  CHECK(energy_norm(k, u) == doctest::Approx(std::sqrt(quadratic_form(k, u, u))).epsilon(1e-13));
  CHECK(quadratic_form(k, u, w) == doctest::Approx(quadratic_form(k, w, u)).epsilon(1e-12));
  CsrMatrix b = assemble_b(s, make_problem("lshape-dcr").data);
  CHECK_THROWS_AS(energy_norm(b, u), std::invalid_argument);
  CHECK_THROWS_AS(energy_norm_diff(k, u, std::vector<double>(u.size() + 1)), std::invalid_argument);
}

TEST_CASE("galerkin solutions on nested symmetric spaces obey pythagoras") {
  Triangulation coarse_mesh = uniform_refine(make_lshape_mesh(), 2);
  Triangulation fine_mesh = uniform_refine(coarse_mesh, 1);
  ProblemData d;
  d.f = [](Vec2) { return 1.0; };
  for (int m : {1, 2}) {
    FiniteElementSpace coarse = build_space(coarse_mesh, m);
    FiniteElementSpace fine = build_space(fine_mesh, m);
    CsrMatrix kc = assemble_a(coarse, d);
    CsrMatrix kf = assemble_a(fine, d);
    std::vector<double> uc = solve_direct(kc, assemble_load(coarse, d));
    std::vector<double> uf = solve_direct(kf, assemble_load(fine, d));
    std::vector<double> puc = prolong(coarse, fine, uc);
    double nf = energy_norm(kf, uf);
    double nc = energy_norm(kc, uc);
    double dd = energy_norm_diff(kf, uf, puc);
    // |u_f|^2 = |u_c|^2 + |u_f - u_c|^2: the coarse solution is the energy
    // projection of the fine one.
    CHECK(nf * nf == doctest::Approx(nc * nc + dd * dd).epsilon(1e-10));
    CHECK(nf >= nc);
  }
}

TEST_CASE("the sampled ellipticity constant of the model problem is one") {
  // For A = Id, b(x) = x, c = 1 the convection and reaction contributions to
  // v^T B v cancel exactly: the Rayleigh quotient is 1 for every v.
  BenchmarkProblem p = make_problem("lshape-dcr");
  Triangulation t = uniform_refine(p.mesh, 2);
  for (int m : {1, 2}) {
    FiniteElementSpace s = build_space(t, m);
    CsrMatrix k = assemble_a(s, p.data);
    CsrMatrix b = assemble_b(s, p.data);
    double alpha = min_rayleigh_sampled(b, k, 50, 7);
    CHECK(alpha == doctest::Approx(1.0).epsilon(1e-10));
  }
  CHECK_THROWS_AS(min_rayleigh_sampled(CsrMatrix{}, CsrMatrix{}, 10, 1), std::invalid_argument);
}
