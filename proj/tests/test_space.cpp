#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <set>
#include <stdexcept>
#include <vector>

#include "afem/assembly.hpp"
#include "afem/mesh.hpp"
#include "afem/rng.hpp"
#include "afem/space.hpp"
#include "afem/sparse.hpp"

using namespace afem;

namespace {

int count_boundary_vertices(const Triangulation& t) {
  std::set<int> b;
  for (const auto& e : t.boundary_edges) {
    b.insert(e[0]);
    b.insert(e[1]);
  }
  return static_cast<int>(b.size());
}

// Evaluate the full-dof function on one specific element (no search).
double eval_on_element(const FiniteElementSpace& s, const std::vector<double>& u_full, int e, Vec2 p) {
  const ReferenceBasis& basis = ReferenceBasis::get(s.degree);
  std::vector<double> vals(static_cast<size_t>(s.ndof_local));
  basis.values(s.map_of(e).to_reference(p), vals.data());
  const int* dofs = s.edofs(e);
  double v = 0.0;
  for (int i = 0; i < s.ndof_local; ++i) v += u_full[static_cast<size_t>(dofs[i])] * vals[static_cast<size_t>(i)];
  return v;
}

std::vector<double> random_vector(int n, Rng& rng) {
  std::vector<double> v(static_cast<size_t>(n));
  for (double& x : v) x = rng.next_normal();
  return v;
}

}  // namespace

TEST_CASE("dof counts follow the vertex/edge/interior pattern") {
  Triangulation t = uniform_refine(make_lshape_mesh(), 2);
  EdgeTable et = build_edge_table(t);
  int nb_vert = count_boundary_vertices(t);
  int nb_edge = static_cast<int>(t.boundary_edges.size());
  for (int m = 1; m <= 3; ++m) {
    FiniteElementSpace s = build_space(t, m);
    CAPTURE(m);
    int total = t.num_vertices() + (m - 1) * et.num_edges() + (m - 1) * (m - 2) / 2 * t.num_elements();
    CHECK(s.num_dofs() == total);
    int constrained = nb_vert + (m - 1) * nb_edge;
    CHECK(s.dim() == total - constrained);
    CHECK(static_cast<int>(s.dof_coords.size()) == total);
    CHECK(s.ndof_local == (m + 1) * (m + 2) / 2);
    // Vertex dofs sit at the vertices, in mesh order.
    for (int v = 0; v < t.num_vertices(); ++v) {
      CHECK(s.dof_coords[static_cast<size_t>(v)].x == t.vertices[static_cast<size_t>(v)].x);
      CHECK(s.dof_coords[static_cast<size_t>(v)].y == t.vertices[static_cast<size_t>(v)].y);
    }
    // free_to_dof / dof_to_free are inverse on the free set.
    for (int f = 0; f < s.dim(); ++f) {
      int d = s.free_to_dof[static_cast<size_t>(f)];
      CHECK(s.dof_to_free[static_cast<size_t>(d)] == f);
      CHECK(!s.is_dirichlet[static_cast<size_t>(d)]);
    }
  }
}

TEST_CASE("small spaces have hand-countable dimensions") {
  Triangulation sq = make_square_mesh();
  CHECK(build_space(sq, 1).dim() == 0);  // all four vertices constrained
  CHECK(build_space(sq, 2).dim() == 1);  // the diagonal edge dof
  CHECK(build_space(sq, 3).dim() == 4);  // 2 diagonal edge dofs + 2 interior
  Triangulation r = refine(sq, MarkedSet::all(sq.num_elements()));
  CHECK(r.num_vertices() == 5);
  CHECK(build_space(r, 1).dim() == 1);  // the new center vertex
  Triangulation tri = make_unit_triangle_mesh();
  CHECK(build_space(tri, 1).dim() == 0);
  CHECK(build_space(tri, 2).dim() == 0);
  CHECK(build_space(tri, 3).dim() == 1);  // single interior bubble
}

TEST_CASE("adjacent elements agree on the dofs of their shared edge") {
  Triangulation t = uniform_refine(make_zshape_mesh(), 1);
  for (int m = 1; m <= 3; ++m) {
    FiniteElementSpace s = build_space(t, m);
    const EdgeTable& et = s.edges;
    for (int g = 0; g < et.num_edges(); ++g) {
      int e1 = et.adjacent[static_cast<size_t>(g)][0];
      int e2 = et.adjacent[static_cast<size_t>(g)][1];
      if (e1 < 0 || e2 < 0) continue;
      // Collect the global dofs each element associates with edge g: the two
      // endpoint vertex dofs plus the m-1 edge dofs.
      auto edge_dofs = [&](int e) {
        std::set<int> out;
        const auto& el = t.elements[static_cast<size_t>(e)];
        for (int k = 0; k < 3; ++k) {
          if (et.element_edges[static_cast<size_t>(e)][k] != g) continue;
          out.insert(el[k]);
          out.insert(el[(k + 1) % 3]);
          for (int o = 0; o < m - 1; ++o) {
            // Edge dofs follow the vertex block, m-1 per edge.
            out.insert(t.num_vertices() + g * (m - 1) + o);
          }
        }
        return out;
      };
      std::set<int> d1 = edge_dofs(e1), d2 = edge_dofs(e2);
      REQUIRE(!d1.empty());
      CHECK(d1 == d2);
      // All of these dofs appear in both element dof lists.
      for (int d : d1) {
        auto has = [&](int e) {
          const int* dofs = s.edofs(e);
          for (int i = 0; i < s.ndof_local; ++i)
            if (dofs[i] == d) return true;
          return false;
        };
        CHECK(has(e1));
        CHECK(has(e2));
      }
    }
  }
}

TEST_CASE("functions are continuous across shared edges") {
  Triangulation t = uniform_refine(make_lshape_mesh(), 1);
  Rng rng(17);
  for (int m = 1; m <= 3; ++m) {
    FiniteElementSpace s = build_space(t, m);
    std::vector<double> u = random_vector(s.num_dofs(), rng);
    const EdgeTable& et = s.edges;
    for (int g = 0; g < et.num_edges(); ++g) {
      int e1 = et.adjacent[static_cast<size_t>(g)][0];
      int e2 = et.adjacent[static_cast<size_t>(g)][1];
      if (e1 < 0 || e2 < 0) continue;
      Vec2 a = t.vertices[static_cast<size_t>(et.edges[static_cast<size_t>(g)][0])];
      Vec2 b = t.vertices[static_cast<size_t>(et.edges[static_cast<size_t>(g)][1])];
      for (double s01 : {0.2, 0.5, 0.9}) {
        Vec2 p = a + s01 * (b - a);
        double v1 = eval_on_element(s, u, e1, p);
        double v2 = eval_on_element(s, u, e2, p);
        CHECK(v1 == doctest::Approx(v2).epsilon(1e-11).scale(1.0));
      }
    }
  }
}

TEST_CASE("expand and evaluate respect the boundary constraints") {
  Triangulation t = uniform_refine(make_square_mesh(), 2);
  FiniteElementSpace s = build_space(t, 2);
  Rng rng(23);
  std::vector<double> u = random_vector(s.dim(), rng);
  std::vector<double> full = expand_free(s, u);
  REQUIRE(static_cast<int>(full.size()) == s.num_dofs());
  for (int d = 0; d < s.num_dofs(); ++d) {
    if (s.is_dirichlet[static_cast<size_t>(d)])
      CHECK(full[static_cast<size_t>(d)] == 0.0);
    else
      CHECK(full[static_cast<size_t>(d)] == u[static_cast<size_t>(s.dof_to_free[static_cast<size_t>(d)])]);
  }
  // evaluate() agrees with the full evaluation, and dof nodes reproduce values.
  for (int f = 0; f < s.dim(); f += 3) {
    Vec2 p = s.dof_coords[static_cast<size_t>(s.free_to_dof[static_cast<size_t>(f)])];
    CHECK(evaluate(s, u, p) == doctest::Approx(u[static_cast<size_t>(f)]).epsilon(1e-11).scale(1.0));
    CHECK(evaluate_full(s, full, p) == doctest::Approx(u[static_cast<size_t>(f)]).epsilon(1e-11).scale(1.0));
  }
  CHECK_THROWS_AS(evaluate(s, u, Vec2{55.0, 55.0}), std::invalid_argument);  // outside the domain
}

TEST_CASE("prolongation embeds coarse functions exactly") {
  Rng rng(31);
  Triangulation coarse_mesh = uniform_refine(make_lshape_mesh(), 1);
  for (int m = 1; m <= 3; ++m) {
    CAPTURE(m);
    Triangulation fine_mesh = refine(coarse_mesh, MarkedSet::of({0, 2, 5, 9}, coarse_mesh.num_elements()));
    FiniteElementSpace coarse = build_space(coarse_mesh, m);
    FiniteElementSpace fine = build_space(fine_mesh, m);
    CsrMatrix p = prolongation_matrix(coarse, fine);
    CHECK(p.rows == fine.dim());
    CHECK(p.cols == coarse.dim());
    std::vector<double> uc = random_vector(coarse.dim(), rng);
    std::vector<double> uf = matvec(p, uc);
    CHECK(prolong(coarse, fine, uc) == uf);
    // Same function: identical point values...
    for (int trial = 0; trial < 25; ++trial) {
      double x = -1.0 + 2.0 * rng.next_uniform();
      double y = -1.0 + 2.0 * rng.next_uniform();
      if (x > -1e-9 && y < 1e-9) continue;  // outside the L
      double vc = evaluate(coarse, uc, {x, y});
      double vf = evaluate(fine, uf, {x, y});
      CHECK(vc == doctest::Approx(vf).epsilon(1e-10).scale(1.0));
    }
    // ... and identical energy: |u|_Kc = |Pu|_Kf for nested spaces.
    ProblemData d;  // A = Id
    CsrMatrix kc = assemble_a(coarse, d);
    CsrMatrix kf = assemble_a(fine, d);
    double ec = energy_norm(kc, uc);
    double ef = energy_norm(kf, uf);
    CHECK(ec == doctest::Approx(ef).epsilon(1e-12));
  }
}

TEST_CASE("prolongation requires parent links onto the coarse mesh") {
  Triangulation coarse_mesh = make_lshape_mesh();
  Triangulation fine_mesh = refine(coarse_mesh, MarkedSet::of({0}, coarse_mesh.num_elements()));
  // Stripping the parent links (as the text format does) breaks the chain.
  Triangulation detached = load_mesh_text(save_mesh_text(fine_mesh));
  FiniteElementSpace coarse = build_space(coarse_mesh, 1);
  FiniteElementSpace fine = build_space(detached, 1);
  CHECK_THROWS(prolongation_matrix(coarse, fine));
  // An unrelated mesh fails too.
  FiniteElementSpace other = build_space(uniform_refine(make_square_mesh(), 1), 1);
  CHECK_THROWS(prolongation_matrix(coarse, other));
}

TEST_CASE("element maps invert and push gradients correctly") {
  Triangulation t = make_zshape_mesh();
  FiniteElementSpace s = build_space(t, 1);
  Rng rng(41);
  for (int e = 0; e < t.num_elements(); ++e) {
    ElementMap map = s.map_of(e);
    CHECK(map.det == doctest::Approx(2.0 * t.signed_area(e)).epsilon(1e-14));
    for (int trial = 0; trial < 5; ++trial) {
      double a = rng.next_uniform(), b = rng.next_uniform() * (1.0 - a);
      Vec2 ref{a, b};
      Vec2 phys = map.to_physical(ref);
      Vec2 back = map.to_reference(phys);
      CHECK(back.x == doctest::Approx(ref.x).epsilon(1e-12).scale(1.0));
      CHECK(back.y == doctest::Approx(ref.y).epsilon(1e-12).scale(1.0));
    }
    // The hat function of local vertex 1 is x on the reference element; its
    // physical gradient satisfies grad . (p1 - p0) = 1, grad . (p2 - p0) = 0.
    Vec2 g = map.grad_to_physical({1.0, 0.0});
    Vec2 d1{map.j11, map.j21}, d2{map.j12, map.j22};
    CHECK(dot(g, d1) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(dot(g, d2) == doctest::Approx(0.0).epsilon(1e-12).scale(1.0));
  }
}
