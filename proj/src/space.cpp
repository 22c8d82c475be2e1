#include "afem/space.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>

#include "afem/sparse.hpp"
#include "afem/util.hpp"

namespace afem {

ElementMap FiniteElementSpace::map_of(int e) const {
  const auto& tri = mesh.elements[static_cast<size_t>(e)];
  Vec2 p0 = mesh.vertices[static_cast<size_t>(tri[0])];
  Vec2 d1 = mesh.vertices[static_cast<size_t>(tri[1])] - p0;
  Vec2 d2 = mesh.vertices[static_cast<size_t>(tri[2])] - p0;
  ElementMap m{p0, d1.x, d2.x, d1.y, d2.y, 0.0};
  m.det = d1.x * d2.y - d2.x * d1.y;
  return m;
}

FiniteElementSpace build_space(const Triangulation& t, int degree) {
  if (degree < 1) throw std::invalid_argument(strf("polynomial degree must be >= 1, got %d", degree));
  if (t.num_elements() == 0) throw std::invalid_argument("cannot build a space on an empty mesh");
  const ReferenceBasis& rb = ReferenceBasis::get(degree);

  FiniteElementSpace s;
  s.mesh = t;
  s.degree = degree;
  s.edges = build_edge_table(s.mesh);
  s.ndof_local = rb.size();

  const int m = degree;
  const int nv = t.num_vertices();
  const int nedge = s.edges.num_edges();
  const int nelem = t.num_elements();
  const int per_edge = m - 1;
  const int per_elem = (m - 1) * (m - 2) / 2;
  s.total_dofs = nv + per_edge * nedge + per_elem * nelem;

  s.dof_coords.resize(static_cast<size_t>(s.total_dofs));
  for (int v = 0; v < nv; ++v) s.dof_coords[static_cast<size_t>(v)] = t.vertices[static_cast<size_t>(v)];
  for (int k = 0; k < nedge; ++k) {
    Vec2 a = t.vertices[static_cast<size_t>(s.edges.edges[static_cast<size_t>(k)][0])];
    Vec2 b = t.vertices[static_cast<size_t>(s.edges.edges[static_cast<size_t>(k)][1])];
    for (int q = 0; q < per_edge; ++q)
      s.dof_coords[static_cast<size_t>(nv + k * per_edge + q)] =
          a + (static_cast<double>(q + 1) / m) * (b - a);
  }

  s.element_dofs.resize(static_cast<size_t>(nelem) * s.ndof_local);
  for (int e = 0; e < nelem; ++e) {
    int* ed = &s.element_dofs[static_cast<size_t>(e) * s.ndof_local];
    const auto& tri = t.elements[static_cast<size_t>(e)];
    int pos = 0;
    for (int i = 0; i < 3; ++i) ed[pos++] = tri[i];
    for (int le = 0; le < 3; ++le) {
      int a = tri[le], b = tri[(le + 1) % 3];
      int k = s.edges.element_edges[static_cast<size_t>(e)][le];
      bool ascending = a < b;  // local walk a->b vs global storage min->max
      for (int q = 0; q < per_edge; ++q) {
        int slot = ascending ? q : per_edge - 1 - q;
        ed[pos++] = nv + k * per_edge + slot;
      }
    }
    ElementMap map = s.map_of(e);
    for (int q = 0; q < per_elem; ++q) {
      int dof = nv + nedge * per_edge + e * per_elem + q;
      s.dof_coords[static_cast<size_t>(dof)] = map.to_physical(rb.nodes()[static_cast<size_t>(3 + 3 * per_edge + q)]);
      ed[pos++] = dof;
    }
  }

  s.is_dirichlet.assign(static_cast<size_t>(s.total_dofs), 0);
  for (const auto& be : t.boundary_edges) {
    int k = s.edges.find(be[0], be[1]);
    if (k < 0)
      throw std::invalid_argument(strf("boundary edge (%d,%d) is not an edge of the mesh", be[0], be[1]));
    s.is_dirichlet[static_cast<size_t>(be[0])] = 1;
    s.is_dirichlet[static_cast<size_t>(be[1])] = 1;
    for (int q = 0; q < per_edge; ++q) s.is_dirichlet[static_cast<size_t>(nv + k * per_edge + q)] = 1;
  }

  s.dof_to_free.assign(static_cast<size_t>(s.total_dofs), -1);
  for (int d = 0; d < s.total_dofs; ++d)
    if (!s.is_dirichlet[static_cast<size_t>(d)]) {
      s.dof_to_free[static_cast<size_t>(d)] = static_cast<int>(s.free_to_dof.size());
      s.free_to_dof.push_back(d);
    }
  return s;
}

std::vector<double> expand_free(const FiniteElementSpace& s, const std::vector<double>& u_free) {
  if (static_cast<int>(u_free.size()) != s.dim())
    throw std::invalid_argument(strf("coefficient vector has %zu entries, space has %d free dofs",
                                     u_free.size(), s.dim()));
  std::vector<double> full(static_cast<size_t>(s.total_dofs), 0.0);
  for (int i = 0; i < s.dim(); ++i) full[static_cast<size_t>(s.free_to_dof[static_cast<size_t>(i)])] = u_free[static_cast<size_t>(i)];
  return full;
}

double evaluate_full(const FiniteElementSpace& s, const std::vector<double>& u_full, Vec2 p) {
  if (static_cast<int>(u_full.size()) != s.total_dofs)
    throw std::invalid_argument("evaluate_full: wrong vector length");
  const ReferenceBasis& rb = ReferenceBasis::get(s.degree);
  const double tol = 1e-12;
  int best = -1;
  double best_violation = 1e300;
  Vec2 best_ref{};
  for (int e = 0; e < s.mesh.num_elements(); ++e) {
    ElementMap map = s.map_of(e);
    Vec2 r = map.to_reference(p);
    double viol = std::max({-r.x, -r.y, r.x + r.y - 1.0, 0.0});
    if (viol < best_violation) {
      best_violation = viol;
      best = e;
      best_ref = r;
      if (viol <= tol) break;
    }
  }
  if (best < 0 || best_violation > 1e-9)
    throw std::invalid_argument(strf("point (%g,%g) lies outside the mesh", p.x, p.y));
  std::vector<double> vals(static_cast<size_t>(rb.size()));
  rb.values(best_ref, vals.data());
  const int* ed = s.edofs(best);
  double out = 0.0;
  for (int i = 0; i < rb.size(); ++i) out += vals[static_cast<size_t>(i)] * u_full[static_cast<size_t>(ed[i])];
  return out;
}

double evaluate(const FiniteElementSpace& s, const std::vector<double>& u_free, Vec2 p) {
  return evaluate_full(s, expand_free(s, u_free), p);
}

CsrMatrix prolongation_matrix(const FiniteElementSpace& coarse, const FiniteElementSpace& fine) {
  if (coarse.degree != fine.degree)
    throw std::invalid_argument("prolongation requires equal polynomial degrees");
  if (fine.mesh.parent.size() != static_cast<size_t>(fine.mesh.num_elements()))
    throw std::invalid_argument("prolongation: fine mesh carries no parent links");

  const ReferenceBasis& rb = ReferenceBasis::get(coarse.degree);
  const int n = rb.size();

  // Verify the claimed parent relationship geometrically: every fine element
  // must sit inside its parent.
  for (int fe = 0; fe < fine.mesh.num_elements(); ++fe) {
    int pe = fine.mesh.parent[static_cast<size_t>(fe)];
    if (pe < 0 || pe >= coarse.mesh.num_elements())
      throw std::invalid_argument(strf("prolongation: element %d has parent %d outside the coarse mesh", fe, pe));
    ElementMap pmap = coarse.map_of(pe);
    for (int v = 0; v < 3; ++v) {
      Vec2 r = pmap.to_reference(fine.mesh.vertices[static_cast<size_t>(fine.mesh.elements[static_cast<size_t>(fe)][v])]);
      if (std::max({-r.x, -r.y, r.x + r.y - 1.0}) > 1e-10)
        throw std::invalid_argument(strf("prolongation: fine element %d is not contained in its parent %d", fe, pe));
    }
  }

  // One owning element per fine dof (any containing element evaluates the
  // same continuous coarse function; take the first for determinism).
  std::vector<int> owner(static_cast<size_t>(fine.num_dofs()), -1);
  for (int e = 0; e < fine.mesh.num_elements(); ++e) {
    const int* ed = fine.edofs(e);
    for (int li = 0; li < fine.ndof_local; ++li)
      if (owner[static_cast<size_t>(ed[li])] < 0) owner[static_cast<size_t>(ed[li])] = e;
  }

  CsrMatrix p;
  p.rows = fine.dim();
  p.cols = coarse.dim();
  p.row_ptr.assign(static_cast<size_t>(p.rows) + 1, 0);
  std::vector<double> vals(static_cast<size_t>(n));
  std::vector<std::pair<int, double>> row;
  for (int f = 0; f < fine.dim(); ++f) {
    int dof = fine.free_to_dof[static_cast<size_t>(f)];
    int fe = owner[static_cast<size_t>(dof)];
    int pe = fine.mesh.parent[static_cast<size_t>(fe)];
    ElementMap pmap = coarse.map_of(pe);
    rb.values(pmap.to_reference(fine.dof_coords[static_cast<size_t>(dof)]), vals.data());
    const int* ced = coarse.edofs(pe);
    row.clear();
    for (int li = 0; li < n; ++li) {
      if (std::abs(vals[static_cast<size_t>(li)]) < 1e-14) continue;
      int cf = coarse.dof_to_free[static_cast<size_t>(ced[li])];
      if (cf < 0) continue;  // constrained coarse dofs carry coefficient 0
      row.emplace_back(cf, vals[static_cast<size_t>(li)]);
    }
    std::sort(row.begin(), row.end());
    for (auto& [c, v] : row) {
      p.col.push_back(c);
      p.val.push_back(v);
    }
    p.row_ptr[static_cast<size_t>(f) + 1] = static_cast<int>(p.col.size());
  }
  return p;
}

std::vector<double> prolong(const FiniteElementSpace& coarse, const FiniteElementSpace& fine,
                            const std::vector<double>& u_coarse) {
  if (static_cast<int>(u_coarse.size()) != coarse.dim())
    throw std::invalid_argument("prolong: coefficient length does not match the coarse space");
  return matvec(prolongation_matrix(coarse, fine), u_coarse);
}

}  // namespace afem
