#pragma once

#include <vector>

#include "afem/basis.hpp"
#include "afem/mesh.hpp"

namespace afem {

// Affine map from the reference triangle onto a physical element.
struct ElementMap {
  Vec2 p0;
  double j11, j12, j21, j22;  // columns are (p1-p0), (p2-p0)
  double det;                 // = 2*area > 0 for CCW elements

  Vec2 to_physical(Vec2 ref) const {
    return {p0.x + j11 * ref.x + j12 * ref.y, p0.y + j21 * ref.x + j22 * ref.y};
  }
  Vec2 to_reference(Vec2 phys) const {
    double rx = phys.x - p0.x, ry = phys.y - p0.y;
    return {(j22 * rx - j12 * ry) / det, (-j21 * rx + j11 * ry) / det};
  }
  // grad_phys = J^{-T} grad_ref
  Vec2 grad_to_physical(Vec2 g) const {
    return {(j22 * g.x - j21 * g.y) / det, (-j12 * g.x + j11 * g.y) / det};
  }
  // H_phys = J^{-T} H_ref J^{-1}, reported as (xx, xy, yy).
  void hessian_to_physical(double hxx, double hxy, double hyy, double& oxx, double& oxy, double& oyy) const {
    double ia11 = j22 / det, ia12 = -j12 / det, ia21 = -j21 / det, ia22 = j11 / det;  // J^{-1}
    // B = J^{-T} H: rows of J^{-T} are columns of J^{-1}.
    double b11 = ia11 * hxx + ia21 * hxy, b12 = ia11 * hxy + ia21 * hyy;
    double b21 = ia12 * hxx + ia22 * hxy, b22 = ia12 * hxy + ia22 * hyy;
    oxx = b11 * ia11 + b12 * ia21;
    oxy = b11 * ia12 + b12 * ia22;
    oyy = b21 * ia12 + b22 * ia22;
  }
};

// Conforming Lagrange space of fixed degree on a triangulation with
// homogeneous Dirichlet conditions on all tagged boundary edges. Global dof
// order: vertex dofs in mesh order, then edge dofs (edge enumeration order of
// the EdgeTable, each edge walked from its smaller to its larger endpoint),
// then per-element interior dofs. Coefficient vectors passed around the
// toolkit hold the free (unconstrained) dofs only.
struct FiniteElementSpace {
  Triangulation mesh;
  int degree = 1;
  EdgeTable edges;
  int ndof_local = 0;
  int total_dofs = 0;
  std::vector<int> element_dofs;     // num_elements * ndof_local, local node order
  std::vector<Vec2> dof_coords;
  std::vector<char> is_dirichlet;    // per global dof
  std::vector<int> dof_to_free;      // -1 for constrained dofs
  std::vector<int> free_to_dof;

  int num_dofs() const { return total_dofs; }
  int dim() const { return static_cast<int>(free_to_dof.size()); }
  const int* edofs(int e) const { return &element_dofs[static_cast<size_t>(e) * ndof_local]; }
  ElementMap map_of(int e) const;
};

FiniteElementSpace build_space(const Triangulation& t, int degree);

// Expand free coefficients to the full dof vector (constrained dofs are 0).
std::vector<double> expand_free(const FiniteElementSpace& s, const std::vector<double>& u_free);

// Point evaluation of an FE function given by its full dof vector; brute-force
// element search, intended for tests and diagnostics, not inner loops.
double evaluate_full(const FiniteElementSpace& s, const std::vector<double>& u_full, Vec2 p);
double evaluate(const FiniteElementSpace& s, const std::vector<double>& u_free, Vec2 p);

// Exact embedding of the coarse space into a space on a refinement of its
// mesh (same degree): rows are fine free dofs, columns coarse free dofs, and
// each row interpolates the coarse function at the fine dof node through the
// parent element. Requires fine.mesh to carry parent links onto coarse.mesh
// (as produced by refine()); the geometric containment is verified and a
// broken relationship throws.
struct CsrMatrix;
CsrMatrix prolongation_matrix(const FiniteElementSpace& coarse, const FiniteElementSpace& fine);
std::vector<double> prolong(const FiniteElementSpace& coarse, const FiniteElementSpace& fine,
                            const std::vector<double>& u_coarse);

}  // namespace afem
