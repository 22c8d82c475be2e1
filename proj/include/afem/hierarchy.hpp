#pragma once

#include <memory>
#include <string>
#include <vector>

#include "afem/direct.hpp"
#include "afem/space.hpp"
#include "afem/sparse.hpp"

namespace afem {

struct SolverConfig {
  std::string kind = "pcg-bpx";    // "pcg-bpx" | "mg-vcycle"
  std::string smoother = "patch";  // "patch" (overlapping block solves) | "jacobi"
  int coarse_cap = 500;            // largest dimension factored directly on level 0
  double q_cap = 0.9;              // contraction bound the solver is expected to satisfy

  void validate() const;  // throws std::invalid_argument on unknown names / bad caps
};

// One level of the solver hierarchy. The smoother acts only on dofs that are
// new or changed relative to the previous level: patches are centered at the
// new vertices, and every child element contains its bisection midpoint, so
// the union of patches covers every changed basis function.
struct HierarchyLevel {
  CsrMatrix K;   // level operator on the level's free dofs
  CsrMatrix P;   // prolongation from the previous level
  CsrMatrix Pt;  // cached transpose of P
  std::vector<std::vector<int>> patches;        // free-dof blocks around new vertices
  std::vector<std::vector<double>> patch_chol;  // dense Cholesky factor per patch (row-major lower)
  std::vector<int> smooth_dofs;                 // union of patch dofs, ascending
  std::vector<double> smooth_inv_diag;          // 1/K_ii for smooth_dofs
};

// Geometric hierarchy for the additive multilevel preconditioner and the
// multigrid cycle: a direct factorization on the coarsest level plus local
// smoothers on every refinement level.
class MultilevelHierarchy {
 public:
  explicit MultilevelHierarchy(SolverConfig cfg = {});

  // First call installs level 0 (p must be empty; dim <= coarse_cap or this
  // throws). Subsequent calls add one refinement level; p maps the previous
  // level's free dofs into this one's.
  void push_level(const FiniteElementSpace& s, CsrMatrix k, CsrMatrix p);

  int num_levels() const { return static_cast<int>(levels_.size()); }
  const SolverConfig& config() const { return cfg_; }
  const HierarchyLevel& level(int l) const { return levels_[static_cast<size_t>(l)]; }
  const CsrMatrix& matrix() const;  // finest-level operator
  int dim() const;                  // finest-level dimension

  // v = B r: coarse solve plus level-wise additive local smoothing,
  // prolongated to the finest level.
  std::vector<double> apply_preconditioner(const std::vector<double>& r) const;

  // One multigrid V-cycle (local symmetric Gauss-Seidel smoothing) applied to
  // the residual equation on the finest level: returns the correction.
  std::vector<double> vcycle(const std::vector<double>& r) const;

 private:
  SolverConfig cfg_;
  std::vector<HierarchyLevel> levels_;
  std::unique_ptr<DirectFactor> coarse_;
  int prev_num_vertices_ = 0;

  std::vector<double> smooth_additive(const HierarchyLevel& lv, const std::vector<double>& r) const;
  void gauss_seidel(const HierarchyLevel& lv, std::vector<double>& x, const std::vector<double>& r,
                    bool reverse) const;
  std::vector<double> vcycle_level(int l, const std::vector<double>& r) const;
};

// One iterative step x -> x' toward K x = rhs on the finest level of the
// hierarchy. "pcg-bpx" is preconditioned conjugate gradient (one step per
// call, internal state carried between calls and reset when the rhs or the
// start iterate changes); "mg-vcycle" adds one V-cycle correction and is
// stateless. A zero residual returns the iterate unchanged.
class IterativeSolver {
 public:
  explicit IterativeSolver(const MultilevelHierarchy* h);

  void set_rhs(std::vector<double> rhs);  // resets internal state
  const std::vector<double>& rhs() const { return rhs_; }
  std::vector<double> step(const std::vector<double>& x);

 private:
  const MultilevelHierarchy* hier_;
  std::vector<double> rhs_;
  // pcg state
  bool fresh_ = true;
  std::vector<double> r_, z_, p_, last_x_;
  double rz_ = 0.0;
};

// Empirical per-step energy-norm contraction of the solver on K x = rhs:
// runs `trials` random starts for `steps` iterations each and reports the
// error ratios against the direct solution. Steps whose error is already at
// roundoff level are skipped; if nothing remains, worst/mean are 0.
struct ContractionReport {
  double worst = 0.0;
  double mean = 0.0;
  int samples = 0;
};
ContractionReport measure_contraction(const MultilevelHierarchy& h, const std::vector<double>& rhs,
                                      int trials, int steps, uint64_t seed);

}  // namespace afem
