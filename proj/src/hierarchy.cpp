#include "afem/hierarchy.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "afem/rng.hpp"
#include "afem/util.hpp"

namespace afem {

void SolverConfig::validate() const {
  if (kind != "pcg-bpx" && kind != "mg-vcycle")
    throw std::invalid_argument(strf("unknown solver kind '%s' (expected pcg-bpx or mg-vcycle)", kind.c_str()));
  if (smoother != "patch" && smoother != "jacobi")
    throw std::invalid_argument(strf("unknown smoother '%s' (expected patch or jacobi)", smoother.c_str()));
  if (coarse_cap < 0) throw std::invalid_argument("solver coarse_cap must be nonnegative");
  if (!(q_cap > 0.0 && q_cap < 1.0)) throw std::invalid_argument("solver q_cap must lie in (0,1)");
}

MultilevelHierarchy::MultilevelHierarchy(SolverConfig cfg) : cfg_(std::move(cfg)) { cfg_.validate(); }

namespace {

// Dense in-place Cholesky (row-major lower factor); n is small (one patch).
void cholesky_factor(std::vector<double>& m, int n) {
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j <= i; ++j) {
      double s = m[static_cast<size_t>(i) * n + j];
      for (int k = 0; k < j; ++k) s -= m[static_cast<size_t>(i) * n + k] * m[static_cast<size_t>(j) * n + k];
      if (i == j) {
        if (!(s > 0.0)) throw std::runtime_error("patch matrix is not positive definite");
        m[static_cast<size_t>(i) * n + i] = std::sqrt(s);
      } else {
        m[static_cast<size_t>(i) * n + j] = s / m[static_cast<size_t>(j) * n + j];
      }
    }
    for (int j = i + 1; j < n; ++j) m[static_cast<size_t>(i) * n + j] = 0.0;
  }
}

void cholesky_solve(const std::vector<double>& l, int n, std::vector<double>& x) {
  for (int i = 0; i < n; ++i) {
    double s = x[static_cast<size_t>(i)];
    for (int k = 0; k < i; ++k) s -= l[static_cast<size_t>(i) * n + k] * x[static_cast<size_t>(k)];
    x[static_cast<size_t>(i)] = s / l[static_cast<size_t>(i) * n + i];
  }
  for (int i = n - 1; i >= 0; --i) {
    double s = x[static_cast<size_t>(i)];
    for (int k = i + 1; k < n; ++k) s -= l[static_cast<size_t>(k) * n + i] * x[static_cast<size_t>(k)];
    x[static_cast<size_t>(i)] = s / l[static_cast<size_t>(i) * n + i];
  }
}

double csr_entry(const CsrMatrix& a, int row, int col) {
  for (int k = a.row_ptr[static_cast<size_t>(row)]; k < a.row_ptr[static_cast<size_t>(row) + 1]; ++k)
    if (a.col[static_cast<size_t>(k)] == col) return a.val[static_cast<size_t>(k)];
  return 0.0;
}

}  // namespace

void MultilevelHierarchy::push_level(const FiniteElementSpace& s, CsrMatrix k, CsrMatrix p) {
  if (k.rows != k.cols || k.rows != s.dim())
    throw std::invalid_argument(strf("push_level: operator is %dx%d but the space has %d free dofs", k.rows,
                                     k.cols, s.dim()));
  if (!k.symmetric) throw std::invalid_argument("push_level: level operator must be the symmetric form");

  HierarchyLevel lv;
  if (levels_.empty()) {
    if (p.rows != 0 || p.cols != 0)
      throw std::invalid_argument("push_level: level 0 takes no prolongation");
    if (k.rows > cfg_.coarse_cap)
      throw std::invalid_argument(strf(
          "push_level: coarsest level has %d dofs, above the direct-solve cap %d", k.rows, cfg_.coarse_cap));
    coarse_ = std::make_unique<DirectFactor>(k);
    lv.K = std::move(k);
  } else {
    const HierarchyLevel& prev = levels_.back();
    if (p.rows != k.rows || p.cols != prev.K.rows)
      throw std::invalid_argument(strf("push_level: prolongation is %dx%d, expected %dx%d", p.rows, p.cols,
                                       k.rows, prev.K.rows));
    lv.K = std::move(k);
    lv.P = std::move(p);
    lv.Pt = transpose(lv.P);

    // Patches around the vertices introduced by this refinement step.
    const int nv = s.mesh.num_vertices();
    std::vector<std::vector<int>> vertex_elems(static_cast<size_t>(nv - prev_num_vertices_));
    for (int e = 0; e < s.mesh.num_elements(); ++e)
      for (int v : s.mesh.elements[static_cast<size_t>(e)])
        if (v >= prev_num_vertices_) vertex_elems[static_cast<size_t>(v - prev_num_vertices_)].push_back(e);

    for (auto& elems : vertex_elems) {
      std::vector<int> patch;
      for (int e : elems) {
        const int* ed = s.edofs(e);
        for (int li = 0; li < s.ndof_local; ++li) {
          int f = s.dof_to_free[static_cast<size_t>(ed[li])];
          if (f >= 0) patch.push_back(f);
        }
      }
      std::sort(patch.begin(), patch.end());
      patch.erase(std::unique(patch.begin(), patch.end()), patch.end());
      if (patch.empty()) continue;
      int n = static_cast<int>(patch.size());
      std::vector<double> block(static_cast<size_t>(n) * n, 0.0);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) block[static_cast<size_t>(i) * n + j] = csr_entry(lv.K, patch[static_cast<size_t>(i)], patch[static_cast<size_t>(j)]);
      cholesky_factor(block, n);
      lv.patches.push_back(std::move(patch));
      lv.patch_chol.push_back(std::move(block));
    }

    for (const auto& patch : lv.patches)
      lv.smooth_dofs.insert(lv.smooth_dofs.end(), patch.begin(), patch.end());
    std::sort(lv.smooth_dofs.begin(), lv.smooth_dofs.end());
    lv.smooth_dofs.erase(std::unique(lv.smooth_dofs.begin(), lv.smooth_dofs.end()), lv.smooth_dofs.end());
    lv.smooth_inv_diag.resize(lv.smooth_dofs.size());
    for (size_t i = 0; i < lv.smooth_dofs.size(); ++i) {
      double d = csr_entry(lv.K, lv.smooth_dofs[i], lv.smooth_dofs[i]);
      if (!(d > 0.0)) throw std::runtime_error("level operator has a nonpositive diagonal entry");
      lv.smooth_inv_diag[i] = 1.0 / d;
    }
  }
  prev_num_vertices_ = s.mesh.num_vertices();
  levels_.push_back(std::move(lv));
}

const CsrMatrix& MultilevelHierarchy::matrix() const {
  if (levels_.empty()) throw std::logic_error("hierarchy is empty");
  return levels_.back().K;
}

int MultilevelHierarchy::dim() const { return matrix().rows; }

std::vector<double> MultilevelHierarchy::smooth_additive(const HierarchyLevel& lv,
                                                         const std::vector<double>& r) const {
  std::vector<double> out(r.size(), 0.0);
  if (cfg_.smoother == "jacobi") {
    for (size_t i = 0; i < lv.smooth_dofs.size(); ++i) {
      int d = lv.smooth_dofs[i];
      out[static_cast<size_t>(d)] = r[static_cast<size_t>(d)] * lv.smooth_inv_diag[i];
    }
    return out;
  }
  std::vector<double> local;
  for (size_t pi = 0; pi < lv.patches.size(); ++pi) {
    const auto& patch = lv.patches[pi];
    int n = static_cast<int>(patch.size());
    local.assign(static_cast<size_t>(n), 0.0);
    for (int i = 0; i < n; ++i) local[static_cast<size_t>(i)] = r[static_cast<size_t>(patch[static_cast<size_t>(i)])];
    cholesky_solve(lv.patch_chol[pi], n, local);
    for (int i = 0; i < n; ++i) out[static_cast<size_t>(patch[static_cast<size_t>(i)])] += local[static_cast<size_t>(i)];
  }
  return out;
}

std::vector<double> MultilevelHierarchy::apply_preconditioner(const std::vector<double>& r) const {
  if (levels_.empty()) throw std::logic_error("hierarchy is empty");
  if (static_cast<int>(r.size()) != dim())
    throw std::invalid_argument(strf("preconditioner: residual has %zu entries, expected %d", r.size(), dim()));
  const int nl = num_levels();
  std::vector<std::vector<double>> res(static_cast<size_t>(nl));
  res[static_cast<size_t>(nl - 1)] = r;
  for (int l = nl - 1; l >= 1; --l)
    res[static_cast<size_t>(l - 1)] = matvec(levels_[static_cast<size_t>(l)].Pt, res[static_cast<size_t>(l)]);

  std::vector<double> v = coarse_->solve(res[0]);
  for (int l = 1; l < nl; ++l) {
    const HierarchyLevel& lv = levels_[static_cast<size_t>(l)];
    std::vector<double> up = matvec(lv.P, v);
    std::vector<double> sm = smooth_additive(lv, res[static_cast<size_t>(l)]);
    for (size_t i = 0; i < up.size(); ++i) up[i] += sm[i];
    v = std::move(up);
  }
  return v;
}

void MultilevelHierarchy::gauss_seidel(const HierarchyLevel& lv, std::vector<double>& x,
                                       const std::vector<double>& r, bool reverse) const {
  auto update = [&](size_t i) {
    int row = lv.smooth_dofs[i];
    double s = r[static_cast<size_t>(row)];
    for (int k = lv.K.row_ptr[static_cast<size_t>(row)]; k < lv.K.row_ptr[static_cast<size_t>(row) + 1]; ++k)
      s -= lv.K.val[static_cast<size_t>(k)] * x[static_cast<size_t>(lv.K.col[static_cast<size_t>(k)])];
    x[static_cast<size_t>(row)] += s * lv.smooth_inv_diag[i];
  };
  if (reverse) {
    for (size_t i = lv.smooth_dofs.size(); i-- > 0;) update(i);
  } else {
    for (size_t i = 0; i < lv.smooth_dofs.size(); ++i) update(i);
  }
}

std::vector<double> MultilevelHierarchy::vcycle_level(int l, const std::vector<double>& r) const {
  if (l == 0) return coarse_->solve(r);
  const HierarchyLevel& lv = levels_[static_cast<size_t>(l)];
  std::vector<double> x(r.size(), 0.0);
  gauss_seidel(lv, x, r, false);
  std::vector<double> kx = matvec(lv.K, x);
  std::vector<double> resid(r.size());
  for (size_t i = 0; i < r.size(); ++i) resid[i] = r[i] - kx[i];
  std::vector<double> coarse_corr = vcycle_level(l - 1, matvec(lv.Pt, resid));
  std::vector<double> up = matvec(lv.P, coarse_corr);
  for (size_t i = 0; i < x.size(); ++i) x[i] += up[i];
  gauss_seidel(lv, x, r, true);
  return x;
}

std::vector<double> MultilevelHierarchy::vcycle(const std::vector<double>& r) const {
  if (levels_.empty()) throw std::logic_error("hierarchy is empty");
  if (static_cast<int>(r.size()) != dim())
    throw std::invalid_argument(strf("vcycle: residual has %zu entries, expected %d", r.size(), dim()));
  return vcycle_level(num_levels() - 1, r);
}

IterativeSolver::IterativeSolver(const MultilevelHierarchy* h) : hier_(h) {
  if (!h) throw std::invalid_argument("IterativeSolver needs a hierarchy");
}

void IterativeSolver::set_rhs(std::vector<double> rhs) {
  if (static_cast<int>(rhs.size()) != hier_->dim())
    throw std::invalid_argument(strf("set_rhs: got %zu entries, expected %d", rhs.size(), hier_->dim()));
  rhs_ = std::move(rhs);
  fresh_ = true;
}

std::vector<double> IterativeSolver::step(const std::vector<double>& x) {
  const CsrMatrix& k = hier_->matrix();
  if (static_cast<int>(x.size()) != k.rows)
    throw std::invalid_argument(strf("solver step: iterate has %zu entries, expected %d", x.size(), k.rows));
  if (rhs_.size() != x.size()) throw std::logic_error("solver step called before set_rhs");
  if (x.empty()) return x;

  if (hier_->config().kind == "mg-vcycle") {
    std::vector<double> kx = matvec(k, x);
    std::vector<double> r(x.size());
    for (size_t i = 0; i < x.size(); ++i) r[i] = rhs_[i] - kx[i];
    if (norm2(r) == 0.0) return x;
    std::vector<double> corr = hier_->vcycle(r);
    std::vector<double> out = x;
    for (size_t i = 0; i < out.size(); ++i) out[i] += corr[i];
    return out;
  }

  // Preconditioned conjugate gradient, one iteration per call. State carries
  // over only while the caller continues from the previous output.
  if (!fresh_ && x != last_x_) fresh_ = true;
  if (fresh_) {
    std::vector<double> kx = matvec(k, x);
    r_.resize(x.size());
    for (size_t i = 0; i < x.size(); ++i) r_[i] = rhs_[i] - kx[i];
    z_ = hier_->apply_preconditioner(r_);
    p_ = z_;
    rz_ = dot(r_, z_);
    fresh_ = false;
  }
  if (norm2(r_) == 0.0) {
    last_x_ = x;
    return x;
  }
  if (!(rz_ > 0.0))
    throw std::runtime_error(
        strf("pcg: preconditioned residual product r^T B r = %.3e is not positive "
             "(nonzero residual): preconditioner is not positive definite",
             rz_));
  std::vector<double> kp = matvec(k, p_);
  double pkp = dot(p_, kp);
  if (!(pkp > 0.0))
    throw std::runtime_error(
        strf("pcg: curvature p^T K p = %.3e is not positive: matrix is not "
             "symmetric positive definite",
             pkp));
  double alpha = rz_ / pkp;
  std::vector<double> out = x;
  axpy(alpha, p_, out);
  axpy(-alpha, kp, r_);
  z_ = hier_->apply_preconditioner(r_);
  double rz_new = dot(r_, z_);
  double beta = rz_new / rz_;
  rz_ = rz_new;
  for (size_t i = 0; i < p_.size(); ++i) p_[i] = z_[i] + beta * p_[i];
  last_x_ = out;
  return out;
}

ContractionReport measure_contraction(const MultilevelHierarchy& h, const std::vector<double>& rhs,
                                      int trials, int steps, uint64_t seed) {
  const CsrMatrix& k = h.matrix();
  if (k.rows == 0) return {};
  DirectFactor kf(k);
  std::vector<double> xstar = kf.solve(rhs);
  double ref = std::sqrt(std::max(0.0, quadratic_form(k, xstar, xstar)));
  double floor_sq = std::max(1e-28, 1e-28 * ref * ref);

  Rng rng(seed);
  ContractionReport rep;
  double sum = 0.0;
  for (int t = 0; t < trials; ++t) {
    std::vector<double> x(static_cast<size_t>(k.rows));
    for (auto& v : x) v = rng.next_normal();
    IterativeSolver solver(&h);
    solver.set_rhs(rhs);
    std::vector<double> e(x.size());
    for (size_t i = 0; i < x.size(); ++i) e[i] = x[i] - xstar[i];
    double prev_sq = quadratic_form(k, e, e);
    for (int s = 0; s < steps; ++s) {
      x = solver.step(x);
      for (size_t i = 0; i < x.size(); ++i) e[i] = x[i] - xstar[i];
      double cur_sq = quadratic_form(k, e, e);
      if (prev_sq > floor_sq && cur_sq >= 0.0) {
        double q = std::sqrt(std::max(0.0, cur_sq) / prev_sq);
        rep.worst = std::max(rep.worst, q);
        sum += q;
        ++rep.samples;
      }
      prev_sq = cur_sq;
    }
  }
  rep.mean = rep.samples > 0 ? sum / rep.samples : 0.0;
  return rep;
}

}  // namespace afem
