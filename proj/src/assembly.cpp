#include "afem/assembly.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <limits>
#include <mutex>
#include <stdexcept>

#include "afem/basis.hpp"
#include "afem/quadrature.hpp"
#include "afem/rng.hpp"
#include "afem/util.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace afem {

namespace {

// Reference-basis tables at the quadrature points of one rule.
struct BasisTables {
  int n = 0, nq = 0;
  std::vector<double> val;   // nq x n
  std::vector<Vec2> grad;    // nq x n (reference gradients)
};

BasisTables tabulate(const ReferenceBasis& rb, const TriRule& rule) {
  BasisTables t;
  t.n = rb.size();
  t.nq = static_cast<int>(rule.pts.size());
  t.val.resize(static_cast<size_t>(t.nq) * t.n);
  t.grad.resize(static_cast<size_t>(t.nq) * t.n);
  for (int q = 0; q < t.nq; ++q) {
    rb.values(rule.pts[static_cast<size_t>(q)], &t.val[static_cast<size_t>(q) * t.n]);
    rb.gradients(rule.pts[static_cast<size_t>(q)], &t.grad[static_cast<size_t>(q) * t.n]);
  }
  return t;
}

struct CoefficientError {
  std::atomic<bool> bad{false};
  std::mutex mu;
  std::string message;

  void report(const std::string& msg) {
    bool expected = false;
    if (bad.compare_exchange_strong(expected, true)) {
      std::lock_guard<std::mutex> lock(mu);
      message = msg;
    }
  }
  void rethrow() const {
    if (bad.load()) throw std::invalid_argument(message);
  }
};

// Local matrices of one element given pre-tabulated reference data.
void element_system_impl(const FiniteElementSpace& s, const ProblemData& d, int e, const TriRule& rule,
                         const BasisTables& tab, bool want_a, bool want_b, bool want_load, double* a_mat,
                         double* b_mat, double* load, CoefficientError* err) {
  const int n = tab.n;
  ElementMap map = s.map_of(e);
  if (want_a || want_b)
    for (int i = 0; i < n * n; ++i) {
      if (want_a) a_mat[i] = 0.0;
      if (want_b) b_mat[i] = 0.0;
    }
  if (want_load)
    for (int i = 0; i < n; ++i) load[i] = 0.0;

  std::vector<Vec2> pg(static_cast<size_t>(n));
  for (int q = 0; q < tab.nq; ++q) {
    double w = rule.wts[static_cast<size_t>(q)] * map.det;
    Vec2 x = map.to_physical(rule.pts[static_cast<size_t>(q)]);
    const double* phi = &tab.val[static_cast<size_t>(q) * n];
    const Vec2* gref = &tab.grad[static_cast<size_t>(q) * n];
    for (int i = 0; i < n; ++i) pg[static_cast<size_t>(i)] = map.grad_to_physical(gref[i]);

    if (want_a || want_b) {
      Mat2 A = d.A(x);
      double scale = std::abs(A.a11) + std::abs(A.a12) + std::abs(A.a21) + std::abs(A.a22) + 1.0;
      if (std::abs(A.a12 - A.a21) > 1e-12 * scale) {
        if (err) {
          err->report(strf("diffusion coefficient is not symmetric at (%.6g,%.6g): A12=%.17g A21=%.17g", x.x,
                           x.y, A.a12, A.a21));
          return;
        }
        throw std::invalid_argument("diffusion coefficient is not symmetric");
      }
      if (!(A.a11 > 0.0) || !(A.a11 * A.a22 - A.a12 * A.a21 > 0.0)) {
        if (err) {
          err->report(strf("diffusion coefficient is not positive definite at (%.6g,%.6g)", x.x, x.y));
          return;
        }
        throw std::invalid_argument("diffusion coefficient is not positive definite");
      }
      // Principal part, mirrored so the assembled matrix is exactly symmetric.
      for (int i = 0; i < n; ++i) {
        Vec2 Agi = apply(A, pg[static_cast<size_t>(i)]);
        for (int j = i; j < n; ++j) {
          double v = w * dot(Agi, pg[static_cast<size_t>(j)]);
          a_mat[i * n + j] += v;
          if (j != i) a_mat[j * n + i] += v;
        }
      }
      if (want_b) {
        Vec2 bx = d.b(x);
        double cx = d.c(x);
        for (int j = 0; j < n; ++j) {
          double conv = dot(bx, pg[static_cast<size_t>(j)]) + cx * phi[j];
          if (conv == 0.0) continue;
          for (int i = 0; i < n; ++i) b_mat[i * n + j] += w * conv * phi[i];
        }
      }
    }
    if (want_load) {
      double fx = d.f(x);
      Vec2 fvx = d.fvec(x);
      for (int i = 0; i < n; ++i)
        load[i] += w * (fx * phi[i] + dot(fvx, pg[static_cast<size_t>(i)]));
    }
  }
  if (want_b && want_a)
    for (int i = 0; i < n * n; ++i) b_mat[i] += a_mat[i];
}

// Deterministic two-pass assembly: local systems are computed independently
// per element (parallel), then every nonzero slot gathers its contributions
// in a fixed (element-sorted) order, so the result is independent of the
// thread count and bitwise reproducible.
struct MatrixPlan {
  CsrMatrix pattern;
  std::vector<long> slot_offset;
  std::vector<int> contrib_elem;
  std::vector<uint16_t> contrib_li, contrib_lj;
};

struct LoadPlan {
  int rows = 0;
  std::vector<long> offset;
  std::vector<int> elem;
  std::vector<uint16_t> li;
};

struct MatRec {
  int row, col, elem;
  uint16_t li, lj;
};

MatrixPlan build_matrix_plan(const FiniteElementSpace& s, bool constrained) {
  const int n = s.ndof_local;
  const int rows = constrained ? s.dim() : s.num_dofs();
  std::vector<MatRec> recs;
  recs.reserve(static_cast<size_t>(s.mesh.num_elements()) * n * n);
  for (int e = 0; e < s.mesh.num_elements(); ++e) {
    const int* ed = s.edofs(e);
    for (int li = 0; li < n; ++li) {
      int gi = constrained ? s.dof_to_free[static_cast<size_t>(ed[li])] : ed[li];
      if (gi < 0) continue;
      for (int lj = 0; lj < n; ++lj) {
        int gj = constrained ? s.dof_to_free[static_cast<size_t>(ed[lj])] : ed[lj];
        if (gj < 0) continue;
        recs.push_back({gi, gj, e, static_cast<uint16_t>(li), static_cast<uint16_t>(lj)});
      }
    }
  }
  std::sort(recs.begin(), recs.end(), [](const MatRec& a, const MatRec& b) {
    if (a.row != b.row) return a.row < b.row;
    if (a.col != b.col) return a.col < b.col;
    return a.elem < b.elem;
  });

  MatrixPlan p;
  p.pattern.rows = p.pattern.cols = rows;
  p.pattern.row_ptr.assign(static_cast<size_t>(rows) + 1, 0);
  p.contrib_elem.resize(recs.size());
  p.contrib_li.resize(recs.size());
  p.contrib_lj.resize(recs.size());
  for (size_t i = 0; i < recs.size(); ++i) {
    if (i == 0 || recs[i].row != recs[i - 1].row || recs[i].col != recs[i - 1].col) {
      p.pattern.col.push_back(recs[i].col);
      ++p.pattern.row_ptr[static_cast<size_t>(recs[i].row) + 1];
      p.slot_offset.push_back(static_cast<long>(i));
    }
    p.contrib_elem[i] = recs[i].elem;
    p.contrib_li[i] = recs[i].li;
    p.contrib_lj[i] = recs[i].lj;
  }
  p.slot_offset.push_back(static_cast<long>(recs.size()));
  for (int r = 0; r < rows; ++r) p.pattern.row_ptr[static_cast<size_t>(r) + 1] += p.pattern.row_ptr[static_cast<size_t>(r)];
  p.pattern.val.assign(p.pattern.col.size(), 0.0);
  return p;
}

LoadPlan build_load_plan(const FiniteElementSpace& s, bool constrained) {
  const int n = s.ndof_local;
  struct Rec {
    int row, elem;
    uint16_t li;
  };
  std::vector<Rec> recs;
  recs.reserve(static_cast<size_t>(s.mesh.num_elements()) * n);
  for (int e = 0; e < s.mesh.num_elements(); ++e) {
    const int* ed = s.edofs(e);
    for (int li = 0; li < n; ++li) {
      int gi = constrained ? s.dof_to_free[static_cast<size_t>(ed[li])] : ed[li];
      if (gi < 0) continue;
      recs.push_back({gi, e, static_cast<uint16_t>(li)});
    }
  }
  std::sort(recs.begin(), recs.end(), [](const Rec& a, const Rec& b) {
    if (a.row != b.row) return a.row < b.row;
    return a.elem < b.elem;
  });
  LoadPlan p;
  p.rows = constrained ? s.dim() : s.num_dofs();
  p.offset.assign(static_cast<size_t>(p.rows) + 1, 0);
  p.elem.resize(recs.size());
  p.li.resize(recs.size());
  for (size_t i = 0; i < recs.size(); ++i) {
    ++p.offset[static_cast<size_t>(recs[i].row) + 1];
    p.elem[i] = recs[i].elem;
    p.li[i] = recs[i].li;
  }
  for (int r = 0; r < p.rows; ++r) p.offset[static_cast<size_t>(r) + 1] += p.offset[static_cast<size_t>(r)];
  return p;
}

struct AssembleOutput {
  CsrMatrix K, B;
  std::vector<double> F;
};

AssembleOutput assemble_impl(const FiniteElementSpace& s, const ProblemData& d, bool want_a, bool want_b,
                             bool want_load, bool constrained) {
  const ReferenceBasis& rb = ReferenceBasis::get(s.degree);
  TriRule rule = tri_rule(2 * s.degree + std::max(0, d.data_degree));
  BasisTables tab = tabulate(rb, rule);
  const int n = rb.size();
  const long ne = s.mesh.num_elements();

  std::vector<double> loc_a(want_a || want_b ? static_cast<size_t>(ne) * n * n : 0);
  std::vector<double> loc_b(want_b ? static_cast<size_t>(ne) * n * n : 0);
  std::vector<double> loc_f(want_load ? static_cast<size_t>(ne) * n : 0);
  CoefficientError err;

  const bool parallel = kernel_backend() == Backend::omp;
#ifdef _OPENMP
#pragma omp parallel for schedule(static) if (parallel)
#endif
  for (long e = 0; e < ne; ++e) {
    if (err.bad.load(std::memory_order_relaxed)) continue;
    element_system_impl(s, d, static_cast<int>(e), rule, tab, want_a || want_b, want_b, want_load,
                        (want_a || want_b) ? &loc_a[static_cast<size_t>(e) * n * n] : nullptr,
                        want_b ? &loc_b[static_cast<size_t>(e) * n * n] : nullptr,
                        want_load ? &loc_f[static_cast<size_t>(e) * n] : nullptr, &err);
  }
  err.rethrow();

  AssembleOutput out;
  if (want_a || want_b) {
    MatrixPlan plan = build_matrix_plan(s, constrained);
    long nslots = static_cast<long>(plan.pattern.col.size());
    auto gather = [&](const std::vector<double>& locals, CsrMatrix& target) {
      target = plan.pattern;
#ifdef _OPENMP
#pragma omp parallel for schedule(static) if (parallel)
#endif
      for (long slot = 0; slot < nslots; ++slot) {
        double sum = 0.0;
        for (long k = plan.slot_offset[static_cast<size_t>(slot)]; k < plan.slot_offset[static_cast<size_t>(slot) + 1]; ++k)
          sum += locals[static_cast<size_t>(plan.contrib_elem[static_cast<size_t>(k)]) * n * n +
                        plan.contrib_li[static_cast<size_t>(k)] * n + plan.contrib_lj[static_cast<size_t>(k)]];
        target.val[static_cast<size_t>(slot)] = sum;
      }
    };
    if (want_a) {
      gather(loc_a, out.K);
      out.K.symmetric = true;
    }
    if (want_b) gather(loc_b, out.B);
  }
  if (want_load) {
    LoadPlan plan = build_load_plan(s, constrained);
    out.F.assign(static_cast<size_t>(plan.rows), 0.0);
#ifdef _OPENMP
#pragma omp parallel for schedule(static) if (parallel)
#endif
    for (long r = 0; r < plan.rows; ++r) {
      double sum = 0.0;
      for (long k = plan.offset[static_cast<size_t>(r)]; k < plan.offset[static_cast<size_t>(r) + 1]; ++k)
        sum += loc_f[static_cast<size_t>(plan.elem[static_cast<size_t>(k)]) * n + plan.li[static_cast<size_t>(k)]];
      out.F[static_cast<size_t>(r)] = sum;
    }
  }
  return out;
}

}  // namespace

ElementSystem element_system(const FiniteElementSpace& s, const ProblemData& d, int e) {
  if (e < 0 || e >= s.mesh.num_elements())
    throw std::invalid_argument(strf("element index %d out of range [0,%d)", e, s.mesh.num_elements()));
  const ReferenceBasis& rb = ReferenceBasis::get(s.degree);
  TriRule rule = tri_rule(2 * s.degree + std::max(0, d.data_degree));
  BasisTables tab = tabulate(rb, rule);
  ElementSystem out;
  out.a_mat.resize(static_cast<size_t>(rb.size()) * rb.size());
  out.b_mat.resize(static_cast<size_t>(rb.size()) * rb.size());
  out.load.resize(static_cast<size_t>(rb.size()));
  element_system_impl(s, d, e, rule, tab, true, true, true, out.a_mat.data(), out.b_mat.data(),
                      out.load.data(), nullptr);
  return out;
}

CsrMatrix assemble_a(const FiniteElementSpace& s, const ProblemData& d) {
  return std::move(assemble_impl(s, d, true, false, false, true).K);
}
CsrMatrix assemble_b(const FiniteElementSpace& s, const ProblemData& d) {
  return std::move(assemble_impl(s, d, false, true, false, true).B);
}
std::vector<double> assemble_load(const FiniteElementSpace& s, const ProblemData& d) {
  return std::move(assemble_impl(s, d, false, false, true, true).F);
}

AssembledSystem assemble_system(const FiniteElementSpace& s, const ProblemData& d) {
  AssembleOutput out = assemble_impl(s, d, true, true, true, true);
  return {std::move(out.K), std::move(out.B), std::move(out.F)};
}

CsrMatrix assemble_a_full(const FiniteElementSpace& s, const ProblemData& d) {
  return std::move(assemble_impl(s, d, true, false, false, false).K);
}
CsrMatrix assemble_b_full(const FiniteElementSpace& s, const ProblemData& d) {
  return std::move(assemble_impl(s, d, false, true, false, false).B);
}
std::vector<double> assemble_load_full(const FiniteElementSpace& s, const ProblemData& d) {
  return std::move(assemble_impl(s, d, false, false, true, false).F);
}

double energy_norm(const CsrMatrix& k, const std::vector<double>& v) {
  if (!k.symmetric) throw std::invalid_argument("energy_norm requires the symmetric principal-part matrix");
  return std::sqrt(std::max(0.0, quadratic_form(k, v, v)));
}

double energy_norm_diff(const CsrMatrix& k, const std::vector<double>& u, const std::vector<double>& w) {
  if (u.size() != w.size()) throw std::invalid_argument("energy_norm_diff: length mismatch");
  std::vector<double> diff(u.size());
  for (size_t i = 0; i < u.size(); ++i) diff[i] = u[i] - w[i];
  return energy_norm(k, diff);
}

double min_rayleigh_sampled(const CsrMatrix& b, const CsrMatrix& k, int samples, uint64_t seed) {
  if (k.rows == 0) throw std::invalid_argument("min_rayleigh_sampled: empty system");
  if (b.rows != k.rows) throw std::invalid_argument("min_rayleigh_sampled: dimension mismatch");
  Rng rng(seed);
  double best = std::numeric_limits<double>::infinity();
  std::vector<double> v(static_cast<size_t>(k.rows));
  for (int s = 0; s < samples; ++s) {
    for (auto& x : v) x = rng.next_normal();
    double kv = quadratic_form(k, v, v);
    if (kv <= 0.0) continue;
    best = std::min(best, quadratic_form(b, v, v) / kv);
  }
  return best;
}

}  // namespace afem
