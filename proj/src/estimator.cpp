#include "afem/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "afem/quadrature.hpp"
#include "afem/sparse.hpp"
#include "afem/util.hpp"

namespace afem {

double IndicatorField::total() const { return std::sqrt(total_sq); }

namespace {

struct VolumeTables {
  int n = 0, nq = 0;
  std::vector<double> val;           // nq x n
  std::vector<Vec2> grad;            // nq x n
  std::vector<double> hxx, hxy, hyy; // nq x n
};

VolumeTables tabulate_volume(const ReferenceBasis& rb, const TriRule& rule) {
  VolumeTables t;
  t.n = rb.size();
  t.nq = static_cast<int>(rule.pts.size());
  size_t total = static_cast<size_t>(t.nq) * t.n;
  t.val.resize(total);
  t.grad.resize(total);
  t.hxx.resize(total);
  t.hxy.resize(total);
  t.hyy.resize(total);
  for (int q = 0; q < t.nq; ++q) {
    size_t off = static_cast<size_t>(q) * t.n;
    rb.values(rule.pts[static_cast<size_t>(q)], &t.val[off]);
    rb.gradients(rule.pts[static_cast<size_t>(q)], &t.grad[off]);
    rb.hessians(rule.pts[static_cast<size_t>(q)], &t.hxx[off], &t.hxy[off], &t.hyy[off]);
  }
  return t;
}

constexpr int kVolCacheStride = 11;  // A(4), div A(2), b(2), c, f, div fvec
constexpr int kEdgeCacheStride = 4;  // A

IndicatorField estimate_impl(const FiniteElementSpace& s, const ProblemData& d,
                             const std::vector<double>& u_full, EstimatorCache* cache) {
  if (static_cast<int>(u_full.size()) != s.num_dofs())
    throw std::invalid_argument(strf("estimate: expected %d dof values, got %zu", s.num_dofs(), u_full.size()));

  const ReferenceBasis& rb = ReferenceBasis::get(s.degree);
  const int n = rb.size();
  const int quad_degree = 2 * (s.degree + std::max(0, d.data_degree));
  TriRule vrule = tri_rule(quad_degree);
  LineRule erule = line_rule(quad_degree);
  VolumeTables tab = tabulate_volume(rb, vrule);
  const long ne = s.mesh.num_elements();
  const bool parallel = kernel_backend() == Backend::omp;

  if (cache && !cache->filled) {
    cache->vol.resize(static_cast<size_t>(ne) * tab.nq * kVolCacheStride);
    cache->edge.resize(static_cast<size_t>(s.edges.num_edges()) * erule.pts.size() * kEdgeCacheStride);
#ifdef _OPENMP
#pragma omp parallel for schedule(static) if (parallel)
#endif
    for (long e = 0; e < ne; ++e) {
      ElementMap map = s.map_of(e);
      for (int q = 0; q < tab.nq; ++q) {
        Vec2 x = map.to_physical(vrule.pts[static_cast<size_t>(q)]);
        double* c = &cache->vol[(static_cast<size_t>(e) * tab.nq + q) * kVolCacheStride];
        Mat2 A = d.A(x);
        Vec2 dA = d.div_A(x), bx = d.b(x);
        c[0] = A.a11; c[1] = A.a12; c[2] = A.a21; c[3] = A.a22;
        c[4] = dA.x; c[5] = dA.y; c[6] = bx.x; c[7] = bx.y;
        c[8] = d.c(x); c[9] = d.f(x); c[10] = d.div_fvec(x);
      }
    }
#ifdef _OPENMP
#pragma omp parallel for schedule(static) if (parallel)
#endif
    for (long k = 0; k < s.edges.num_edges(); ++k) {
      Vec2 a = s.mesh.vertices[static_cast<size_t>(s.edges.edges[static_cast<size_t>(k)][0])];
      Vec2 b = s.mesh.vertices[static_cast<size_t>(s.edges.edges[static_cast<size_t>(k)][1])];
      for (size_t q = 0; q < erule.pts.size(); ++q) {
        Mat2 A = d.A(a + erule.pts[q] * (b - a));
        double* c = &cache->edge[(static_cast<size_t>(k) * erule.pts.size() + q) * kEdgeCacheStride];
        c[0] = A.a11; c[1] = A.a12; c[2] = A.a21; c[3] = A.a22;
      }
    }
    cache->filled = true;
  }

  IndicatorField out;
  out.sq.assign(static_cast<size_t>(ne), 0.0);

  // Volume residual, one element per iteration.
#ifdef _OPENMP
#pragma omp parallel for schedule(static) if (parallel)
#endif
  for (long e = 0; e < ne; ++e) {
    ElementMap map = s.map_of(e);
    const int* ed = s.edofs(static_cast<int>(e));
    double acc = 0.0;
    for (int q = 0; q < tab.nq; ++q) {
      size_t off = static_cast<size_t>(q) * n;
      Vec2 x = map.to_physical(vrule.pts[static_cast<size_t>(q)]);
      double v = 0.0, vxx = 0.0, vxy = 0.0, vyy = 0.0;
      Vec2 g{0.0, 0.0};
      for (int i = 0; i < n; ++i) {
        double ui = u_full[static_cast<size_t>(ed[i])];
        if (ui == 0.0) continue;
        v += ui * tab.val[off + static_cast<size_t>(i)];
        Vec2 pg = map.grad_to_physical(tab.grad[off + static_cast<size_t>(i)]);
        g = g + ui * pg;
        double pxx, pxy, pyy;
        map.hessian_to_physical(tab.hxx[off + static_cast<size_t>(i)], tab.hxy[off + static_cast<size_t>(i)],
                                tab.hyy[off + static_cast<size_t>(i)], pxx, pxy, pyy);
        vxx += ui * pxx;
        vxy += ui * pxy;
        vyy += ui * pyy;
      }
      Mat2 A;
      Vec2 dA, bx;
      double cx, fx, dfv;
      if (cache) {
        const double* c = &cache->vol[(static_cast<size_t>(e) * tab.nq + q) * kVolCacheStride];
        A = {c[0], c[1], c[2], c[3]};
        dA = {c[4], c[5]};
        bx = {c[6], c[7]};
        cx = c[8]; fx = c[9]; dfv = c[10];
      } else {
        A = d.A(x);
        dA = d.div_A(x);
        bx = d.b(x);
        cx = d.c(x); fx = d.f(x); dfv = d.div_fvec(x);
      }
      double div_Agrad = dot(dA, g) + A.a11 * vxx + (A.a12 + A.a21) * vxy + A.a22 * vyy;
      double r = fx + div_Agrad - dfv - dot(bx, g) - cx * v;
      acc += vrule.wts[static_cast<size_t>(q)] * r * r;
    }
    double h = s.mesh.diameter(static_cast<int>(e));
    out.sq[static_cast<size_t>(e)] = h * h * std::abs(map.det) * acc;
  }

  // Normal-flux jumps, one interior edge per iteration; boundary edges carry
  // the essential condition and do not contribute.
  const long nedges = s.edges.num_edges();
  std::vector<double> edge_sq(static_cast<size_t>(nedges), 0.0);
#ifdef _OPENMP
#pragma omp parallel for schedule(static) if (parallel)
#endif
  for (long k = 0; k < nedges; ++k) {
    int e0 = s.edges.adjacent[static_cast<size_t>(k)][0];
    int e1 = s.edges.adjacent[static_cast<size_t>(k)][1];
    if (e0 < 0 || e1 < 0) continue;
    Vec2 a = s.mesh.vertices[static_cast<size_t>(s.edges.edges[static_cast<size_t>(k)][0])];
    Vec2 b = s.mesh.vertices[static_cast<size_t>(s.edges.edges[static_cast<size_t>(k)][1])];
    Vec2 tangent = b - a;
    double len = norm(tangent);
    Vec2 nrm{tangent.y / len, -tangent.x / len};
    ElementMap m0 = s.map_of(e0), m1 = s.map_of(e1);
    const int* ed0 = s.edofs(e0);
    const int* ed1 = s.edofs(e1);
    std::vector<Vec2> gref(static_cast<size_t>(n));
    double acc = 0.0;
    for (size_t q = 0; q < erule.pts.size(); ++q) {
      Vec2 x = a + erule.pts[q] * tangent;
      Mat2 A;
      if (cache) {
        const double* c = &cache->edge[(static_cast<size_t>(k) * erule.pts.size() + q) * kEdgeCacheStride];
        A = {c[0], c[1], c[2], c[3]};
      } else {
        A = d.A(x);
      }
      Vec2 g[2] = {{0.0, 0.0}, {0.0, 0.0}};
      for (int side = 0; side < 2; ++side) {
        const ElementMap& map = side == 0 ? m0 : m1;
        const int* ed = side == 0 ? ed0 : ed1;
        rb.gradients(map.to_reference(x), gref.data());
        for (int i = 0; i < n; ++i) {
          double ui = u_full[static_cast<size_t>(ed[i])];
          if (ui == 0.0) continue;
          g[side] = g[side] + ui * map.grad_to_physical(gref[static_cast<size_t>(i)]);
        }
      }
      // fvec is single-valued pointwise, so it cancels in the difference.
      Vec2 flux_jump = apply(A, g[0] - g[1]);
      double j = dot(flux_jump, nrm);
      acc += erule.wts[q] * j * j;
    }
    edge_sq[static_cast<size_t>(k)] = len * acc;
  }

  for (long e = 0; e < ne; ++e) {
    double h = s.mesh.diameter(static_cast<int>(e));
    for (int le = 0; le < 3; ++le) {
      int k = s.edges.element_edges[static_cast<size_t>(e)][static_cast<size_t>(le)];
      out.sq[static_cast<size_t>(e)] += h * edge_sq[static_cast<size_t>(k)];
    }
  }

  out.total_sq = 0.0;
  for (long e = 0; e < ne; ++e) out.total_sq += out.sq[static_cast<size_t>(e)];
  return out;
}

}  // namespace

IndicatorField estimate_full(const FiniteElementSpace& s, const ProblemData& d,
                             const std::vector<double>& u_full, EstimatorCache* cache) {
  return estimate_impl(s, d, u_full, cache);
}

IndicatorField estimate(const FiniteElementSpace& s, const ProblemData& d, const std::vector<double>& u_free,
                        EstimatorCache* cache) {
  return estimate_impl(s, d, expand_free(s, u_free), cache);
}

double restrict_total(const IndicatorField& ind, const MarkedSet& subset) {
  double sum = 0.0;
  for (int idx : subset.indices) {
    if (idx < 0 || idx >= static_cast<int>(ind.sq.size()))
      throw std::invalid_argument(strf("restrict_total: element %d out of range", idx));
    sum += ind.sq[static_cast<size_t>(idx)];
  }
  return std::sqrt(sum);
}

void write_indicators_csv(const std::string& path, const FiniteElementSpace& s, const IndicatorField& ind) {
  if (ind.sq.size() != static_cast<size_t>(s.mesh.num_elements()))
    throw std::invalid_argument("write_indicators_csv: indicator/mesh size mismatch");
  std::string text = "element,x,y,h,eta_sq\n";
  for (int e = 0; e < s.mesh.num_elements(); ++e) {
    const auto& t = s.mesh.elements[static_cast<size_t>(e)];
    Vec2 c = (1.0 / 3.0) * (s.mesh.vertices[static_cast<size_t>(t[0])] +
                            s.mesh.vertices[static_cast<size_t>(t[1])] +
                            s.mesh.vertices[static_cast<size_t>(t[2])]);
    text += strf("%d,%.17g,%.17g,%.17g,%.17g\n", e, c.x, c.y, s.mesh.diameter(e), ind.sq[static_cast<size_t>(e)]);
  }
  write_text_file(path, text);
}

}  // namespace afem
