// Timing table: serial reference kernels vs the OpenMP versions, plus a
// bitwise-equality check of the results (the parallel kernels are required to
// reproduce the serial reduction order exactly).

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

#include "afem/assembly.hpp"
#include "afem/estimator.hpp"
#include "afem/mesh.hpp"
#include "afem/problems.hpp"
#include "afem/rng.hpp"
#include "afem/space.hpp"
#include "afem/sparse.hpp"

using namespace afem;

namespace {

double now_s() {
  return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch()).count();
}

template <typename F>
double time_best(F&& f, int repeats) {
  double best = 1e300;
  for (int r = 0; r < repeats; ++r) {
    const double t0 = now_s();
    f();
    best = std::min(best, now_s() - t0);
  }
  return best;
}

void row(const char* name, long n, double ts, double tp, bool match) {
  std::printf("%-12s %10ld %12.3f %12.3f %8.2fx   %s\n", name, n, ts * 1e3, tp * 1e3,
              tp > 0 ? ts / tp : 0.0, match ? "bitwise-equal" : "MISMATCH");
}

}  // namespace

int main(int argc, char** argv) {
  const int rounds = argc > 1 ? std::atoi(argv[1]) : 6;
  const int repeats = argc > 2 ? std::atoi(argv[2]) : 3;

  BenchmarkProblem p = make_problem("lshape-dcr");
  Triangulation mesh = uniform_refine(p.mesh, rounds);
  FiniteElementSpace space = build_space(mesh, 2);
  std::printf("mesh: %d elements, space dim %d, %d repeats (best shown)\n", mesh.num_elements(),
              space.dim(), repeats);
  std::printf("%-12s %10s %12s %12s %9s\n", "kernel", "n", "serial ms", "omp ms", "speedup");

  // assembly
  set_kernel_backend(Backend::serial);
  AssembledSystem as = assemble_system(space, p.data);
  const double t_as = time_best([&] { as = assemble_system(space, p.data); }, repeats);
  set_kernel_backend(Backend::omp);
  AssembledSystem ap = assemble_system(space, p.data);
  const double t_ap = time_best([&] { ap = assemble_system(space, p.data); }, repeats);
  row("assemble", space.dim(), t_as, t_ap,
      as.K.val == ap.K.val && as.B.val == ap.B.val && as.F == ap.F);

  // estimator
  Rng rng(7);
  std::vector<double> u(static_cast<size_t>(space.dim()));
  for (double& v : u) v = rng.next_normal();
  set_kernel_backend(Backend::serial);
  IndicatorField is = estimate(space, p.data, u);
  const double t_es = time_best([&] { is = estimate(space, p.data, u); }, repeats);
  set_kernel_backend(Backend::omp);
  IndicatorField ip = estimate(space, p.data, u);
  const double t_ep = time_best([&] { ip = estimate(space, p.data, u); }, repeats);
  row("estimate", mesh.num_elements(), t_es, t_ep, is.sq == ip.sq && is.total_sq == ip.total_sq);

  // matvec
  std::vector<double> ys, yp(u.size());
  set_kernel_backend(Backend::serial);
  ys = matvec(ap.K, u);
  const double t_ms = time_best([&] { ys = matvec(ap.K, u); }, repeats * 10);
  set_kernel_backend(Backend::omp);
  yp = matvec(ap.K, u);
  const double t_mp = time_best([&] { yp = matvec(ap.K, u); }, repeats * 10);
  row("matvec", ap.K.nnz(), t_ms, t_mp, ys == yp);

  // dot
  double ds = 0, dp = 0;
  set_kernel_backend(Backend::serial);
  const double t_ds = time_best([&] { ds = dot(u, ys); }, repeats * 10);
  set_kernel_backend(Backend::omp);
  const double t_dp = time_best([&] { dp = dot(u, ys); }, repeats * 10);
  row("dot", static_cast<long>(u.size()), t_ds, t_dp, ds == dp);

  set_kernel_backend(Backend::omp);
  return 0;
}
