#include "afem/sparse.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <ostream>
#include <stdexcept>

#include "afem/util.hpp"

namespace afem {

namespace {

std::atomic<Backend> g_backend{
#ifdef _OPENMP
    Backend::omp
#else
    Backend::serial
#endif
};

constexpr size_t kDotBlock = 2048;

}  // namespace

Backend kernel_backend() { return g_backend.load(std::memory_order_relaxed); }
void set_kernel_backend(Backend b) { g_backend.store(b, std::memory_order_relaxed); }

void matvec(const CsrMatrix& a, const double* x, double* y) {
  const int n = a.rows;
  if (kernel_backend() == Backend::omp) {
    // Row results are independent and each row is summed in storage order, so
    // the output is bitwise identical for any thread count.
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (int r = 0; r < n; ++r) {
      double s = 0.0;
      for (int k = a.row_ptr[static_cast<size_t>(r)]; k < a.row_ptr[static_cast<size_t>(r) + 1]; ++k)
        s += a.val[static_cast<size_t>(k)] * x[a.col[static_cast<size_t>(k)]];
      y[r] = s;
    }
  } else {
    for (int r = 0; r < n; ++r) {
      double s = 0.0;
      for (int k = a.row_ptr[static_cast<size_t>(r)]; k < a.row_ptr[static_cast<size_t>(r) + 1]; ++k)
        s += a.val[static_cast<size_t>(k)] * x[a.col[static_cast<size_t>(k)]];
      y[r] = s;
    }
  }
}

std::vector<double> matvec(const CsrMatrix& a, const std::vector<double>& x) {
  if (static_cast<int>(x.size()) != a.cols)
    throw std::invalid_argument(strf("matvec: vector length %zu does not match %d columns", x.size(), a.cols));
  std::vector<double> y(static_cast<size_t>(a.rows), 0.0);
  matvec(a, x.data(), y.data());
  return y;
}

namespace {

// Fixed-blocking dot product: per-block partial sums (parallelizable) are
// combined in block order, so the value does not depend on the thread count.
double blocked_dot(const double* a, const double* b, size_t n) {
  size_t nblocks = (n + kDotBlock - 1) / kDotBlock;
  std::vector<double> partial(nblocks, 0.0);
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
  for (long blk = 0; blk < static_cast<long>(nblocks); ++blk) {
    size_t lo = static_cast<size_t>(blk) * kDotBlock;
    size_t hi = std::min(lo + kDotBlock, n);
    double s = 0.0;
    for (size_t i = lo; i < hi; ++i) s += a[i] * b[i];
    partial[static_cast<size_t>(blk)] = s;
  }
  double total = 0.0;
  for (double p : partial) total += p;
  return total;
}

}  // namespace

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw std::invalid_argument("dot: length mismatch");
  if (kernel_backend() == Backend::omp) return blocked_dot(a.data(), b.data(), a.size());
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(const std::vector<double>& a) { return std::sqrt(std::max(0.0, dot(a, a))); }

void axpy(double alpha, const std::vector<double>& x, std::vector<double>& y) {
  if (x.size() != y.size()) throw std::invalid_argument("axpy: length mismatch");
  const long n = static_cast<long>(x.size());
  if (kernel_backend() == Backend::omp) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (long i = 0; i < n; ++i) y[static_cast<size_t>(i)] += alpha * x[static_cast<size_t>(i)];
  } else {
    for (long i = 0; i < n; ++i) y[static_cast<size_t>(i)] += alpha * x[static_cast<size_t>(i)];
  }
}

CsrMatrix transpose(const CsrMatrix& a) {
  CsrMatrix t;
  t.rows = a.cols;
  t.cols = a.rows;
  t.symmetric = a.symmetric;
  t.row_ptr.assign(static_cast<size_t>(t.rows) + 1, 0);
  for (long k = 0; k < a.nnz(); ++k) ++t.row_ptr[static_cast<size_t>(a.col[static_cast<size_t>(k)]) + 1];
  for (int r = 0; r < t.rows; ++r) t.row_ptr[static_cast<size_t>(r) + 1] += t.row_ptr[static_cast<size_t>(r)];
  t.col.resize(a.col.size());
  t.val.resize(a.val.size());
  std::vector<int> cursor(t.row_ptr.begin(), t.row_ptr.end() - 1);
  for (int r = 0; r < a.rows; ++r)
    for (int k = a.row_ptr[static_cast<size_t>(r)]; k < a.row_ptr[static_cast<size_t>(r) + 1]; ++k) {
      int c = a.col[static_cast<size_t>(k)];
      int slot = cursor[static_cast<size_t>(c)]++;
      t.col[static_cast<size_t>(slot)] = r;
      t.val[static_cast<size_t>(slot)] = a.val[static_cast<size_t>(k)];
    }
  return t;
}

double quadratic_form(const CsrMatrix& a, const std::vector<double>& x, const std::vector<double>& y) {
  std::vector<double> ay = matvec(a, y);
  return dot(x, ay);
}

void write_matrix_market(std::ostream& os, const CsrMatrix& a) {
  os << "%%MatrixMarket matrix coordinate real general\n";
  os << a.rows << " " << a.cols << " " << a.nnz() << "\n";
  for (int r = 0; r < a.rows; ++r)
    for (int k = a.row_ptr[static_cast<size_t>(r)]; k < a.row_ptr[static_cast<size_t>(r) + 1]; ++k)
      os << strf("%d %d %.17g\n", r + 1, a.col[static_cast<size_t>(k)] + 1, a.val[static_cast<size_t>(k)]);
}

void write_matrix_market_file(const std::string& path, const CsrMatrix& a) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path);
  write_matrix_market(os, a);
}

}  // namespace afem
