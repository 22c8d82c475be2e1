#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace afem {

// Kernel backend selection. "omp" uses OpenMP with reductions arranged so the
// result is independent of the thread count (fixed per-row / per-block
// summation order); "serial" is the plain textbook reference kept for testing
// the parallel kernels against. The default is omp when compiled with OpenMP.
enum class Backend { serial, omp };
Backend kernel_backend();
void set_kernel_backend(Backend b);

struct CsrMatrix {
  int rows = 0, cols = 0;
  std::vector<int> row_ptr{0};
  std::vector<int> col;
  std::vector<double> val;
  bool symmetric = false;  // set by builders that guarantee exact symmetry

  long nnz() const { return static_cast<long>(col.size()); }
};

// y = A x
void matvec(const CsrMatrix& a, const double* x, double* y);
std::vector<double> matvec(const CsrMatrix& a, const std::vector<double>& x);

double dot(const std::vector<double>& a, const std::vector<double>& b);
double norm2(const std::vector<double>& a);
// y += alpha * x
void axpy(double alpha, const std::vector<double>& x, std::vector<double>& y);

CsrMatrix transpose(const CsrMatrix& a);

// x^T A y; for the stiffness matrix this is the energy inner product.
double quadratic_form(const CsrMatrix& a, const std::vector<double>& x, const std::vector<double>& y);

void write_matrix_market(std::ostream& os, const CsrMatrix& a);
void write_matrix_market_file(const std::string& path, const CsrMatrix& a);

}  // namespace afem
