#pragma once

#include <memory>
#include <vector>

#include "afem/sparse.hpp"

namespace afem {

// Sparse direct solve x = A^{-1} b: LDLT when the matrix is flagged
// symmetric, LU otherwise. Empty systems (0 rows) solve trivially. Throws
// std::runtime_error when the factorization fails (singular matrix).
std::vector<double> solve_direct(const CsrMatrix& a, const std::vector<double>& b);

// Factorization kept for repeated solves against the same matrix.
class DirectFactor {
 public:
  explicit DirectFactor(const CsrMatrix& a);
  ~DirectFactor();
  DirectFactor(DirectFactor&&) noexcept;
  DirectFactor& operator=(DirectFactor&&) noexcept;

  std::vector<double> solve(const std::vector<double>& b) const;
  int rows() const { return rows_; }

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  int rows_ = 0;
};

}  // namespace afem
