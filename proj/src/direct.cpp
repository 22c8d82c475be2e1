#include "afem/direct.hpp"

#include <stdexcept>

#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

#include "afem/util.hpp"

namespace afem {

namespace {

using SpMat = Eigen::SparseMatrix<double>;

SpMat to_eigen(const CsrMatrix& a) {
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<size_t>(a.nnz()));
  for (int r = 0; r < a.rows; ++r)
    for (int k = a.row_ptr[static_cast<size_t>(r)]; k < a.row_ptr[static_cast<size_t>(r) + 1]; ++k)
      trip.emplace_back(r, a.col[static_cast<size_t>(k)], a.val[static_cast<size_t>(k)]);
  SpMat m(a.rows, a.cols);
  m.setFromTriplets(trip.begin(), trip.end());
  m.makeCompressed();
  return m;
}

}  // namespace

struct DirectFactor::Impl {
  std::unique_ptr<Eigen::SimplicialLDLT<SpMat>> ldlt;
  std::unique_ptr<Eigen::SparseLU<SpMat>> lu;
};

DirectFactor::DirectFactor(const CsrMatrix& a) : rows_(a.rows) {
  if (a.rows != a.cols) throw std::invalid_argument(strf("direct solve needs a square matrix, got %dx%d", a.rows, a.cols));
  if (a.rows == 0) return;
  impl_ = std::make_unique<Impl>();
  SpMat m = to_eigen(a);
  if (a.symmetric) {
    impl_->ldlt = std::make_unique<Eigen::SimplicialLDLT<SpMat>>(m);
    if (impl_->ldlt->info() != Eigen::Success)
      throw std::runtime_error("direct factorization (LDLT) failed: matrix is singular or not definite");
  } else {
    impl_->lu = std::make_unique<Eigen::SparseLU<SpMat>>();
    impl_->lu->analyzePattern(m);
    impl_->lu->factorize(m);
    if (impl_->lu->info() != Eigen::Success)
      throw std::runtime_error("direct factorization (LU) failed: matrix is singular");
  }
}

DirectFactor::~DirectFactor() = default;
DirectFactor::DirectFactor(DirectFactor&&) noexcept = default;
DirectFactor& DirectFactor::operator=(DirectFactor&&) noexcept = default;

std::vector<double> DirectFactor::solve(const std::vector<double>& b) const {
  if (static_cast<int>(b.size()) != rows_)
    throw std::invalid_argument(strf("direct solve: matrix has %d rows but rhs has %zu", rows_, b.size()));
  if (rows_ == 0) return {};
  Eigen::Map<const Eigen::VectorXd> rhs(b.data(), rows_);
  Eigen::VectorXd x;
  if (impl_->ldlt) {
    x = impl_->ldlt->solve(rhs);
    if (impl_->ldlt->info() != Eigen::Success) throw std::runtime_error("direct solve (LDLT) failed");
  } else {
    x = impl_->lu->solve(rhs);
    if (impl_->lu->info() != Eigen::Success) throw std::runtime_error("direct solve (LU) failed");
  }
  return std::vector<double>(x.data(), x.data() + rows_);
}

std::vector<double> solve_direct(const CsrMatrix& a, const std::vector<double>& b) {
  return DirectFactor(a).solve(b);
}

}  // namespace afem
