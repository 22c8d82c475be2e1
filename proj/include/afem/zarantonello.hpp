#pragma once

#include <cstdint>
#include <vector>

#include "afem/direct.hpp"
#include "afem/sparse.hpp"

namespace afem {

// One symmetrization step for the nonsymmetric system B u = F: the next
// iterate solves K u_next = K u + delta (F - B u), i.e. the defect of the
// full problem is corrected through the symmetric energy operator K. For
// suitable damping delta the map u -> u_next contracts in the energy norm,
// which is what turns one nonsymmetric solve into a sequence of symmetric
// ones handled by the multilevel solver.
struct ZarantonelloStep {
  double delta = 0.5;
  const CsrMatrix* K = nullptr;
  const CsrMatrix* B = nullptr;
  const std::vector<double>* F = nullptr;

  // K u + delta (F - B u)
  std::vector<double> rhs(const std::vector<double>& u) const;
};

// Exact evaluation of the step map through a kept factorization of K.
std::vector<double> exact_map(const DirectFactor& k_factor, const ZarantonelloStep& step,
                              const std::vector<double>& u);

// Sampled bounds for choosing delta: alpha is the smallest observed Rayleigh
// quotient u^T B u / u^T K u, L the largest observed |u^T B w| / (|u| |w|)
// in the energy norm (including the pairs w = u, so a symmetric B reports
// L >= 1 and delta_star = alpha / L^2 recovers the exact one-step value 1).
// q_bound = sqrt(max(0, 1 - delta (2 alpha - delta L^2))) estimates the
// per-step contraction of the exact map at the given delta.
struct DeltaEstimate {
  double alpha = 0.0;
  double L = 0.0;
  double delta_star = 0.0;
  double q_bound = 0.0;
};
DeltaEstimate estimate_delta(const CsrMatrix& k, const CsrMatrix& b, double delta, int samples, uint64_t seed);

}  // namespace afem
