#pragma once

#include <vector>

#include "afem/problem.hpp"
#include "afem/space.hpp"
#include "afem/sparse.hpp"

namespace afem {

// Dense local system of one element: the symmetric principal-part matrix
// (A grad phi_j . grad phi_i), the full nonsymmetric form adding convection
// and reaction, and the load (f phi_i + fvec . grad phi_i). Row-major,
// ndof_local^2 entries. Exposed so tests can check closed-form matrices.
struct ElementSystem {
  std::vector<double> a_mat;
  std::vector<double> b_mat;
  std::vector<double> load;
};

ElementSystem element_system(const FiniteElementSpace& s, const ProblemData& d, int e);

// Assembled operators over the free dofs (homogeneous Dirichlet elimination).
// The principal-part matrix is exactly symmetric by construction (local
// entries are mirrored), positive definiteness is verified where it is used.
CsrMatrix assemble_a(const FiniteElementSpace& s, const ProblemData& d);
CsrMatrix assemble_b(const FiniteElementSpace& s, const ProblemData& d);
std::vector<double> assemble_load(const FiniteElementSpace& s, const ProblemData& d);

// One element sweep filling all three at once (the driver path).
struct AssembledSystem {
  CsrMatrix K;  // a-form
  CsrMatrix B;  // b-form
  std::vector<double> F;
};
AssembledSystem assemble_system(const FiniteElementSpace& s, const ProblemData& d);

// Unconstrained variants over all dofs (no Dirichlet elimination); used by
// tests that need functions with nonzero boundary values.
CsrMatrix assemble_a_full(const FiniteElementSpace& s, const ProblemData& d);
CsrMatrix assemble_b_full(const FiniteElementSpace& s, const ProblemData& d);
std::vector<double> assemble_load_full(const FiniteElementSpace& s, const ProblemData& d);

// sqrt(v^T K v); K must be the (symmetric positive definite) a-form matrix.
double energy_norm(const CsrMatrix& k, const std::vector<double>& v);
// Energy norm of the difference u - w without forming it persistently.
double energy_norm_diff(const CsrMatrix& k, const std::vector<double>& u, const std::vector<double>& w);

// Smallest sampled Rayleigh quotient v^T B v / v^T K v over seeded random
// vectors; a positive value is the sampled ellipticity certificate of the
// nonsymmetric form with respect to the energy norm.
double min_rayleigh_sampled(const CsrMatrix& b, const CsrMatrix& k, int samples, uint64_t seed);

}  // namespace afem
