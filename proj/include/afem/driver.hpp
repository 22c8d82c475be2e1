#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "afem/estimator.hpp"
#include "afem/hierarchy.hpp"
#include "afem/mesh.hpp"
#include "afem/problem.hpp"
#include "afem/space.hpp"
#include "afem/zarantonello.hpp"

namespace afem {

// Inputs of the adaptive run. Any satisfied stop rule ends the run regularly
// (exit-0 semantics); the safety caps abort it and are reported as failures.
struct AdaptiveConfig {
  int degree = 1;
  double theta = 0.5;       // marking parameter, (0, 1]
  double lambda_sym = 0.1;  // symmetrization stopping parameter
  double lambda_alg = 0.1;  // algebraic stopping parameter
  double delta = 0.5;       // symmetrization damping
  double c_mark = 1.0;      // accepted marking-cardinality slack (exact sorting realizes 1)

  // Stop rules. stop_dim: stop after finishing the first level whose dimension
  // exceeds it (0 disables). stop_tau: stop once the composite value
  // eta + |||u - u_prev_outer||| + |||u - u_prev_inner||| falls below it (0
  // keeps only the built-in roundoff floor, the tau = 0 reading). stop_steps:
  // stop after this many logged steps (0 disables).
  long stop_dim = 100000;
  double stop_tau = 0.0;
  long stop_steps = 0;

  // Safety caps on the inner loops; hitting one aborts the run.
  long j_cap = 10000;
  long k_cap = 10000;

  bool diagnostics = false;        // exact-solve oracles, contraction factors, quasi-error
  bool cache_coefficients = false; // reuse coefficient evaluations across estimates on a level
  bool time_direct = false;        // additionally time a direct solve of the nonsymmetric system per level
  int reference_rounds = 3;        // uniform refinements of the final mesh for the reference solve
  int rayleigh_samples = 200;      // sampling effort for the advisory damping estimate
  uint64_t seed = 1;

  SolverConfig solver;

  void validate() const;  // throws std::invalid_argument on out-of-range values
};

// One logged step (ell,k,j). Rows appear in computation order: the nested
// initial iterate of each level as (ell,0,0), then every solver step j >= 1.
// step is the 1-based rank; cost_cum sums the element counts of all rows so
// far (the solve-estimate work of the full history). diff_alg = |||u^{k,j} - u^{k,j-1}|||, diff_sym = |||u^{k,j} - u^{k-1,jbar}|||.
// case_label: mid_alg (j-loop continuing), post_alg (j-loop stopped), post_sym
// (k-loop stopped too), post_ref (fresh level), init (very first row).
struct RunRecord {
  int ell = 0, k = 0, j = 0;
  long step = 0;
  long nT = 0;
  long dim = 0;
  double eta = 0.0;
  double diff_alg = 0.0;
  double diff_sym = 0.0;
  double cost_cum = 0.0;
  double time_s = 0.0;
  double delta_quasi = -1.0;  // filled when diagnostics are enabled, else -1
  std::string case_label;
};

// Per-level summary; diagnostic fields are -1 when unavailable (diagnostics
// off, or no valid ratio sample on the level).
struct LevelStats {
  int ell = 0;
  long nT = 0;
  long dim = 0;
  int k_count = 0;         // number of symmetrization steps taken
  long solver_steps = 0;   // total algebraic steps on the level
  long marked = 0;         // elements marked at the end of the level (0 on the last)
  double eta_end = 0.0;    // estimator at the last iterate of the level
  double time_level_s = 0.0;
  double time_direct_s = -1.0;
  double q_alg = -1.0;        // max |||u^{k,*} - u^{k,j}||| / |||u^{k,*} - u^{k,j-1}|||
  double q_sym = -1.0;        // max |||u* - u^{k,*}||| / |||u* - u^{k-1,jbar}|||
  double qbar_sym = -1.0;     // max over k < kbar of |||u* - u^{k,jbar}||| / |||u* - u^{k-1,jbar}|||
  double lambda_bar_alg = -1.0;  // (1 - q_sym)(1 - q_alg) / (4 q_alg)
  double c_rel_prime = -1.0;     // max |||u_ref - u||| / reliable_bound over the level's rows
};

struct RunResult {
  std::vector<RunRecord> records;
  std::vector<LevelStats> levels;
  std::string status;  // dim_cap | tolerance | exact | max_steps | j_cap | k_cap
  bool stopped_by_rule = false;  // true for the first four statuses
  double c_mesh = -1.0;          // max over levels of (#T_l - #T_0) / (cumulative marked)
  double energy_final = 0.0;     // |||u||| of the final iterate
  FiniteElementSpace space;      // final level
  std::vector<double> u;         // final iterate (free coefficients)
  DeltaEstimate damping_info;    // sampled ellipticity/boundedness on the final level
  bool damping_info_valid = false;
};

// Minimal subset of elements whose squared indicators carry a theta fraction
// of the total; exact descending sort, ties broken by ascending element
// index. All-zero indicators give the empty set (the run is converged).
MarkedSet dorfler_mark(const IndicatorField& ind, double theta);

// Computable upper-bound combination (up to one unknown constant) matching
// the row's position in the loop structure; post_ref rows bound the error by
// the previous level's final estimator value, which the caller passes in.
double reliable_bound(const RunRecord& rec, double eta_prev_level_end);

// The adaptive loop: solve (symmetrization around an iterative algebraic
// solver), estimate, mark, refine, with nested iteration across levels. The
// sink, when given, receives each record as soon as it is logged (for
// streaming output; quasi-error values are completed only after the run).
using RecordSink = std::function<void(const RunRecord&)>;
RunResult run_adaptive(const Triangulation& mesh0, const ProblemData& data, const AdaptiveConfig& cfg,
                       const RecordSink& sink = {});

}  // namespace afem
