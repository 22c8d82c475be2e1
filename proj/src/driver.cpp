#include "afem/driver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <memory>
#include <numeric>
#include <stdexcept>
#include <utility>

#include "afem/assembly.hpp"
#include "afem/direct.hpp"
#include "afem/sparse.hpp"
#include "afem/util.hpp"

namespace afem {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

}  // namespace

void AdaptiveConfig::validate() const {
  if (degree < 1 || degree > 6)
    throw std::invalid_argument(strf("config: degree = %d outside [1, 6]", degree));
  if (!(theta > 0.0) || theta > 1.0)
    throw std::invalid_argument(strf("config: theta = %g outside (0, 1]", theta));
  if (!(lambda_sym > 0.0))
    throw std::invalid_argument(strf("config: lambda_sym = %g must be positive", lambda_sym));
  if (!(lambda_alg > 0.0))
    throw std::invalid_argument(strf("config: lambda_alg = %g must be positive", lambda_alg));
  if (!(delta > 0.0)) throw std::invalid_argument(strf("config: delta = %g must be positive", delta));
  if (!(c_mark >= 1.0))
    throw std::invalid_argument(strf("config: c_mark = %g must be at least 1", c_mark));
  if (stop_dim < 0 || stop_tau < 0.0 || stop_steps < 0)
    throw std::invalid_argument("config: stop rules must be nonnegative (0 disables)");
  if (stop_dim == 0 && stop_tau == 0.0 && stop_steps == 0)
    throw std::invalid_argument(
        "config: no stop rule active; set one of stop_dim, stop_tau, stop_steps");
  if (j_cap < 1 || k_cap < 1) throw std::invalid_argument("config: j_cap and k_cap must be at least 1");
  if (reference_rounds < 0 || reference_rounds > 8)
    throw std::invalid_argument(strf("config: reference_rounds = %d outside [0, 8]", reference_rounds));
  if (rayleigh_samples < 10)
    throw std::invalid_argument(strf("config: rayleigh_samples = %d below 10", rayleigh_samples));
  solver.validate();
}

MarkedSet dorfler_mark(const IndicatorField& ind, double theta) {
  if (!(theta > 0.0) || theta > 1.0)
    throw std::invalid_argument(strf("dorfler_mark: theta = %g outside (0, 1]", theta));
  const int n = static_cast<int>(ind.sq.size());
  std::vector<int> order(static_cast<size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    double sa = ind.sq[static_cast<size_t>(a)], sb = ind.sq[static_cast<size_t>(b)];
    if (sa != sb) return sa > sb;
    return a < b;
  });
  const double target = theta * ind.total_sq;
  std::vector<int> chosen;
  double acc = 0.0;
  for (int idx : order) {
    if (acc >= target) break;
    if (!(ind.sq[static_cast<size_t>(idx)] > 0.0)) break;  // zeros cannot add mass
    chosen.push_back(idx);
    acc += ind.sq[static_cast<size_t>(idx)];
  }
  std::sort(chosen.begin(), chosen.end());
  return MarkedSet::of(std::move(chosen), n);
}

double reliable_bound(const RunRecord& rec, double eta_prev_level_end) {
  if (rec.case_label == "mid_alg") return rec.eta + rec.diff_sym + rec.diff_alg;
  if (rec.case_label == "post_alg") return rec.eta + rec.diff_sym;
  if (rec.case_label == "post_sym" || rec.case_label == "init") return rec.eta;
  if (rec.case_label == "post_ref") return eta_prev_level_end;
  throw std::invalid_argument("reliable_bound: unknown case label '" + rec.case_label + "'");
}

RunResult run_adaptive(const Triangulation& mesh0, const ProblemData& data, const AdaptiveConfig& cfg,
                       const RecordSink& sink) {
  cfg.validate();
  {
    auto viol = validate(mesh0);
    if (!viol.empty())
      throw std::invalid_argument("run_adaptive: initial mesh invalid (" + viol[0].invariant +
                                  "): " + viol[0].detail);
  }

  const auto t0 = Clock::now();
  double oracle_seconds = 0.0;  // direct-solve work excluded from the iterative timing

  RunResult res;
  const bool diag = cfg.diagnostics;

  // Level state, rolled forward through refinement.
  FiniteElementSpace space = build_space(mesh0, cfg.degree);
  AssembledSystem sys = assemble_system(space, data);
  MultilevelHierarchy hier(cfg.solver);
  hier.push_level(space, sys.K, CsrMatrix{});
  IterativeSolver solver(&hier);
  std::vector<double> u(static_cast<size_t>(space.dim()), 0.0);

  EstimatorCache cache;
  EstimatorCache* cache_p = cfg.cache_coefficients ? &cache : nullptr;

  long step = 0;
  double cost = 0.0;
  long total_marked = 0;
  const long n_initial = mesh0.num_elements();
  std::string status;

  // Diagnostics state.
  std::vector<CsrMatrix> level_P;                // level_P[l] maps level l onto level l+1
  std::vector<std::vector<double>> iterates;     // per record
  std::vector<double> alg_terms;                 // per record: |||u^{k,*} - u^{k,j}|||
  std::unique_ptr<DirectFactor> kfac;            // per level, LDLT of K
  std::vector<double> u_star;                    // per level, direct solve of B u = F

  auto append = [&](int ell, int k, int j, double eta, double da, double ds, const char* label,
                    const std::vector<double>* ukstar) {
    RunRecord r;
    r.ell = ell;
    r.k = k;
    r.j = j;
    r.step = ++step;
    r.nT = space.mesh.num_elements();
    r.dim = space.dim();
    r.eta = eta;
    r.diff_alg = da;
    r.diff_sym = ds;
    cost += static_cast<double>(r.nT);
    r.cost_cum = cost;
    r.time_s = seconds_since(t0) - oracle_seconds;
    r.case_label = label;
    res.records.push_back(std::move(r));
    if (diag) {
      iterates.push_back(u);
      alg_terms.push_back(ukstar && ukstar->size() == u.size() && !u.empty()
                              ? energy_norm_diff(sys.K, *ukstar, u)
                              : 0.0);
    }
    if (sink) sink(res.records.back());
  };

  // Any stop rule that can fire after a logged row, strongest first. The
  // roundoff floor realizes the tau = 0 reading: all three terms vanished, so
  // the iterate is the exact discrete solution and the estimator is zero.
  auto stop_after_row = [&](double eta, double da, double ds) -> std::string {
    const double composite = eta + da + ds;
    const double floor = 1e-12 * std::max(1.0, u.empty() ? 0.0 : energy_norm(sys.K, u));
    if (composite <= floor) return "exact";
    if (cfg.stop_tau > 0.0 && composite <= cfg.stop_tau) return "tolerance";
    if (cfg.stop_steps > 0 && step >= cfg.stop_steps) return "max_steps";
    return {};
  };

  while (true) {
    const int ell = static_cast<int>(res.levels.size());
    LevelStats ls;
    ls.ell = ell;
    ls.nT = space.mesh.num_elements();
    ls.dim = space.dim();
    const double level_t0 = seconds_since(t0) - oracle_seconds;
    const bool final_level = cfg.stop_dim > 0 && ls.dim > cfg.stop_dim;

    // Oracles of the level.
    if (diag) {
      const double s0 = seconds_since(t0);
      kfac = std::make_unique<DirectFactor>(sys.K);
      oracle_seconds += seconds_since(t0) - s0;
    }
    if (diag || cfg.time_direct) {
      const double s0 = seconds_since(t0);
      u_star = solve_direct(sys.B, sys.F);
      ls.time_direct_s = seconds_since(t0) - s0;
      oracle_seconds += ls.time_direct_s;
    }
    const double ustar_scale = diag && !u_star.empty() ? std::max(1.0, energy_norm(sys.K, u_star)) : 1.0;
    const double ratio_floor = 1e-13 * ustar_scale;

    IndicatorField ind = estimate(space, data, u, cache_p);
    double eta = ind.total();
    append(ell, 0, 0, eta, 0.0, 0.0, ell == 0 ? "init" : "post_ref", nullptr);
    status = stop_after_row(eta, 0.0, 0.0);

    std::vector<double> qsym_ratios, qbar_ratios;
    double qalg_max = -1.0;

    if (status.empty()) {
      for (long k = 1;; ++k) {
        if (k > cfg.k_cap) {
          status = "k_cap";
          break;
        }
        const std::vector<double> u_prev = u;
        ZarantonelloStep zs;
        zs.delta = cfg.delta;
        zs.K = &sys.K;
        zs.B = &sys.B;
        zs.F = &sys.F;
        solver.set_rhs(zs.rhs(u_prev));

        std::vector<double> u_kstar;
        double prev_dist = 0.0;
        if (diag) {
          const double s0 = seconds_since(t0);
          u_kstar = kfac->solve(solver.rhs());
          oracle_seconds += seconds_since(t0) - s0;
          prev_dist = u.empty() ? 0.0 : energy_norm_diff(sys.K, u_star, u_prev);
          if (prev_dist > ratio_floor)
            qsym_ratios.push_back(energy_norm_diff(sys.K, u_star, u_kstar) / prev_dist);
        }

        bool k_done = false;
        for (long j = 1;; ++j) {
          if (j > cfg.j_cap) {
            status = "j_cap";
            break;
          }
          std::vector<double> u_new = solver.step(u);
          const double diff_alg = u.empty() ? 0.0 : energy_norm_diff(sys.K, u_new, u);
          if (diag && !u.empty()) {
            const double den = energy_norm_diff(sys.K, u_kstar, u);
            if (den > ratio_floor)
              qalg_max = std::max(qalg_max, energy_norm_diff(sys.K, u_kstar, u_new) / den);
          }
          u = std::move(u_new);
          ind = estimate(space, data, u, cache_p);
          eta = ind.total();
          const double diff_sym = u.empty() ? 0.0 : energy_norm_diff(sys.K, u, u_prev);
          const bool stop_j = diff_alg <= cfg.lambda_alg * (cfg.lambda_sym * eta + diff_sym);
          const bool stop_k = stop_j && diff_sym <= cfg.lambda_sym * eta;
          append(ell, static_cast<int>(k), static_cast<int>(j), eta, diff_alg, diff_sym,
                 !stop_j ? "mid_alg" : (stop_k ? "post_sym" : "post_alg"), diag ? &u_kstar : nullptr);
          ls.solver_steps += 1;
          status = stop_after_row(eta, diff_alg, diff_sym);
          if (!status.empty()) break;
          if (stop_j) {
            k_done = stop_k;
            break;
          }
        }
        ls.k_count = static_cast<int>(k);
        if (diag && prev_dist > ratio_floor)
          qbar_ratios.push_back(energy_norm_diff(sys.K, u_star, u) / prev_dist);
        if (!status.empty()) break;
        if (k_done) break;
      }
    }

    // Level summary.
    ls.eta_end = eta;
    ls.time_level_s = (seconds_since(t0) - oracle_seconds) - level_t0;
    if (diag) {
      ls.q_alg = qalg_max;
      if (!qsym_ratios.empty()) ls.q_sym = *std::max_element(qsym_ratios.begin(), qsym_ratios.end());
      // The final symmetrization step satisfied its stopping criterion; the
      // uniform contraction statement covers the steps before it.
      if (status.empty() && !qbar_ratios.empty()) qbar_ratios.pop_back();
      if (!qbar_ratios.empty())
        ls.qbar_sym = *std::max_element(qbar_ratios.begin(), qbar_ratios.end());
      if (ls.q_sym >= 0.0 && ls.q_alg > 0.0 && ls.q_sym < 1.0 && ls.q_alg < 1.0)
        ls.lambda_bar_alg = (1.0 - ls.q_sym) * (1.0 - ls.q_alg) / (4.0 * ls.q_alg);
    }

    bool do_refine = false;
    MarkedSet marked;
    if (status.empty()) {
      if (final_level) {
        status = "dim_cap";
      } else {
        marked = dorfler_mark(ind, cfg.theta);
        if (marked.size() == 0) {
          status = "exact";  // every indicator vanished
        } else {
          ls.marked = marked.size();
          do_refine = true;
        }
      }
    }
    res.levels.push_back(ls);
    if (!do_refine) break;

    // Refine and carry the iterate over (nested iteration).
    total_marked += marked.size();
    Triangulation fine_mesh = refine(space.mesh, marked);
    res.c_mesh = std::max(
        res.c_mesh, static_cast<double>(fine_mesh.num_elements() - n_initial) /
                        static_cast<double>(total_marked));
    FiniteElementSpace fine_space = build_space(fine_mesh, cfg.degree);
    CsrMatrix P = prolongation_matrix(space, fine_space);
    std::vector<double> u_fine = matvec(P, u);
    AssembledSystem fine_sys = assemble_system(fine_space, data);
    if (diag) level_P.push_back(P);
    hier.push_level(fine_space, fine_sys.K, std::move(P));
    space = std::move(fine_space);
    sys = std::move(fine_sys);
    u = std::move(u_fine);
    solver = IterativeSolver(&hier);
    cache = EstimatorCache{};
  }

  res.status = status;
  res.stopped_by_rule = status == "dim_cap" || status == "tolerance" || status == "exact" ||
                        status == "max_steps";

  // Quasi-error completion against a reference solve on uniform refinements
  // of the final mesh.
  if (diag && !res.records.empty()) {
    FiniteElementSpace ref_space = space;
    std::vector<CsrMatrix> ref_P;
    for (int r = 0; r < cfg.reference_rounds; ++r) {
      Triangulation next = uniform_refine(ref_space.mesh, 1);
      FiniteElementSpace next_space = build_space(next, cfg.degree);
      ref_P.push_back(prolongation_matrix(ref_space, next_space));
      ref_space = std::move(next_space);
    }
    AssembledSystem ref_sys = assemble_system(ref_space, data);
    std::vector<double> u_ref = solve_direct(ref_sys.B, ref_sys.F);

    const int num_levels = static_cast<int>(res.levels.size());
    for (size_t i = 0; i < res.records.size(); ++i) {
      RunRecord& rec = res.records[i];
      std::vector<double> v = iterates[i];
      for (int l = rec.ell; l < num_levels - 1; ++l) v = matvec(level_P[static_cast<size_t>(l)], v);
      for (const CsrMatrix& p : ref_P) v = matvec(p, v);
      const double err = energy_norm_diff(ref_sys.K, u_ref, v);
      rec.delta_quasi = err + alg_terms[i] + rec.eta;
      const double eta_prev =
          rec.ell > 0 ? res.levels[static_cast<size_t>(rec.ell) - 1].eta_end : rec.eta;
      const double bound = reliable_bound(rec, eta_prev);
      if (bound > 1e-14 * std::max(1.0, energy_norm(ref_sys.K, u_ref))) {
        LevelStats& lref = res.levels[static_cast<size_t>(rec.ell)];
        lref.c_rel_prime = std::max(lref.c_rel_prime, err / bound);
      }
    }
  }

  if (space.dim() > 0)
    res.damping_info_valid = true;
  if (res.damping_info_valid)
    res.damping_info = estimate_delta(sys.K, sys.B, cfg.delta, cfg.rayleigh_samples, cfg.seed);
  res.energy_final = u.empty() ? 0.0 : energy_norm(sys.K, u);
  res.space = std::move(space);
  res.u = std::move(u);
  return res;
}

}  // namespace afem
