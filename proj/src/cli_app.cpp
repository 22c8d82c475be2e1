#include "afem/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "afem/driver.hpp"
#include "afem/fit.hpp"
#include "afem/problems.hpp"
#include "afem/svg.hpp"
#include "afem/util.hpp"

namespace fs = std::filesystem;

namespace afem {

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitConfig = 2;
constexpr int kExitAborted = 3;

// Config-file reader that folds INI sections back into the dotted option
// names used on the command line, so "[solver] kind = x" and a literal
// "solver.kind = x" both feed --solver.kind. Section open/close markers are
// dropped; they only matter for subcommand-structured applications.
struct FlatSectionConfig : CLI::ConfigINI {
  std::vector<CLI::ConfigItem> from_config(std::istream& is) const override {
    std::vector<CLI::ConfigItem> flat;
    for (CLI::ConfigItem& item : CLI::ConfigINI::from_config(is)) {
      if (item.name == "++" || item.name == "--") continue;
      if (!item.parents.empty()) {
        std::string joined;
        for (const std::string& p : item.parents) joined += p + ".";
        item.name = joined + item.name;
        item.parents.clear();
      }
      flat.push_back(std::move(item));
    }
    return flat;
  }
};

struct CliOptions {
  std::string problem = "lshape-dcr";
  std::string out = "out";
  std::string backend = "omp";
  bool save_meshes = false;
  AdaptiveConfig cfg;

  // param-study grid (the defaults mirror the shipped study)
  std::vector<double> thetas{0.1, 0.3, 0.5, 0.7, 0.9};
  std::vector<double> lambda_syms{1e-1, 1e-2, 1e-3, 1e-4};
  double study_tol = 1e-3;

  // mesh-info target
  std::string mesh;
};

std::string fmt_opt(double v) { return v < 0.0 ? std::string() : strf("%.17g", v); }

std::string record_row(const RunRecord& r) {
  return strf("%d,%d,%d,%ld,%ld,%ld,%.17g,%.17g,%.17g,%.17g,%.17g,%s,%s", r.ell, r.k, r.j, r.step,
              r.nT, r.dim, r.eta, r.diff_alg, r.diff_sym, r.cost_cum, r.time_s,
              fmt_opt(r.delta_quasi).c_str(), r.case_label.c_str());
}

const char* kRunlogHeader = "ell,k,j,step,nT,dim,eta,diff_alg,diff_sym,cost_cum,time_s,delta_quasi,case";

void write_runlog(const std::string& path, const std::vector<RunRecord>& records) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open '" + path + "' for writing");
  os << kRunlogHeader << '\n';
  for (const auto& r : records) os << record_row(r) << '\n';
  if (!os) throw std::runtime_error("writing '" + path + "' failed");
}

void write_levels_csv(const std::string& path, const RunResult& res) {
  std::vector<const RunRecord*> last(res.levels.size(), nullptr);
  for (const auto& r : res.records) last[static_cast<size_t>(r.ell)] = &r;
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open '" + path + "' for writing");
  os << "ell,nT,dim,k_count,solver_steps,marked,eta_end,cost_end,time_level_s,time_direct_s,"
        "q_alg,q_sym,qbar_sym,lambda_bar_alg,c_rel_prime\n";
  for (size_t l = 0; l < res.levels.size(); ++l) {
    const LevelStats& s = res.levels[l];
    const double cost_end = last[l] ? last[l]->cost_cum : 0.0;
    os << strf("%d,%ld,%ld,%d,%ld,%ld,%.17g,%.17g,%.17g,%s,%s,%s,%s,%s,%s\n", s.ell, s.nT, s.dim,
               s.k_count, s.solver_steps, s.marked, s.eta_end, cost_end, s.time_level_s,
               fmt_opt(s.time_direct_s).c_str(), fmt_opt(s.q_alg).c_str(), fmt_opt(s.q_sym).c_str(),
               fmt_opt(s.qbar_sym).c_str(), fmt_opt(s.lambda_bar_alg).c_str(),
               fmt_opt(s.c_rel_prime).c_str());
  }
}

// Level-end view: (nT, dim, cost_cum, eta) of the last logged row per level.
struct LevelEnds {
  std::vector<double> nT, dim, cost, eta;
};

LevelEnds level_ends(const RunResult& res) {
  std::vector<const RunRecord*> last(res.levels.size(), nullptr);
  for (const auto& r : res.records) last[static_cast<size_t>(r.ell)] = &r;
  LevelEnds e;
  for (const RunRecord* r : last) {
    if (!r) continue;
    e.nT.push_back(static_cast<double>(r->nT));
    e.dim.push_back(static_cast<double>(r->dim));
    e.cost.push_back(r->cost_cum);
    e.eta.push_back(r->eta);
  }
  return e;
}

void echo_config(std::ostream& os, const CliOptions& o) {
  const AdaptiveConfig& c = o.cfg;
  os << "problem: " << o.problem << "\n";
  os << strf("degree: %d\n", c.degree);
  os << strf("theta: %g   lambda_sym: %g   lambda_alg: %g   delta: %g   c_mark: %g\n", c.theta,
             c.lambda_sym, c.lambda_alg, c.delta, c.c_mark);
  os << strf("stop rules: dim > %ld%s%s\n", c.stop_dim,
             c.stop_tau > 0 ? strf(" | composite <= %g", c.stop_tau).c_str() : "",
             c.stop_steps > 0 ? strf(" | steps >= %ld", c.stop_steps).c_str() : "");
  os << strf("solver: %s (%s smoother, coarse cap %d, q cap %g)\n", c.solver.kind.c_str(),
             c.solver.smoother.c_str(), c.solver.coarse_cap, c.solver.q_cap);
  os << strf("caps: j <= %ld, k <= %ld\n", c.j_cap, c.k_cap);
  os << strf("diagnostics: %s   coefficient cache: %s   seed: %llu   backend: %s\n",
             c.diagnostics ? "on" : "off", c.cache_coefficients ? "on" : "off",
             static_cast<unsigned long long>(c.seed), o.backend.c_str());
}

void write_damping_report(std::ostream& os, const RunResult& res, double delta) {
  if (!res.damping_info_valid) {
    os << "damping estimate: unavailable (empty final space)\n";
    return;
  }
  const DeltaEstimate& d = res.damping_info;
  os << strf(
      "damping estimate (sampled on the final level): alpha=%.4g  L=%.4g  "
      "delta_star=%.4g  q_bound(delta=%g)=%.4g\n",
      d.alpha, d.L, d.delta_star, delta, d.q_bound);
  if (delta >= 2.0 * d.delta_star)
    os << strf(
        "WARNING: delta = %g is at least twice the sampled delta_star = %.4g; "
        "the symmetrization loop may contract slowly or diverge\n",
        delta, d.delta_star);
}

// Runs the adaptive loop for the given options, streaming the log to
// <out>/runlog.csv, and leaves per-level data and progress on stdout.
RunResult execute_run(const CliOptions& o, bool quiet_rows = false) {
  BenchmarkProblem prob = make_problem(o.problem);
  fs::create_directories(o.out);
  const std::string runlog_path = o.out + "/runlog.csv";
  std::ofstream csv(runlog_path);
  if (!csv) throw std::runtime_error("cannot open '" + runlog_path + "' for writing");
  csv << kRunlogHeader << '\n';
  RecordSink sink = [&](const RunRecord& r) {
    csv << record_row(r) << '\n';
    csv.flush();
    if (!quiet_rows && (r.case_label == "post_ref" || r.case_label == "init"))
      std::cout << strf("level %3d: nT=%-8ld dim=%-8ld eta=%.6e\n", r.ell, r.nT, r.dim, r.eta);
  };
  RunResult res;
  try {
    res = run_adaptive(prob.mesh, prob.data, o.cfg, sink);
  } catch (...) {
    csv.flush();  // partial log stays on disk
    throw;
  }
  csv.close();
  if (o.cfg.diagnostics) write_runlog(runlog_path, res.records);  // quasi-error column is now complete
  write_levels_csv(o.out + "/levels.csv", res);
  if (o.save_meshes) save_mesh_file(res.space.mesh, o.out + "/final_mesh.txt");
  return res;
}

void write_run_summary(const CliOptions& o, const RunResult& res) {
  std::ofstream os(o.out + "/summary.txt");
  if (!os) throw std::runtime_error("cannot open summary.txt for writing");
  os << "command: run\n";
  echo_config(os, o);
  os << strf("status: %s (%s)\n", res.status.c_str(),
             res.stopped_by_rule ? "stopped by rule" : "ABORTED by safety cap");
  os << strf("levels: %zu   steps: %zu\n", res.levels.size(), res.records.size());
  if (!res.levels.empty()) {
    const LevelStats& fin = res.levels.back();
    os << strf("final: nT=%ld dim=%ld eta=%.6e energy=%.6e\n", fin.nT, fin.dim, fin.eta_end,
               res.energy_final);
  }
  os << strf("c_mesh (refined-to-marked ratio): %s\n", fmt_opt(res.c_mesh).c_str());

  LevelEnds e = level_ends(res);
  LineFit f_dim = fit_loglog_last_decade(e.dim, e.eta);
  LineFit f_nt = fit_loglog_last_decade(e.nT, e.eta);
  LineFit f_cost = fit_loglog_last_decade(e.cost, e.eta);
  os << "rate fits (log-log least squares over the final decade):\n";
  os << strf("  eta vs dim : slope=%+.4f  r2=%.4f  n=%d\n", f_dim.slope, f_dim.r2, f_dim.n);
  os << strf("  eta vs nT  : slope=%+.4f  r2=%.4f  n=%d\n", f_nt.slope, f_nt.r2, f_nt.n);
  os << strf("  eta vs cost: slope=%+.4f  r2=%.4f  n=%d\n", f_cost.slope, f_cost.r2, f_cost.n);
  write_damping_report(os, res, o.cfg.delta);

  os << "per-level:\n";
  os << "  ell      nT     dim  k  steps  marked        eta      q_alg      q_sym   qbar_sym "
        " lbar_alg      c_rel\n";
  for (const LevelStats& s : res.levels)
    os << strf("  %3d %7ld %7ld %2d %6ld %7ld %10.4e %10s %10s %10s %10s %10s\n", s.ell, s.nT,
               s.dim, s.k_count, s.solver_steps, s.marked, s.eta_end,
               fmt_opt(s.q_alg).c_str(), fmt_opt(s.q_sym).c_str(), fmt_opt(s.qbar_sym).c_str(),
               fmt_opt(s.lambda_bar_alg).c_str(), fmt_opt(s.c_rel_prime).c_str());

  if (o.cfg.diagnostics) {
    std::vector<double> deltas;
    for (const auto& r : res.records) deltas.push_back(r.delta_quasi);
    GeometricFit g = fit_geometric_tail(deltas, 0.4);
    os << strf("quasi-error geometric fit (first 40%% of steps discarded): q=%.4f  r2=%.4f  n=%d\n",
               g.q, g.r2, g.n);
    double c_rel = -1.0;
    for (const LevelStats& s : res.levels) c_rel = std::max(c_rel, s.c_rel_prime);
    os << strf("max measured reliability ratio (error/bound): %s\n", fmt_opt(c_rel).c_str());
  }
}

void write_run_plots(const CliOptions& o, const RunResult& res) {
  LevelEnds e = level_ends(res);
  const double rate = -0.5 * o.cfg.degree;
  PlotSeries s1{"estimator", e.dim, e.eta, "", true};
  write_plot_svg(o.out + "/eta_vs_dim.svg", "estimator vs dimension", "dim", "eta", {s1}, true,
                 true, {{rate, strf("slope %g", rate)}});
  PlotSeries s2{"estimator", e.cost, e.eta, "", true};
  write_plot_svg(o.out + "/eta_vs_cost.svg", "estimator vs cumulative cost", "cumulative cost",
                 "eta", {s2}, true, true, {{rate, strf("slope %g", rate)}});
  PlotSeries s3{"solver steps", {}, {}, "", true};
  for (const LevelStats& s : res.levels) {
    s3.x.push_back(static_cast<double>(s.ell));
    s3.y.push_back(static_cast<double>(s.solver_steps));
  }
  write_plot_svg(o.out + "/steps_per_level.svg", "solver steps per level", "level", "steps", {s3},
                 false, false);
  if (o.cfg.diagnostics) {
    PlotSeries s4{"quasi-error", {}, {}, "", false};
    for (const auto& r : res.records) {
      s4.x.push_back(static_cast<double>(r.step));
      s4.y.push_back(r.delta_quasi);
    }
    write_plot_svg(o.out + "/quasi_error.svg", "quasi-error per step", "step", "quasi-error", {s4},
                   false, true);
  }
}

int finish_code(const RunResult& res) { return res.stopped_by_rule ? kExitOk : kExitAborted; }

int cmd_run(const CliOptions& o) {
  RunResult res = execute_run(o);
  write_run_summary(o, res);
  write_run_plots(o, res);
  std::cout << strf("status: %s%s\n", res.status.c_str(),
                    res.stopped_by_rule ? "" : " (safety-cap abort)");
  std::cout << "outputs in " << o.out << "/: runlog.csv levels.csv summary.txt *.svg\n";
  return finish_code(res);
}

int cmd_contraction(const CliOptions& o) {
  if (!o.cfg.diagnostics)
    throw std::invalid_argument("contraction requires --diagnostics");
  RunResult res = execute_run(o);

  std::ofstream fc(o.out + "/factors.csv");
  if (!fc) throw std::runtime_error("cannot open factors.csv for writing");
  fc << "ell,q_alg,q_sym,qbar_sym,lambda_bar_alg\n";
  for (const LevelStats& s : res.levels)
    fc << strf("%d,%s,%s,%s,%s\n", s.ell, fmt_opt(s.q_alg).c_str(), fmt_opt(s.q_sym).c_str(),
               fmt_opt(s.qbar_sym).c_str(), fmt_opt(s.lambda_bar_alg).c_str());
  fc.close();

  PlotSeries pa{"q_alg", {}, {}, "", true}, ps{"q_sym", {}, {}, "", true},
      pb{"qbar_sym", {}, {}, "", true};
  bool all_contractive = true;
  double max_qalg = -1.0, max_qsym = -1.0, max_qbar = -1.0, min_lbar = -1.0;
  for (const LevelStats& s : res.levels) {
    const double x = static_cast<double>(s.ell);
    if (s.q_alg >= 0) {
      pa.x.push_back(x);
      pa.y.push_back(s.q_alg);
      max_qalg = std::max(max_qalg, s.q_alg);
      if (s.q_alg >= 1.0) all_contractive = false;
    }
    if (s.q_sym >= 0) {
      ps.x.push_back(x);
      ps.y.push_back(s.q_sym);
      max_qsym = std::max(max_qsym, s.q_sym);
      if (s.q_sym >= 1.0) all_contractive = false;
    }
    if (s.qbar_sym >= 0) {
      pb.x.push_back(x);
      pb.y.push_back(s.qbar_sym);
      max_qbar = std::max(max_qbar, s.qbar_sym);
      if (s.qbar_sym >= 1.0) all_contractive = false;
    }
    if (s.lambda_bar_alg >= 0)
      min_lbar = min_lbar < 0 ? s.lambda_bar_alg : std::min(min_lbar, s.lambda_bar_alg);
  }
  write_plot_svg(o.out + "/factors.svg", "contraction factors per level", "level", "factor",
                 {pa, ps, pb}, false, false);

  std::ofstream os(o.out + "/summary.txt");
  os << "command: contraction\n";
  echo_config(os, o);
  os << strf("status: %s\n", res.status.c_str());
  os << strf("max q_alg: %s   max q_sym: %s   max qbar_sym: %s\n", fmt_opt(max_qalg).c_str(),
             fmt_opt(max_qsym).c_str(), fmt_opt(max_qbar).c_str());
  os << strf("min lambda_bar_alg (admissible algebraic parameter bound): %s\n",
             fmt_opt(min_lbar).c_str());
  if (!all_contractive) os << "FLAG: a measured factor reached 1; no contraction on some level\n";
  write_damping_report(os, res, o.cfg.delta);
  os.close();

  std::cout << strf("factors: q_alg<=%s q_sym<=%s qbar_sym<=%s%s\n", fmt_opt(max_qalg).c_str(),
                    fmt_opt(max_qsym).c_str(), fmt_opt(max_qbar).c_str(),
                    all_contractive ? "" : "  [FLAGGED: >= 1]");
  std::cout << "outputs in " << o.out << "/: factors.csv factors.svg summary.txt runlog.csv\n";
  return finish_code(res);
}

int cmd_timing(const CliOptions& o) {
  CliOptions to = o;
  to.cfg.time_direct = true;
  RunResult res = execute_run(to);

  std::ofstream tc(o.out + "/timing.csv");
  if (!tc) throw std::runtime_error("cannot open timing.csv for writing");
  tc << "ell,nT,dim,time_iterative_cum,time_direct_cum\n";
  double it_cum = 0.0, di_cum = 0.0;
  std::vector<double> dims, it_times, di_times;  // one entry per level, in level order
  for (const LevelStats& s : res.levels) {
    it_cum += s.time_level_s;
    di_cum += std::max(0.0, s.time_direct_s);
    tc << strf("%d,%ld,%ld,%.17g,%.17g\n", s.ell, s.nT, s.dim, it_cum, di_cum);
    dims.push_back(static_cast<double>(s.dim));
    it_times.push_back(it_cum);
    di_times.push_back(di_cum);
  }
  tc.close();

  write_plot_svg(o.out + "/timing.svg", "cumulative solve time", "dim", "seconds",
                 {{"iterative path", dims, it_times, "", true},
                  {"direct solve per level", dims, di_times, "", true}},
                 true, true);

  // time-vs-cost complexity readout: near-linear growth is slope ~ 1
  LevelEnds e = level_ends(res);
  LineFit f_iter = fit_loglog_last_decade(e.cost, it_times);
  LineFit f_direct = fit_loglog_last_decade(dims, di_times);

  std::ofstream os(o.out + "/summary.txt");
  os << "command: timing\n";
  echo_config(os, o);
  os << strf("status: %s\n", res.status.c_str());
  os << strf("total iterative seconds: %.4f   total direct seconds: %.4f\n", it_cum, di_cum);
  os << strf("iterative cumulative time vs cumulative cost: slope=%.3f r2=%.3f n=%d "
             "(near 1 = linear complexity)\n",
             f_iter.slope, f_iter.r2, f_iter.n);
  os << strf("direct cumulative time vs dim: slope=%.3f r2=%.3f n=%d (reported, not asserted)\n",
             f_direct.slope, f_direct.r2, f_direct.n);
  os.close();

  std::cout << strf("timing: iterative %.3fs, direct %.3fs over %zu levels\n", it_cum, di_cum,
                    res.levels.size());
  std::cout << "outputs in " << o.out << "/: timing.csv timing.svg summary.txt runlog.csv\n";
  return finish_code(res);
}

int cmd_param_study(const CliOptions& o) {
  if (o.thetas.empty() || o.lambda_syms.empty())
    throw std::invalid_argument("param-study: the theta / lambda_sym grid must be nonempty");
  for (double t : o.thetas)
    if (!(t > 0.0) || t > 1.0)
      throw std::invalid_argument(strf("param-study: theta = %g outside (0, 1]", t));
  for (double l : o.lambda_syms)
    if (!(l > 0.0)) throw std::invalid_argument(strf("param-study: lambda_sym = %g not positive", l));
  if (!(o.study_tol > 0.0))
    throw std::invalid_argument("param-study: the study tolerance must be positive");

  fs::create_directories(o.out);
  const size_t nr = o.lambda_syms.size(), nc = o.thetas.size();
  std::vector<double> cost(nr * nc, -1.0);  // weighted cost, -1 = failed cell
  std::vector<std::string> cell_status(nr * nc, "failed");

  for (size_t r = 0; r < nr; ++r) {
    for (size_t c = 0; c < nc; ++c) {
      CliOptions co = o;
      co.cfg.lambda_sym = o.lambda_syms[r];
      co.cfg.theta = o.thetas[c];
      co.cfg.stop_tau = o.study_tol;  // composite <= tol, which forces eta <= tol
      co.out = o.out + strf("/cell_theta%.4g_lsym%.4g", co.cfg.theta, co.cfg.lambda_sym);
      std::cout << strf("cell theta=%.4g lambda_sym=%.4g ... ", co.cfg.theta, co.cfg.lambda_sym);
      std::cout.flush();
      try {
        RunResult res = execute_run(co, /*quiet_rows=*/true);
        cell_status[r * nc + c] = res.status;
        if (res.status == "tolerance" || res.status == "exact") {
          double sum_dim = 0.0;
          for (const auto& rec : res.records) sum_dim += static_cast<double>(rec.dim);
          cost[r * nc + c] = res.records.back().eta * sum_dim;
          std::cout << strf("cost %.6g (%zu steps)\n", cost[r * nc + c], res.records.size());
        } else {
          std::cout << strf("no convergence (%s)\n", res.status.c_str());
        }
      } catch (const std::exception& ex) {
        cell_status[r * nc + c] = std::string("error: ") + ex.what();
        std::cout << "error: " << ex.what() << "\n";
      }
    }
  }

  std::ofstream tc(o.out + "/table.csv");
  if (!tc) throw std::runtime_error("cannot open table.csv for writing");
  tc << "lambda_sym";
  for (double t : o.thetas) tc << strf(",theta=%.4g", t);
  tc << "\n";
  for (size_t r = 0; r < nr; ++r) {
    tc << strf("%.4g", o.lambda_syms[r]);
    for (size_t c = 0; c < nc; ++c) {
      const double v = cost[r * nc + c];
      tc << (v >= 0.0 ? strf(",%.17g", v) : std::string(","));
    }
    tc << "\n";
  }
  tc.close();

  // Minimum cell plus within-row / within-column spread: which parameter
  // moves the cost more.
  double best = -1.0;
  size_t bi = 0;
  for (size_t i = 0; i < cost.size(); ++i)
    if (cost[i] >= 0.0 && (best < 0.0 || cost[i] < best)) {
      best = cost[i];
      bi = i;
    }
  auto spread = [&](bool rows) {
    double worst = -1.0;
    const size_t outer = rows ? nr : nc, inner = rows ? nc : nr;
    for (size_t a = 0; a < outer; ++a) {
      double lo = -1.0, hi = -1.0;
      for (size_t b = 0; b < inner; ++b) {
        const double v = cost[rows ? a * nc + b : b * nc + a];
        if (v < 0.0) continue;
        lo = lo < 0.0 ? v : std::min(lo, v);
        hi = std::max(hi, v);
      }
      if (lo > 0.0) worst = std::max(worst, hi / lo);
    }
    return worst;
  };
  const double theta_impact = spread(true);    // cost ratio within a row (theta varies)
  const double lambda_impact = spread(false);  // cost ratio within a column (lambda_sym varies)

  std::ofstream os(o.out + "/summary.txt");
  os << "command: param-study\n";
  echo_config(os, o);
  os << strf("stop per cell: composite estimator+differences <= %g (forces eta <= %g)\n",
             o.study_tol, o.study_tol);
  os << "weighted cost per cell: final eta x (sum of dim over all logged steps)\n";
  os << "table (rows lambda_sym, columns theta):\n";
  os << "  lambda_sym";
  for (double t : o.thetas) os << strf(" %12s", strf("th=%.4g", t).c_str());
  os << "\n";
  for (size_t r = 0; r < nr; ++r) {
    os << strf("  %10.4g", o.lambda_syms[r]);
    for (size_t c = 0; c < nc; ++c) {
      const double v = cost[r * nc + c];
      os << (v >= 0.0 ? strf(" %12.5g", v) : strf(" %12s", "-"));
    }
    os << "\n";
  }
  if (best >= 0.0)
    os << strf("minimum cost %.6g at theta=%.4g, lambda_sym=%.4g\n", best, o.thetas[bi % nc],
               o.lambda_syms[bi / nc]);
  else
    os << "no cell converged\n";
  int failed = 0;
  for (size_t r = 0; r < nr; ++r)
    for (size_t c = 0; c < nc; ++c)
      if (cost[r * nc + c] < 0.0) {
        os << strf("cell theta=%.4g lambda_sym=%.4g did not converge: %s\n", o.thetas[c],
                   o.lambda_syms[r], cell_status[r * nc + c].c_str());
        ++failed;
      }
  os << strf("impact (max cost ratio when one parameter varies): theta %.3g, lambda_sym %.3g -> "
             "%s has the stronger impact\n",
             theta_impact, lambda_impact,
             theta_impact >= lambda_impact ? "theta" : "lambda_sym");
  os.close();

  std::cout << strf("param-study: %zu cells, %d failed; table in %s/table.csv\n", cost.size(),
                    failed, o.out.c_str());
  return best >= 0.0 ? kExitOk : kExitRuntime;
}

int cmd_mesh_info(const CliOptions& o) {
  Triangulation t;
  try {
    t = make_builtin_mesh(o.mesh);
  } catch (const std::invalid_argument&) {
    t = load_mesh_file(o.mesh);
  }
  double area = 0.0, hmin = 0.0, hmax = 0.0;
  for (int e = 0; e < t.num_elements(); ++e) {
    area += t.signed_area(e);
    const double h = t.diameter(e);
    hmin = e == 0 ? h : std::min(hmin, h);
    hmax = std::max(hmax, h);
  }
  int gmax = 0;
  for (int g : t.generation) gmax = std::max(gmax, g);
  std::cout << strf("mesh: %s\n", o.mesh.c_str());
  std::cout << strf("vertices: %d  elements: %d  boundary edges: %zu\n", t.num_vertices(),
                    t.num_elements(), t.boundary_edges.size());
  std::cout << strf("signed area: %.12g  diameter range: [%.6g, %.6g]  max generation: %d\n", area,
                    hmin, hmax, gmax);
  auto viol = validate(t);
  if (viol.empty()) {
    std::cout << "valid: yes\n";
    return kExitOk;
  }
  std::cout << strf("valid: NO (%zu violations)\n", viol.size());
  for (const auto& v : viol) std::cout << "  " << v.invariant << ": " << v.detail << "\n";
  return kExitRuntime;
}

}  // namespace

int afem_cli_main(int argc, char** argv) {
  CliOptions o;
  CLI::App app{"adaptive FEM experiment harness: solve-estimate-mark-refine studies "
               "for nonsymmetric second-order elliptic problems"};
  app.set_config("--config", "", "read options from an INI-style config file");
  app.config_formatter(std::make_shared<FlatSectionConfig>());
  app.allow_config_extras(CLI::config_extras_mode::error);
  app.require_subcommand(1);
  app.fallthrough(false);

  app.add_option("--problem", o.problem,
                 "built-in problem name (lshape-dcr, zshape-convection, manufactured-cubic) or a "
                 "mesh file path")
      ->capture_default_str();
  app.add_option("--degree", o.cfg.degree, "polynomial degree m")->capture_default_str();
  app.add_option("--theta", o.cfg.theta, "marking parameter in (0,1]")->capture_default_str();
  app.add_option("--lambda-sym", o.cfg.lambda_sym, "symmetrization stopping parameter")
      ->capture_default_str();
  app.add_option("--lambda-alg", o.cfg.lambda_alg, "algebraic stopping parameter")
      ->capture_default_str();
  app.add_option("--delta,--zarantonello.delta", o.cfg.delta, "symmetrization damping")
      ->capture_default_str();
  app.add_option("--c-mark", o.cfg.c_mark, "accepted marking cardinality slack (>= 1)")
      ->capture_default_str();
  app.add_option("--stop-dim", o.cfg.stop_dim, "stop after the first level with dim above this (0 off)")
      ->capture_default_str();
  app.add_option("--stop-eta,--stop-tau", o.cfg.stop_tau,
                 "stop once estimator+differences fall below this tolerance (0 off)")
      ->capture_default_str();
  app.add_option("--stop-steps", o.cfg.stop_steps, "stop after this many logged steps (0 off)")
      ->capture_default_str();
  app.add_option("--j-cap", o.cfg.j_cap, "safety cap on algebraic steps per symmetrization step")
      ->capture_default_str();
  app.add_option("--k-cap", o.cfg.k_cap, "safety cap on symmetrization steps per level")
      ->capture_default_str();
  app.add_flag("--diagnostics", o.cfg.diagnostics,
               "enable direct-solve oracles: contraction factors and quasi-error");
  app.add_flag("--cache-coefficients", o.cfg.cache_coefficients,
               "reuse coefficient evaluations across estimator calls on a level");
  app.add_flag("--save-meshes", o.save_meshes, "write the final mesh to <out>/final_mesh.txt");
  app.add_option("--reference-rounds", o.cfg.reference_rounds,
                 "uniform refinement rounds for the diagnostic reference solve")
      ->capture_default_str();
  app.add_option("--samples,--zarantonello.samples", o.cfg.rayleigh_samples,
                 "sample count for the damping estimate (>= 10)")
      ->capture_default_str();
  app.add_option("--seed", o.cfg.seed, "seed for sampled diagnostics")->capture_default_str();
  app.add_option("--out", o.out, "output directory")->capture_default_str();
  app.add_option("--backend", o.backend, "kernel backend")
      ->check(CLI::IsMember({"serial", "omp"}))
      ->capture_default_str();
  app.add_option("--solver.kind", o.cfg.solver.kind, "iterative solver kind")
      ->check(CLI::IsMember({"pcg-bpx", "mg-vcycle"}))
      ->capture_default_str();
  app.add_option("--solver.smoother", o.cfg.solver.smoother, "multilevel smoother")
      ->check(CLI::IsMember({"patch", "jacobi"}))
      ->capture_default_str();
  app.add_option("--solver.coarse_cap", o.cfg.solver.coarse_cap,
                 "largest dimension factored directly on the coarsest level")
      ->capture_default_str();
  app.add_option("--solver.q_cap", o.cfg.solver.q_cap, "expected solver contraction bound")
      ->capture_default_str();

  CLI::App* sub_run = app.add_subcommand("run", "one adaptive run: runlog, summary, plots");
  sub_run->fallthrough();
  CLI::App* sub_study =
      app.add_subcommand("param-study", "weighted-cost table over a lambda_sym x theta grid");
  sub_study->fallthrough();
  sub_study->add_option("--thetas", o.thetas, "marking parameters of the grid")
      ->delimiter(',')
      ->capture_default_str();
  sub_study->add_option("--lambda-syms", o.lambda_syms, "symmetrization parameters of the grid")
      ->delimiter(',')
      ->capture_default_str();
  sub_study->add_option("--tol", o.study_tol, "per-cell stopping tolerance")->capture_default_str();
  CLI::App* sub_contr =
      app.add_subcommand("contraction", "per-level contraction factors (needs --diagnostics)");
  sub_contr->fallthrough();
  CLI::App* sub_timing =
      app.add_subcommand("timing", "cumulative iterative vs per-level direct solve time");
  sub_timing->fallthrough();
  CLI::App* sub_mesh = app.add_subcommand("mesh-info", "inspect and validate a mesh");
  sub_mesh->fallthrough();
  sub_mesh->add_option("mesh", o.mesh, "built-in mesh name (square, triangle, lshape, zshape) or file")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfig;
  }

  try {
    set_kernel_backend(o.backend == "serial" ? Backend::serial : Backend::omp);
    if (sub_run->parsed()) return cmd_run(o);
    if (sub_study->parsed()) return cmd_param_study(o);
    if (sub_contr->parsed()) return cmd_contraction(o);
    if (sub_timing->parsed()) return cmd_timing(o);
    if (sub_mesh->parsed()) return cmd_mesh_info(o);
    std::cerr << "no subcommand selected\n";
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}

}  // namespace afem
