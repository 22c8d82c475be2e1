// End-to-end tests of the installed command-line binary. Each test invokes
// the real executable (path injected at compile time), checks the exit code
// contract (0 ok, 1 runtime failure, 2 usage/config error, 3 safety-cap
// abort) and the files it leaves behind.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "afem/mesh.hpp"

using namespace afem;
namespace fs = std::filesystem;

namespace {

struct CmdResult {
  int code = -1;
  std::string output;  // stdout + stderr
};

fs::path scratch_root() {
  fs::path p = fs::temp_directory_path() / "afem_cli_tests";
  fs::create_directories(p);
  return p;
}

fs::path fresh_dir(const std::string& name) {
  fs::path p = scratch_root() / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

CmdResult run_cli(const std::string& args) {
  static int counter = 0;
  fs::path log = scratch_root() / ("cmd_" + std::to_string(counter++) + ".log");
  std::string cmd = std::string(AFEM_BIN_PATH) + " " + args + " > " + log.string() + " 2>&1";
  int raw = std::system(cmd.c_str());
  CmdResult r;
  r.code = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  std::ifstream is(log);
  std::stringstream ss;
  ss << is.rdbuf();
  r.output = ss.str();
  return r;
}

std::vector<std::string> read_lines(const fs::path& p) {
  std::ifstream is(p);
  REQUIRE(is.good());
  std::vector<std::string> lines;
  std::string l;
  while (std::getline(is, l)) lines.push_back(l);
  return lines;
}

bool contains(const std::string& hay, const std::string& needle) {
  return hay.find(needle) != std::string::npos;
}

// Rows of a runlog with the wall-clock column blanked out.
std::vector<std::string> runlog_without_time(const fs::path& p) {
  std::vector<std::string> rows = read_lines(p);
  for (std::string& row : rows) {
    std::vector<std::string> cells;
    std::stringstream ss(row);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() > 10) cells[10] = "x";
    std::string joined;
    for (size_t i = 0; i < cells.size(); ++i) joined += (i ? "," : "") + cells[i];
    row = joined;
  }
  return rows;
}

}  // namespace

TEST_CASE("run writes the full report set and exits 0 on a rule stop") {
  fs::path out = fresh_dir("run_basic");
  CmdResult r = run_cli("--problem lshape-dcr --stop-dim 150 --out " + out.string() + " run");
  CHECK(r.code == 0);
  CHECK(contains(r.output, "status: dim_cap"));
  for (const char* f : {"runlog.csv", "levels.csv", "summary.txt", "eta_vs_dim.svg",
                        "eta_vs_cost.svg", "steps_per_level.svg"}) {
    CAPTURE(f);
    CHECK(fs::exists(out / f));
  }

  std::vector<std::string> rows = read_lines(out / "runlog.csv");
  REQUIRE(rows.size() >= 3);
  CHECK(rows[0] == "ell,k,j,step,nT,dim,eta,diff_alg,diff_sym,cost_cum,time_s,delta_quasi,case");
  CHECK(contains(rows[1], "init"));

  std::vector<std::string> levels = read_lines(out / "levels.csv");
  REQUIRE(levels.size() >= 2);
  CHECK(levels[0].rfind("ell,nT,dim,k_count,solver_steps,marked,eta_end", 0) == 0);

  std::string summary;
  for (const std::string& l : read_lines(out / "summary.txt")) summary += l + "\n";
  CHECK(contains(summary, "status: dim_cap"));
  CHECK(contains(summary, "problem: lshape-dcr"));
}

TEST_CASE("repeated runs produce identical logs apart from wall-clock times") {
  fs::path a = fresh_dir("repro_a"), b = fresh_dir("repro_b");
  std::string common = "--problem zshape-convection --stop-dim 200 --diagnostics ";
  CHECK(run_cli(common + "--out " + a.string() + " run").code == 0);
  CHECK(run_cli(common + "--out " + b.string() + " run").code == 0);
  CHECK(runlog_without_time(a / "runlog.csv") == runlog_without_time(b / "runlog.csv"));
  CHECK(fs::exists(a / "quasi_error.svg"));  // diagnostics adds the quasi-error plot
}

TEST_CASE("usage and configuration errors exit with code 2") {
  fs::path out = fresh_dir("usage");
  std::string tail = " --out " + out.string() + " run";
  CHECK(run_cli("--theta 1.5 --stop-dim 50" + tail).code == 2);
  CHECK(run_cli("--no-such-flag 1" + tail).code == 2);
  CHECK(run_cli("--problem no-such-problem --stop-dim 50" + tail).code == 2);
  CHECK(run_cli("--out " + out.string()).code == 2);  // a subcommand is required
  CmdResult nostop = run_cli("--stop-dim 0" + tail);
  CHECK(nostop.code == 2);
  CHECK(contains(nostop.output, "stop"));
}

TEST_CASE("safety-cap aborts exit with code 3 and keep the partial log") {
  fs::path out = fresh_dir("cap");
  CmdResult r = run_cli("--problem lshape-dcr --stop-dim 5000 --lambda-alg 1e-13 --j-cap 2 --out " +
                        out.string() + " run");
  CHECK(r.code == 3);
  CHECK(contains(r.output, "safety-cap abort"));
  CHECK(read_lines(out / "runlog.csv").size() >= 2);
}

TEST_CASE("mesh-info reports built-ins, files, and validation failures") {
  CmdResult sq = run_cli("mesh-info square");
  CHECK(sq.code == 0);
  CHECK(contains(sq.output, "vertices: 4  elements: 2"));
  CHECK(contains(sq.output, "valid: yes"));

  CmdResult ls = run_cli("mesh-info lshape");
  CHECK(ls.code == 0);
  CHECK(contains(ls.output, "elements: 6"));

  CHECK(run_cli("mesh-info " + (scratch_root() / "missing_mesh.txt").string()).code == 1);

  // A hanging vertex must be reported and flip the exit code.
  Triangulation bad;
  bad.vertices = {{0, 0}, {1, 0}, {1, 1}, {0, 1}, {0.5, 0.5}};
  bad.elements = {{0, 1, 2}, {2, 3, 4}, {3, 0, 4}};
  bad.generation = {0, 0, 0};
  bad.boundary_edges = {{0, 1}, {1, 2}, {2, 3}, {3, 0}};
  fs::path bad_path = scratch_root() / "hanging.txt";
  save_mesh_file(bad, bad_path.string());
  CmdResult hv = run_cli("mesh-info " + bad_path.string());
  CHECK(hv.code == 1);
  CHECK(contains(hv.output, "valid: NO"));
  CHECK(contains(hv.output, "conformity"));
}

TEST_CASE("an INI config file feeds top-level options and dotted sections") {
  fs::path out = fresh_dir("config");
  fs::path ini = scratch_root() / "config.ini";
  {
    std::ofstream os(ini);
    os << "problem = zshape-convection\n";
    os << "stop-steps = 3\n";
    os << "[zarantonello]\n";
    os << "delta = 0.7\n";
    os << "[solver]\n";
    os << "smoother = jacobi\n";
  }
  CmdResult r = run_cli("--config " + ini.string() + " --out " + out.string() + " run");
  CHECK(r.code == 0);
  std::vector<std::string> rows = read_lines(out / "runlog.csv");
  CHECK(rows.size() == 4);  // header + exactly stop-steps rows
  std::string summary;
  for (const std::string& l : read_lines(out / "summary.txt")) summary += l + "\n";
  CHECK(contains(summary, "problem: zshape-convection"));
  CHECK(contains(summary, "delta: 0.7"));
  CHECK(contains(summary, "jacobi smoother"));

  // A bad value inside a section must be rejected like its flag twin.
  {
    std::ofstream os(ini);
    os << "stop-dim = 50\n[solver]\nkind = gmres\n";
  }
  CHECK(run_cli("--config " + ini.string() + " --out " + out.string() + " run").code == 2);
}

TEST_CASE("contraction demands diagnostics and writes per-level factors") {
  fs::path out = fresh_dir("contraction");
  std::string base = "--problem lshape-dcr --stop-dim 300 --out " + out.string();
  CmdResult no_diag = run_cli(base + " contraction");
  CHECK(no_diag.code == 2);
  CHECK(contains(no_diag.output, "requires --diagnostics"));

  CmdResult r = run_cli(base + " --diagnostics --reference-rounds 1 contraction");
  CHECK(r.code == 0);
  std::vector<std::string> rows = read_lines(out / "factors.csv");
  REQUIRE(rows.size() >= 3);
  CHECK(rows[0] == "ell,q_alg,q_sym,qbar_sym,lambda_bar_alg");
  CHECK(fs::exists(out / "factors.svg"));
}

TEST_CASE("timing writes cumulative iterative and direct clocks per level") {
  fs::path out = fresh_dir("timing");
  CmdResult r = run_cli("--problem lshape-dcr --stop-dim 300 --out " + out.string() + " timing");
  CHECK(r.code == 0);
  std::vector<std::string> rows = read_lines(out / "timing.csv");
  REQUIRE(rows.size() >= 3);
  CHECK(rows[0] == "ell,nT,dim,time_iterative_cum,time_direct_cum");
  CHECK(fs::exists(out / "timing.svg"));
  std::string summary;
  for (const std::string& l : read_lines(out / "summary.txt")) summary += l + "\n";
  CHECK(contains(summary, "slope"));
}

TEST_CASE("param-study fills a weighted-cost table over the parameter grid") {
  fs::path out = fresh_dir("study");
  CmdResult r = run_cli("--problem lshape-dcr --out " + out.string() +
                        " param-study --thetas 0.3 0.9 --lambda-syms 0.1 --tol 0.3");
  CHECK(r.code == 0);
  std::vector<std::string> rows = read_lines(out / "table.csv");
  REQUIRE(rows.size() == 2);
  CHECK(rows[0] == "lambda_sym,theta=0.3,theta=0.9");
  CHECK(rows[1].rfind("0.1,", 0) == 0);
  // Both cells finished: two nonempty numeric fields after the row label.
  std::stringstream ss(rows[1]);
  std::string cell;
  int numeric = 0;
  bool first = true;
  while (std::getline(ss, cell, ',')) {
    if (first) {
      first = false;
      continue;
    }
    if (!cell.empty()) ++numeric;
  }
  CHECK(numeric == 2);
  CHECK(contains(r.output, "param-study: 2 cells, 0 failed"));
}

TEST_CASE("run with --save-meshes leaves a loadable final mesh") {
  fs::path out = fresh_dir("savemesh");
  CmdResult r = run_cli("--problem lshape-dcr --stop-dim 80 --save-meshes --out " + out.string() +
                        " run");
  CHECK(r.code == 0);
  Triangulation t = load_mesh_file((out / "final_mesh.txt").string());
  CHECK(t.num_elements() > 6);
  CHECK(validate(t).empty());
}
