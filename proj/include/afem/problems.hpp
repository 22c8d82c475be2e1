#pragma once

#include <string>
#include <vector>

#include "afem/mesh.hpp"
#include "afem/problem.hpp"

namespace afem {

// A named benchmark: initial mesh plus coefficient data, and — when the
// problem is manufactured — the exact solution for error checks.
struct BenchmarkProblem {
  std::string name;
  std::string description;
  Triangulation mesh;
  ProblemData data;
  ScalarField exact;       // empty when the exact solution is unknown
  VectorField exact_grad;  // empty when the exact solution is unknown
};

// Built-in names: "lshape-dcr", "zshape-convection", "manufactured-cubic".
// Any other name is treated as a path to a mesh file and paired with the
// default data (A=Id, f=1); unknown names that are not readable files throw.
BenchmarkProblem make_problem(const std::string& name);
std::vector<std::string> problem_names();

}  // namespace afem
