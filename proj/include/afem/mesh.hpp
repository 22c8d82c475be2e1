#pragma once

#include <array>
#include <string>
#include <unordered_map>
#include <vector>

#include "afem/geometry.hpp"

namespace afem {

// Conforming triangle mesh. Element vertices are listed counterclockwise and
// the edge between the first two listed vertices is the refinement edge of
// newest-vertex bisection. `generation` tracks per-element bisection depth
// (diagnostic only), `parent` maps each element to the element of the mesh it
// was refined from (empty for meshes not produced by refine()).
struct Triangulation {
  std::vector<Vec2> vertices;
  std::vector<std::array<int, 3>> elements;
  std::vector<std::array<int, 2>> boundary_edges;
  std::vector<int> generation;
  std::vector<int> parent;

  int num_vertices() const { return static_cast<int>(vertices.size()); }
  int num_elements() const { return static_cast<int>(elements.size()); }

  double signed_area(int e) const {
    const auto& t = elements[static_cast<size_t>(e)];
    return 0.5 * cross(vertices[t[1]] - vertices[t[0]], vertices[t[2]] - vertices[t[0]]);
  }
  // Longest edge; for a triangle this is the diameter.
  double diameter(int e) const {
    const auto& t = elements[static_cast<size_t>(e)];
    double a = norm(vertices[t[1]] - vertices[t[0]]);
    double b = norm(vertices[t[2]] - vertices[t[1]]);
    double c = norm(vertices[t[0]] - vertices[t[2]]);
    return std::max(a, std::max(b, c));
  }
};

// Sorted, duplicate-free element subset.
struct MarkedSet {
  std::vector<int> indices;

  // Validates range and removes nothing: duplicates or out-of-range entries throw.
  static MarkedSet of(std::vector<int> idx, int num_elements);
  static MarkedSet all(int num_elements);
  int size() const { return static_cast<int>(indices.size()); }
};

struct MeshViolation {
  std::string invariant;  // "structure" | "orientation" | "conformity" | "boundary"
  std::string detail;     // human-readable description naming the offending entity
};

// Undirected edge incidence of a mesh; shared by refinement, space
// construction, and the jump terms of the estimator.
struct EdgeTable {
  std::vector<std::array<int, 2>> edges;         // endpoints, smaller index first
  std::vector<std::array<int, 2>> adjacent;      // adjacent elements in discovery order, -1 if none
  std::vector<std::array<int, 3>> element_edges; // edge id of local edges (v0v1, v1v2, v2v0)
  std::unordered_map<uint64_t, int> index;       // key (min<<32)|max -> edge id

  int num_edges() const { return static_cast<int>(edges.size()); }
  int find(int a, int b) const;
};

EdgeTable build_edge_table(const Triangulation& t);

// Returns all detected invariant violations (empty for a valid mesh).
std::vector<MeshViolation> validate(const Triangulation& t);

// Newest-vertex bisection of the marked elements plus recursive closure until
// conformity: the result is the coarsest conforming refinement in which every
// marked element has its refinement edge bisected. Each parent splits into at
// most four children per call. Pure function of its inputs.
Triangulation refine(const Triangulation& t, const MarkedSet& marked);

Triangulation uniform_refine(const Triangulation& t, int rounds = 1);

// Text format: first line "V N B"; V lines "x y"; N lines "i j k" (0-based,
// refinement edge between i and j); B lines "i j".
Triangulation load_mesh_text(const std::string& text);
Triangulation load_mesh_file(const std::string& path);
std::string save_mesh_text(const Triangulation& t);
void save_mesh_file(const Triangulation& t, const std::string& path);

// Built-in initial meshes. All triangles are right isosceles with the
// refinement edge on the hypotenuse, so repeated refinement preserves shape
// regularity; diagonals around re-entrant corners meet at the singularity.
Triangulation make_square_mesh();         // unit square, two triangles, diagonal refinement edges
Triangulation make_unit_triangle_mesh();  // single right triangle (0,0),(1,0),(0,1)
Triangulation make_lshape_mesh();         // (-1,1)^2 minus [0,1]x[-1,0]; 8 vertices, 6 elements
Triangulation make_zshape_mesh();         // (-1,1)^2 minus conv{(0,0),(-1,0),(-1,-1)}; 9 vertices, 7 elements

// Lookup by CLI name ("square", "triangle", "lshape", "zshape"); throws on
// unknown names listing the valid ones.
Triangulation make_builtin_mesh(const std::string& name);

}  // namespace afem
