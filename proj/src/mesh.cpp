#include "afem/mesh.hpp"

#include <algorithm>
#include <cstdlib>
#include <deque>
#include <set>
#include <sstream>
#include <stdexcept>

#include "afem/util.hpp"

namespace afem {

namespace {

uint64_t edge_key(int a, int b) {
  int lo = std::min(a, b), hi = std::max(a, b);
  return (static_cast<uint64_t>(static_cast<uint32_t>(lo)) << 32) | static_cast<uint32_t>(hi);
}

}  // namespace

MarkedSet MarkedSet::of(std::vector<int> idx, int num_elements) {
  std::sort(idx.begin(), idx.end());
  for (size_t i = 0; i < idx.size(); ++i) {
    if (idx[i] < 0 || idx[i] >= num_elements)
      throw std::invalid_argument(strf("marked element index %d out of range [0,%d)", idx[i], num_elements));
    if (i > 0 && idx[i] == idx[i - 1])
      throw std::invalid_argument(strf("marked element index %d appears twice", idx[i]));
  }
  MarkedSet m;
  m.indices = std::move(idx);
  return m;
}

MarkedSet MarkedSet::all(int num_elements) {
  MarkedSet m;
  m.indices.resize(static_cast<size_t>(num_elements));
  for (int i = 0; i < num_elements; ++i) m.indices[static_cast<size_t>(i)] = i;
  return m;
}

int EdgeTable::find(int a, int b) const {
  auto it = index.find(edge_key(a, b));
  return it == index.end() ? -1 : it->second;
}

EdgeTable build_edge_table(const Triangulation& t) {
  EdgeTable et;
  et.element_edges.resize(t.elements.size());
  et.index.reserve(t.elements.size() * 2);
  for (int e = 0; e < t.num_elements(); ++e) {
    const auto& tri = t.elements[static_cast<size_t>(e)];
    for (int le = 0; le < 3; ++le) {
      int a = tri[le], b = tri[(le + 1) % 3];
      uint64_t key = edge_key(a, b);
      auto it = et.index.find(key);
      int id;
      if (it == et.index.end()) {
        id = et.num_edges();
        et.index.emplace(key, id);
        et.edges.push_back({std::min(a, b), std::max(a, b)});
        et.adjacent.push_back({e, -1});
      } else {
        id = it->second;
        if (et.adjacent[static_cast<size_t>(id)][1] == -1)
          et.adjacent[static_cast<size_t>(id)][1] = e;
        else
          et.adjacent[static_cast<size_t>(id)][1] = -2;  // over-shared; validate() reports it
      }
      et.element_edges[static_cast<size_t>(e)][le] = id;
    }
  }
  return et;
}

std::vector<MeshViolation> validate(const Triangulation& t) {
  std::vector<MeshViolation> out;
  const int nv = t.num_vertices();
  const int ne = t.num_elements();

  if (ne == 0) {
    out.push_back({"structure", "mesh has no elements"});
    return out;
  }
  if (!t.generation.empty() && static_cast<int>(t.generation.size()) != ne)
    out.push_back({"structure", strf("generation array has %zu entries for %d elements", t.generation.size(), ne)});

  bool indices_ok = true;
  for (int e = 0; e < ne; ++e) {
    const auto& tri = t.elements[static_cast<size_t>(e)];
    for (int i = 0; i < 3; ++i) {
      if (tri[i] < 0 || tri[i] >= nv) {
        out.push_back({"structure", strf("element %d references vertex %d outside [0,%d)", e, tri[i], nv)});
        indices_ok = false;
      }
    }
    if (tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2])
      out.push_back({"structure", strf("element %d repeats a vertex", e)});
  }
  for (size_t i = 0; i < t.boundary_edges.size(); ++i) {
    const auto& be = t.boundary_edges[i];
    if (be[0] < 0 || be[0] >= nv || be[1] < 0 || be[1] >= nv || be[0] == be[1]) {
      out.push_back({"structure", strf("boundary edge %zu (%d,%d) is malformed", i, be[0], be[1])});
      indices_ok = false;
    }
  }
  if (!indices_ok) return out;  // incidence analysis below would index out of range

  for (int e = 0; e < ne; ++e) {
    if (!(t.signed_area(e) > 0.0))
      out.push_back({"orientation", strf("element %d has non-positive area %.3e", e, t.signed_area(e))});
  }

  EdgeTable et = build_edge_table(t);
  std::vector<char> on_boundary_list(static_cast<size_t>(et.num_edges()), 0);
  std::set<uint64_t> seen_boundary;
  for (size_t i = 0; i < t.boundary_edges.size(); ++i) {
    const auto& be = t.boundary_edges[i];
    if (!seen_boundary.insert(edge_key(be[0], be[1])).second)
      out.push_back({"boundary", strf("boundary edge (%d,%d) listed twice", be[0], be[1])});
    int id = et.find(be[0], be[1]);
    if (id < 0) {
      out.push_back({"boundary", strf("boundary edge (%d,%d) is not an edge of any element", be[0], be[1])});
      continue;
    }
    on_boundary_list[static_cast<size_t>(id)] = 1;
    if (et.adjacent[static_cast<size_t>(id)][1] != -1)
      out.push_back({"boundary", strf("boundary edge (%d,%d) is shared by two elements", be[0], be[1])});
  }
  for (int k = 0; k < et.num_edges(); ++k) {
    const auto& adj = et.adjacent[static_cast<size_t>(k)];
    const auto& ep = et.edges[static_cast<size_t>(k)];
    if (adj[1] == -2) {
      out.push_back({"conformity", strf("edge (%d,%d) belongs to more than two elements", ep[0], ep[1])});
    } else if (adj[1] == -1 && !on_boundary_list[static_cast<size_t>(k)]) {
      out.push_back({"conformity",
                     strf("edge (%d,%d) of element %d has no neighbor and is not a boundary edge "
                          "(hanging vertex or missing boundary tag)",
                          ep[0], ep[1], adj[0])});
    }
  }
  return out;
}

Triangulation refine(const Triangulation& t, const MarkedSet& marked) {
  for (int idx : marked.indices)
    if (idx < 0 || idx >= t.num_elements())
      throw std::invalid_argument(strf("marked element %d out of range [0,%d)", idx, t.num_elements()));

  EdgeTable et = build_edge_table(t);
  std::vector<char> edge_marked(static_cast<size_t>(et.num_edges()), 0);

  // Mark the refinement edge of every marked element, then close: whenever an
  // element has any marked edge its refinement edge must be marked as well.
  // The closure is the unique least fixpoint, so the queue order is irrelevant
  // for the result.
  std::deque<int> work;
  auto mark_edge = [&](int edge_id) {
    if (edge_marked[static_cast<size_t>(edge_id)]) return;
    edge_marked[static_cast<size_t>(edge_id)] = 1;
    for (int e : et.adjacent[static_cast<size_t>(edge_id)])
      if (e >= 0) work.push_back(e);
  };
  for (int idx : marked.indices) mark_edge(et.element_edges[static_cast<size_t>(idx)][0]);
  while (!work.empty()) {
    int e = work.front();
    work.pop_front();
    const auto& ee = et.element_edges[static_cast<size_t>(e)];
    bool any = edge_marked[static_cast<size_t>(ee[0])] || edge_marked[static_cast<size_t>(ee[1])] ||
               edge_marked[static_cast<size_t>(ee[2])];
    if (any) mark_edge(ee[0]);
  }

  Triangulation out;
  out.vertices = t.vertices;
  std::vector<int> midpoint(static_cast<size_t>(et.num_edges()), -1);
  for (int k = 0; k < et.num_edges(); ++k) {
    if (!edge_marked[static_cast<size_t>(k)]) continue;
    const auto& ep = et.edges[static_cast<size_t>(k)];
    midpoint[static_cast<size_t>(k)] = out.num_vertices();
    out.vertices.push_back(0.5 * (t.vertices[static_cast<size_t>(ep[0])] + t.vertices[static_cast<size_t>(ep[1])]));
  }

  out.elements.reserve(t.elements.size() * 2);
  auto emit = [&](std::array<int, 3> tri, int gen, int par) {
    out.elements.push_back(tri);
    out.generation.push_back(gen);
    out.parent.push_back(par);
  };
  // bisect (a,b,c) with refinement edge a-b and its midpoint m:
  // children (c,a,m) and (b,c,m), both with the edge opposite m as refinement
  // edge, preserving orientation.
  for (int e = 0; e < t.num_elements(); ++e) {
    const auto& tri = t.elements[static_cast<size_t>(e)];
    const auto& ee = et.element_edges[static_cast<size_t>(e)];
    int gen = t.generation.empty() ? 0 : t.generation[static_cast<size_t>(e)];
    bool m0 = edge_marked[static_cast<size_t>(ee[0])];
    bool m1 = edge_marked[static_cast<size_t>(ee[1])];
    bool m2 = edge_marked[static_cast<size_t>(ee[2])];
    if (!m0 && !m1 && !m2) {
      emit(tri, gen, e);
      continue;
    }
    if (!m0)
      throw std::logic_error(strf("closure failed: element %d has a marked edge but an unmarked refinement edge", e));
    int m01 = midpoint[static_cast<size_t>(ee[0])];
    // child A spans (v2, v0, m01) with refinement edge v2-v0 (= local edge 2),
    // child B spans (v1, v2, m01) with refinement edge v1-v2 (= local edge 1).
    if (m2) {
      int m20 = midpoint[static_cast<size_t>(ee[2])];
      emit({m01, tri[2], m20}, gen + 2, e);
      emit({tri[0], m01, m20}, gen + 2, e);
    } else {
      emit({tri[2], tri[0], m01}, gen + 1, e);
    }
    if (m1) {
      int m12 = midpoint[static_cast<size_t>(ee[1])];
      emit({m01, tri[1], m12}, gen + 2, e);
      emit({tri[2], m01, m12}, gen + 2, e);
    } else {
      emit({tri[1], tri[2], m01}, gen + 1, e);
    }
  }

  out.boundary_edges.reserve(t.boundary_edges.size());
  for (const auto& be : t.boundary_edges) {
    int id = et.find(be[0], be[1]);
    int mid = id >= 0 ? midpoint[static_cast<size_t>(id)] : -1;
    if (mid < 0) {
      out.boundary_edges.push_back(be);
    } else {
      out.boundary_edges.push_back({be[0], mid});
      out.boundary_edges.push_back({mid, be[1]});
    }
  }
  return out;
}

Triangulation uniform_refine(const Triangulation& t, int rounds) {
  if (rounds < 0) throw std::invalid_argument("uniform_refine: negative round count");
  Triangulation cur = t;
  for (int r = 0; r < rounds; ++r) cur = refine(cur, MarkedSet::all(cur.num_elements()));
  return cur;
}

namespace {

struct LineReader {
  std::vector<std::string> lines;
  size_t next = 0;

  explicit LineReader(const std::string& text) {
    std::string cur;
    for (char ch : text) {
      if (ch == '\n') {
        lines.push_back(cur);
        cur.clear();
      } else if (ch != '\r') {
        cur += ch;
      }
    }
    if (!cur.empty()) lines.push_back(cur);
  }

  // Returns the next non-blank line and its 1-based number.
  std::pair<std::string, int> next_line() {
    while (next < lines.size()) {
      const std::string& l = lines[next];
      ++next;
      if (l.find_first_not_of(" \t") != std::string::npos) return {l, static_cast<int>(next)};
    }
    throw std::runtime_error("mesh file truncated: expected more lines");
  }
};

std::vector<double> parse_numbers(const std::string& line, int lineno, size_t expected) {
  std::vector<double> vals;
  const char* p = line.c_str();
  while (true) {
    while (*p == ' ' || *p == '\t') ++p;
    if (*p == '\0') break;
    char* end = nullptr;
    double v = std::strtod(p, &end);
    if (end == p)
      throw std::runtime_error(strf("mesh file line %d: cannot parse number at \"%s\"", lineno, p));
    vals.push_back(v);
    p = end;
  }
  if (vals.size() != expected)
    throw std::runtime_error(strf("mesh file line %d: expected %zu values, found %zu", lineno, expected, vals.size()));
  return vals;
}

int to_index(double v, int lineno, int limit) {
  int i = static_cast<int>(v);
  if (static_cast<double>(i) != v)
    throw std::runtime_error(strf("mesh file line %d: expected integer index, got %g", lineno, v));
  if (i < 0 || i >= limit)
    throw std::runtime_error(strf("mesh file line %d: index %d outside [0,%d)", lineno, i, limit));
  return i;
}

}  // namespace

Triangulation load_mesh_text(const std::string& text) {
  LineReader rd(text);
  auto [header, hline] = rd.next_line();
  std::vector<double> counts = parse_numbers(header, hline, 3);
  long nv = static_cast<long>(counts[0]), ne = static_cast<long>(counts[1]), nb = static_cast<long>(counts[2]);
  if (nv < 3 || ne < 1 || nb < 0)
    throw std::runtime_error(strf("mesh file line %d: implausible counts V=%ld N=%ld B=%ld", hline, nv, ne, nb));

  Triangulation t;
  t.vertices.reserve(static_cast<size_t>(nv));
  for (long i = 0; i < nv; ++i) {
    auto [line, no] = rd.next_line();
    std::vector<double> v = parse_numbers(line, no, 2);
    t.vertices.push_back({v[0], v[1]});
  }
  t.elements.reserve(static_cast<size_t>(ne));
  for (long i = 0; i < ne; ++i) {
    auto [line, no] = rd.next_line();
    std::vector<double> v = parse_numbers(line, no, 3);
    t.elements.push_back({to_index(v[0], no, static_cast<int>(nv)), to_index(v[1], no, static_cast<int>(nv)),
                          to_index(v[2], no, static_cast<int>(nv))});
  }
  t.boundary_edges.reserve(static_cast<size_t>(nb));
  for (long i = 0; i < nb; ++i) {
    auto [line, no] = rd.next_line();
    std::vector<double> v = parse_numbers(line, no, 2);
    t.boundary_edges.push_back({to_index(v[0], no, static_cast<int>(nv)), to_index(v[1], no, static_cast<int>(nv))});
  }
  while (rd.next < rd.lines.size()) {
    if (rd.lines[rd.next].find_first_not_of(" \t") != std::string::npos)
      throw std::runtime_error(strf("mesh file line %zu: unexpected trailing content", rd.next + 1));
    ++rd.next;
  }
  t.generation.assign(t.elements.size(), 0);
  return t;
}

Triangulation load_mesh_file(const std::string& path) {
  try {
    return load_mesh_text(read_text_file(path));
  } catch (const std::runtime_error& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
}

std::string save_mesh_text(const Triangulation& t) {
  std::string out = strf("%d %d %zu\n", t.num_vertices(), t.num_elements(), t.boundary_edges.size());
  for (const auto& v : t.vertices) out += strf("%.17g %.17g\n", v.x, v.y);
  for (const auto& e : t.elements) out += strf("%d %d %d\n", e[0], e[1], e[2]);
  for (const auto& b : t.boundary_edges) out += strf("%d %d\n", b[0], b[1]);
  return out;
}

void save_mesh_file(const Triangulation& t, const std::string& path) {
  write_text_file(path, save_mesh_text(t));
}

namespace {

Triangulation finish_builtin(Triangulation t) {
  t.generation.assign(t.elements.size(), 0);
  return t;
}

}  // namespace

Triangulation make_square_mesh() {
  Triangulation t;
  t.vertices = {{0, 0}, {1, 0}, {1, 1}, {0, 1}};
  t.elements = {{2, 0, 1}, {0, 2, 3}};
  t.boundary_edges = {{0, 1}, {1, 2}, {2, 3}, {3, 0}};
  return finish_builtin(std::move(t));
}

Triangulation make_unit_triangle_mesh() {
  Triangulation t;
  t.vertices = {{0, 0}, {1, 0}, {0, 1}};
  t.elements = {{1, 2, 0}};
  t.boundary_edges = {{0, 1}, {1, 2}, {2, 0}};
  return finish_builtin(std::move(t));
}

Triangulation make_lshape_mesh() {
  Triangulation t;
  t.vertices = {{-1, -1}, {0, -1}, {-1, 0}, {0, 0}, {1, 0}, {-1, 1}, {0, 1}, {1, 1}};
  t.elements = {{0, 3, 2}, {3, 0, 1}, {3, 5, 2}, {5, 3, 6}, {3, 7, 6}, {7, 3, 4}};
  t.boundary_edges = {{0, 1}, {1, 3}, {3, 4}, {4, 7}, {7, 6}, {6, 5}, {5, 2}, {2, 0}};
  return finish_builtin(std::move(t));
}

Triangulation make_zshape_mesh() {
  Triangulation t;
  t.vertices = {{-1, -1}, {0, -1}, {1, -1}, {-1, 0}, {0, 0}, {1, 0}, {-1, 1}, {0, 1}, {1, 1}};
  t.elements = {{4, 0, 1}, {2, 4, 1}, {4, 2, 5}, {4, 6, 3}, {6, 4, 7}, {4, 8, 7}, {8, 4, 5}};
  t.boundary_edges = {{4, 0}, {0, 1}, {1, 2}, {2, 5}, {5, 8}, {8, 7}, {7, 6}, {6, 3}, {3, 4}};
  return finish_builtin(std::move(t));
}

Triangulation make_builtin_mesh(const std::string& name) {
  if (name == "square") return make_square_mesh();
  if (name == "triangle") return make_unit_triangle_mesh();
  if (name == "lshape") return make_lshape_mesh();
  if (name == "zshape") return make_zshape_mesh();
  throw std::invalid_argument("unknown built-in mesh \"" + name +
                              "\" (valid: square, triangle, lshape, zshape)");
}

}  // namespace afem
