#pragma once

// Combinatorial planar portraits: cusp/crossing vertices, fold arcs,
// vertex-free fold circles and labelled faces, with optional geometry.

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

namespace portraitforge {

using Vec2 = Eigen::Vector2d;
using Polyline2 = std::vector<Vec2>;

enum class VertexKind { Cusp, Crossing };

struct Vertex {
  std::string id;
  VertexKind kind = VertexKind::Cusp;
  std::optional<Vec2> position;
  std::optional<int> cusp_index;  // canonical min(k, n-2-k), cusps only
  std::optional<int> chi;         // fiber Euler characteristic, n >= 3 only
};

// Fold arc between two vertices (possibly the same one). Points run from
// `from` to `to`; `left` is the face on the left of that direction.
struct Arc {
  std::string id;
  std::string from, to;
  std::string left, right;
  Polyline2 points;
  std::optional<int> chi;
};

// Vertex-free closed fold curve. Points are implicitly closed (the first
// point is not repeated) and run counter-clockwise, so `left` is the inside.
struct Circle {
  std::string id;
  std::string left, right;
  Polyline2 points;
  std::optional<int> chi;
};

struct EdgeRef {
  enum class Kind { Arc, Circle };
  Kind kind = Kind::Arc;
  std::size_t index = 0;
  bool forward = true;  // traversed with the face on its left

  bool operator==(const EdgeRef&) const = default;
};

using BoundaryWalk = std::vector<EdgeRef>;

struct Face {
  std::string id;
  std::optional<int> fiber;       // n = 2: number of preimage points
  std::optional<int> chi;         // n >= 3: Euler characteristic of the fiber
  std::optional<int> components;  // n >= 3: optional component count of the fiber
  bool unbounded = false;
  std::vector<BoundaryWalk> walks;
};

struct Portrait {
  int dimension = 2;
  std::vector<Vertex> vertices;
  std::vector<Arc> arcs;
  std::vector<Circle> circles;
  std::vector<Face> faces;

  std::optional<std::size_t> vertex_index(const std::string& id) const { return find(vertices, id); }
  std::optional<std::size_t> arc_index(const std::string& id) const { return find(arcs, id); }
  std::optional<std::size_t> circle_index(const std::string& id) const { return find(circles, id); }
  std::optional<std::size_t> face_index(const std::string& id) const { return find(faces, id); }

  std::optional<std::size_t> unbounded_face() const {
    for (std::size_t i = 0; i < faces.size(); ++i) {
      if (faces[i].unbounded) return i;
    }
    return std::nullopt;
  }

  std::size_t cusp_count() const {
    return static_cast<std::size_t>(std::count_if(vertices.begin(), vertices.end(), [](const Vertex& v) {
      return v.kind == VertexKind::Cusp;
    }));
  }

  std::size_t crossing_count() const { return vertices.size() - cusp_count(); }

  bool has_geometry() const {
    if (arcs.empty() && circles.empty()) return false;
    for (const auto& a : arcs) {
      if (a.points.size() < 2) return false;
    }
    for (const auto& c : circles) {
      if (c.points.size() < 3) return false;
    }
    return true;
  }

private:
  template <class T>
  static std::optional<std::size_t> find(const std::vector<T>& items, const std::string& id) {
    for (std::size_t i = 0; i < items.size(); ++i) {
      if (items[i].id == id) return i;
    }
    return std::nullopt;
  }
};

inline int canonical_cusp_index(int kappa, int dimension) {
  return std::min(kappa, dimension - 2 - kappa);
}

// Faces on either side of an arc or circle, as indices (nullopt when the id
// does not resolve).
struct EdgeSides {
  std::optional<std::size_t> left, right;
};

inline EdgeSides arc_sides(const Portrait& p, std::size_t arc) {
  return {p.face_index(p.arcs[arc].left), p.face_index(p.arcs[arc].right)};
}

inline EdgeSides circle_sides(const Portrait& p, std::size_t circle) {
  return {p.face_index(p.circles[circle].left), p.face_index(p.circles[circle].right)};
}

// ---------------------------------------------------------------------------
// Boundary walks

namespace detail {

struct Dsu {
  std::vector<std::size_t> parent;
  explicit Dsu(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  std::size_t find(std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  void unite(std::size_t a, std::size_t b) { parent[find(a)] = find(b); }
};

}  // namespace detail

// Tail and head vertex of an arc half-edge.
inline std::pair<std::size_t, std::size_t> half_edge_ends(const Portrait& p, const EdgeRef& e) {
  const Arc& a = p.arcs[e.index];
  const std::size_t from = *p.vertex_index(a.from);
  const std::size_t to = *p.vertex_index(a.to);
  return e.forward ? std::make_pair(from, to) : std::make_pair(to, from);
}

// Boundary walks of one face: one closed walk per connected piece of the
// contour adjacent to the face. Arc walks are Euler circuits of the face's
// half-edges; when the in/out degrees do not balance the walk is left open,
// which validate() reports. References must resolve.
inline std::vector<BoundaryWalk> compute_boundary_walks(const Portrait& p, std::size_t face) {
  std::vector<BoundaryWalk> walks;
  const std::string& fid = p.faces[face].id;

  for (std::size_t c = 0; c < p.circles.size(); ++c) {
    const Circle& circle = p.circles[c];
    if (circle.left == fid) walks.push_back({{EdgeRef::Kind::Circle, c, true}});
    if (circle.right == fid) walks.push_back({{EdgeRef::Kind::Circle, c, false}});
  }

  std::vector<EdgeRef> half_edges;
  for (std::size_t a = 0; a < p.arcs.size(); ++a) {
    if (p.arcs[a].left == fid) half_edges.push_back({EdgeRef::Kind::Arc, a, true});
    if (p.arcs[a].right == fid) half_edges.push_back({EdgeRef::Kind::Arc, a, false});
  }
  if (half_edges.empty()) return walks;

  detail::Dsu dsu(p.vertices.size());
  for (const auto& e : half_edges) {
    auto [t, h] = half_edge_ends(p, e);
    dsu.unite(t, h);
  }
  std::map<std::size_t, std::vector<std::size_t>> by_component;
  for (std::size_t i = 0; i < half_edges.size(); ++i) {
    by_component[dsu.find(half_edge_ends(p, half_edges[i]).first)].push_back(i);
  }

  for (const auto& [root, members] : by_component) {
    // Hierholzer on the directed multigraph of this component.
    std::map<std::size_t, std::vector<std::size_t>> out;
    for (auto it = members.rbegin(); it != members.rend(); ++it) {
      out[half_edge_ends(p, half_edges[*it]).first].push_back(*it);
    }
    std::vector<std::size_t> circuit, edge_stack;
    std::size_t start = half_edge_ends(p, half_edges[members.front()]).first;
    std::vector<std::size_t> vstack{start};
    while (!vstack.empty()) {
      const std::size_t v = vstack.back();
      auto& outs = out[v];
      if (!outs.empty()) {
        const std::size_t e = outs.back();
        outs.pop_back();
        edge_stack.push_back(e);
        vstack.push_back(half_edge_ends(p, half_edges[e]).second);
      } else {
        vstack.pop_back();
        if (!edge_stack.empty()) {
          circuit.push_back(edge_stack.back());
          edge_stack.pop_back();
        }
      }
    }
    BoundaryWalk walk;
    for (auto it = circuit.rbegin(); it != circuit.rend(); ++it) walk.push_back(half_edges[*it]);
    // Half-edges unreachable from the start (unbalanced degrees) are appended
    // so that every half-edge still belongs to exactly one walk.
    for (const auto& [v, outs] : out) {
      for (std::size_t e : outs) walk.push_back(half_edges[e]);
    }
    walks.push_back(std::move(walk));
  }
  return walks;
}

// Fills Face::walks for every face. Call after construction or edits.
inline void build_boundary_walks(Portrait& p) {
  for (std::size_t f = 0; f < p.faces.size(); ++f) p.faces[f].walks = compute_boundary_walks(p, f);
}

// Compactly-supported Euler characteristic of each open face: 2 - b for a
// bounded face with b boundary walks, 1 - b for the unbounded one.
inline std::vector<int> faces_chi_c(const Portrait& p) {
  std::vector<int> out;
  out.reserve(p.faces.size());
  for (const Face& f : p.faces) {
    const int b = static_cast<int>(f.walks.size());
    out.push_back(f.unbounded ? 1 - b : 2 - b);
  }
  return out;
}

inline std::map<std::string, int> faces_chi_c_by_id(const Portrait& p) {
  std::map<std::string, int> out;
  const auto values = faces_chi_c(p);
  for (std::size_t i = 0; i < p.faces.size(); ++i) out[p.faces[i].id] = values[i];
  return out;
}

// Number of connected pieces of the contour: components of the vertex/arc
// graph plus one per vertex-free circle.
inline int contour_components(const Portrait& p) {
  detail::Dsu dsu(p.vertices.size());
  for (const Arc& a : p.arcs) {
    auto f = p.vertex_index(a.from), t = p.vertex_index(a.to);
    if (f && t) dsu.unite(*f, *t);
  }
  int n = static_cast<int>(p.circles.size());
  for (std::size_t v = 0; v < p.vertices.size(); ++v) {
    if (dsu.find(v) == v) ++n;
  }
  return n;
}

// Whole-plane stratification sum: sum of face chi_c, minus open arcs, plus vertices.
inline int stratification_sum(const Portrait& p) {
  const auto chi = faces_chi_c(p);
  return std::accumulate(chi.begin(), chi.end(), 0) - static_cast<int>(p.arcs.size()) +
         static_cast<int>(p.vertices.size());
}

// ---------------------------------------------------------------------------
// Validation

struct Violation {
  std::string element;  // offending id, or "portrait"
  std::string rule;
  std::string message;
};

inline std::vector<Violation> validate(const Portrait& p) {
  std::vector<Violation> out;
  auto report = [&](const std::string& element, const std::string& rule, const std::string& msg) {
    out.push_back({element, rule, msg});
  };
  const int n = p.dimension;
  if (n < 2) report("portrait", "dimension", "source dimension must be at least 2");

  {
    std::map<std::string, int> seen;
    for (const auto& v : p.vertices) ++seen[v.id];
    for (const auto& a : p.arcs) ++seen[a.id];
    for (const auto& c : p.circles) ++seen[c.id];
    for (const auto& f : p.faces) ++seen[f.id];
    for (const auto& [id, count] : seen) {
      if (count > 1) report(id, "duplicate-id", "id declared " + std::to_string(count) + " times");
    }
  }

  bool refs_ok = true;
  std::vector<int> degree(p.vertices.size(), 0);
  for (const Arc& a : p.arcs) {
    for (const std::string* end : {&a.from, &a.to}) {
      if (auto v = p.vertex_index(*end)) {
        ++degree[*v];
      } else {
        refs_ok = false;
        report(a.id, "unknown-reference", "arc end refers to undeclared vertex " + *end);
      }
    }
    for (const std::string* side : {&a.left, &a.right}) {
      if (!p.face_index(*side)) {
        refs_ok = false;
        report(a.id, "unknown-reference", "arc side refers to undeclared face " + *side);
      }
    }
    if (a.chi && n == 2) report(a.id, "stratum-label", "stratum chi labels apply only for n >= 3");
  }
  for (const Circle& c : p.circles) {
    for (const std::string* side : {&c.left, &c.right}) {
      if (!p.face_index(*side)) {
        refs_ok = false;
        report(c.id, "unknown-reference", "circle side refers to undeclared face " + *side);
      }
    }
    if (c.chi && n == 2) report(c.id, "stratum-label", "stratum chi labels apply only for n >= 3");
  }

  for (std::size_t i = 0; i < p.vertices.size(); ++i) {
    const Vertex& v = p.vertices[i];
    const int want = v.kind == VertexKind::Cusp ? 2 : 4;
    if (degree[i] != want) {
      report(v.id, "degree",
             std::string(v.kind == VertexKind::Cusp ? "cusp" : "crossing") + " has " +
                 std::to_string(degree[i]) + " arc-ends, expected " + std::to_string(want));
    }
    if (v.cusp_index) {
      if (v.kind != VertexKind::Cusp) {
        report(v.id, "cusp-index", "index given on a crossing");
      } else if (*v.cusp_index < 0 || *v.cusp_index > n - 2) {
        report(v.id, "cusp-index", "index outside [0, n-2]");
      } else if (*v.cusp_index != canonical_cusp_index(*v.cusp_index, n)) {
        report(v.id, "cusp-index", "index not stored in canonical form min(k, n-2-k)");
      }
    }
    if (v.chi && n == 2) report(v.id, "stratum-label", "stratum chi labels apply only for n >= 3");
  }

  // Geometry: polyline ends sit on the endpoint positions.
  for (const Arc& a : p.arcs) {
    if (a.points.empty()) continue;
    if (a.points.size() < 2) {
      report(a.id, "geometry", "arc polyline needs at least 2 points");
      continue;
    }
    auto check_end = [&](const std::string& vid, const Vec2& pt, const char* which) {
      auto vi = p.vertex_index(vid);
      if (!vi || !p.vertices[*vi].position) return;
      const Vec2& pos = *p.vertices[*vi].position;
      const double tol = 1e-6 * std::max(1.0, pos.cwiseAbs().maxCoeff());
      if ((pos - pt).norm() > tol) {
        report(a.id, "geometry", std::string("polyline ") + which + " does not match vertex " + vid);
      }
    };
    check_end(a.from, a.points.front(), "start");
    check_end(a.to, a.points.back(), "end");
  }
  for (const Circle& c : p.circles) {
    if (c.points.empty()) continue;
    if (c.points.size() < 3) {
      report(c.id, "geometry", "circle polyline needs at least 3 points");
      continue;
    }
    double area2 = 0.0;
    for (std::size_t i = 0; i < c.points.size(); ++i) {
      const Vec2& u = c.points[i];
      const Vec2& w = c.points[(i + 1) % c.points.size()];
      area2 += u.x() * w.y() - u.y() * w.x();
    }
    if (area2 <= 0.0) report(c.id, "geometry", "circle points must run counter-clockwise (left = inside)");
  }

  // Faces and labels.
  int unbounded = 0;
  for (const Face& f : p.faces) {
    if (f.unbounded) ++unbounded;
    if (n == 2) {
      if (f.chi) report(f.id, "label-kind", "n = 2 faces take fiber=, not chi=");
      if (f.fiber && (*f.fiber < 0 || *f.fiber % 2 != 0)) {
        report(f.id, "fiber-parity", "n = 2 fiber counts must be even and non-negative");
      }
    } else {
      if (f.fiber) report(f.id, "label-kind", "n >= 3 faces take chi=, not fiber=");
    }
    if (f.unbounded && ((f.fiber && *f.fiber != 0) || (f.chi && *f.chi != 0))) {
      report(f.id, "outer-fiber", "the unbounded face must carry the empty fiber");
    }
  }
  if (unbounded != 1) {
    report("portrait", "unbounded-count",
           "expected exactly one unbounded face, found " + std::to_string(unbounded));
  }

  if (!refs_ok) return out;

  // Euler relation of the planar map: V - E + F = 1 + C.
  {
    const int V = static_cast<int>(p.vertices.size());
    const int E = static_cast<int>(p.arcs.size());
    const int F = static_cast<int>(p.faces.size());
    const int C = contour_components(p);
    if (V - E + F != 1 + C) {
      report("portrait", "euler",
             "V - E + F = " + std::to_string(V - E + F) + " but 1 + components = " + std::to_string(1 + C));
    }
  }

  // Boundary walks close and cover every half-edge of the face.
  for (std::size_t fi = 0; fi < p.faces.size(); ++fi) {
    const Face& f = p.faces[fi];
    const auto expected = compute_boundary_walks(p, fi);
    if (f.walks.size() != expected.size()) {
      report(f.id, "walk", "stored boundary walks are stale; rebuild them");
      continue;
    }
    for (const BoundaryWalk& w : f.walks) {
      if (w.empty()) {
        report(f.id, "walk", "empty boundary walk");
        continue;
      }
      if (w.size() == 1 && w.front().kind == EdgeRef::Kind::Circle) continue;
      bool closes = true;
      for (std::size_t i = 0; i < w.size(); ++i) {
        if (w[i].kind != EdgeRef::Kind::Arc || w[(i + 1) % w.size()].kind != EdgeRef::Kind::Arc) {
          closes = false;
          break;
        }
        const auto head = half_edge_ends(p, w[i]).second;
        const auto next_tail = half_edge_ends(p, w[(i + 1) % w.size()]).first;
        if (head != next_tail) {
          closes = false;
          break;
        }
      }
      if (!closes) report(f.id, "walk", "boundary walk does not close");
    }
    if (f.walks.empty() && p.faces.size() > 1) report(f.id, "walk", "face has no boundary");
  }
  return out;
}

}  // namespace portraitforge
