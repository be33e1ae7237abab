#pragma once

// Reading a portrait: fiber-count labelings (n = 2), the stratified Euler
// characteristic, Thom's cusp parity and Morse data of a linear height
// composed with the map.

#include "portraitforge/portrait.hpp"
#include "portraitforge/portrait_io.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace portraitforge {

class AnalysisError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

enum class Provenance { Given, Propagated, Enumerated };

// Fiber point counts indexed like Portrait::faces.
struct Labeling {
  std::vector<int> counts;
  Provenance provenance = Provenance::Given;

  bool operator==(const Labeling& o) const { return counts == o.counts; }
};

struct MorseDatum {
  double value = 0.0;
  int index = 0;
  Vec2 location = Vec2::Zero();
  std::string element;  // arc or circle carrying the tangency
};

// ---------------------------------------------------------------------------
// Face adjacency across fold arcs and circles.

struct FaceAdjacency {
  std::size_t a = 0, b = 0;
  std::string element;
};

inline std::vector<FaceAdjacency> face_adjacencies(const Portrait& p) {
  std::vector<FaceAdjacency> out;
  for (std::size_t i = 0; i < p.arcs.size(); ++i) {
    auto s = arc_sides(p, i);
    if (s.left && s.right) out.push_back({*s.left, *s.right, p.arcs[i].id});
  }
  for (std::size_t i = 0; i < p.circles.size(); ++i) {
    auto s = circle_sides(p, i);
    if (s.left && s.right) out.push_back({*s.left, *s.right, p.circles[i].id});
  }
  return out;
}

// Labeling from the face fiber= values, if every face has one.
inline std::optional<Labeling> given_labeling(const Portrait& p) {
  Labeling l;
  l.provenance = Provenance::Given;
  for (const Face& f : p.faces) {
    if (!f.fiber) return std::nullopt;
    l.counts.push_back(*f.fiber);
  }
  return l;
}

// Checks the labeling invariants; returns a description of the first failure.
inline std::optional<std::string> labeling_problem(const Portrait& p, const Labeling& l) {
  if (l.counts.size() != p.faces.size()) return "labeling size does not match face count";
  for (std::size_t i = 0; i < p.faces.size(); ++i) {
    if (l.counts[i] < 0 || l.counts[i] % 2 != 0) {
      return "face " + p.faces[i].id + " has count " + std::to_string(l.counts[i]) + " (must be even, >= 0)";
    }
    if (p.faces[i].unbounded && l.counts[i] != 0) return "unbounded face " + p.faces[i].id + " is not 0";
  }
  for (const auto& adj : face_adjacencies(p)) {
    if (std::abs(l.counts[adj.a] - l.counts[adj.b]) != 2) {
      return "counts across " + adj.element + " are " + std::to_string(l.counts[adj.a]) + " and " +
             std::to_string(l.counts[adj.b]) + " (must differ by 2)";
    }
  }
  return std::nullopt;
}

namespace detail {

struct FaceGraph {
  std::vector<std::vector<std::pair<std::size_t, std::string>>> nbrs;
  std::vector<std::size_t> order;         // BFS order from the unbounded face
  std::vector<std::ptrdiff_t> parent;     // BFS tree
  std::vector<std::string> parent_edge;
  std::vector<int> depth;
};

inline FaceGraph face_graph(const Portrait& p, std::size_t root) {
  FaceGraph g;
  const std::size_t n = p.faces.size();
  g.nbrs.resize(n);
  for (const auto& adj : face_adjacencies(p)) {
    g.nbrs[adj.a].push_back({adj.b, adj.element});
    if (adj.a != adj.b) g.nbrs[adj.b].push_back({adj.a, adj.element});
  }
  g.parent.assign(n, -1);
  g.parent_edge.assign(n, "");
  g.depth.assign(n, -1);
  std::deque<std::size_t> queue{root};
  g.depth[root] = 0;
  while (!queue.empty()) {
    const std::size_t f = queue.front();
    queue.pop_front();
    g.order.push_back(f);
    for (const auto& [h, edge] : g.nbrs[f]) {
      if (g.depth[h] >= 0) continue;
      g.depth[h] = g.depth[f] + 1;
      g.parent[h] = static_cast<std::ptrdiff_t>(f);
      g.parent_edge[h] = edge;
      queue.push_back(h);
    }
  }
  return g;
}

inline std::string path_to_root(const Portrait& p, const FaceGraph& g, std::size_t f) {
  std::string s = p.faces[f].id;
  while (g.parent[f] >= 0) {
    s += " -[" + g.parent_edge[f] + "]- ";
    f = static_cast<std::size_t>(g.parent[f]);
    s += p.faces[f].id;
  }
  return s;
}

// Depth-first search over the +-2 choice for each face in BFS order.
// pins: -1 for free faces. Stops after `limit` solutions.
inline void search_labelings(const Portrait& p, const FaceGraph& g, const std::vector<int>& pins,
                             bool allow_negative, std::size_t limit, std::vector<std::vector<int>>& out) {
  const std::size_t n = p.faces.size();
  std::vector<int> value(n, std::numeric_limits<int>::min());
  std::vector<char> assigned(n, 0);
  const std::size_t root = g.order.front();

  auto consistent = [&](std::size_t f, int v) {
    if (!allow_negative && v < 0) return false;
    if (pins[f] >= 0 && pins[f] != v) return false;
    for (const auto& [h, edge] : g.nbrs[f]) {
      if (h == f) return false;
      if (assigned[h] && std::abs(value[h] - v) != 2) return false;
    }
    return true;
  };

  // Iterative DFS: position k in g.order, candidate choice per level.
  std::vector<int> choice(g.order.size(), 0);
  if (!consistent(root, 0)) return;
  value[root] = 0;
  assigned[root] = 1;
  std::size_t k = 1;
  if (g.order.size() == 1) {
    out.push_back(value);
    return;
  }
  choice[1] = 0;
  while (k > 0) {
    if (out.size() >= limit) return;
    const std::size_t f = g.order[k];
    if (assigned[f]) {
      assigned[f] = 0;
    }
    bool placed = false;
    while (choice[k] < 2) {
      const int parent_value = value[static_cast<std::size_t>(g.parent[f])];
      const int v = parent_value + (choice[k] == 0 ? -2 : 2);
      ++choice[k];
      if (consistent(f, v)) {
        value[f] = v;
        assigned[f] = 1;
        placed = true;
        break;
      }
    }
    if (!placed) {
      choice[k] = 0;
      --k;
      continue;
    }
    if (k + 1 == g.order.size()) {
      out.push_back(value);
      continue;  // try the next choice at this level
    }
    ++k;
    choice[k] = 0;
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// propagate

struct Propagation {
  enum class Problem { None, Contradiction, Negative, Ambiguous, Unsupported };
  std::optional<Labeling> labeling;
  Problem problem = Problem::None;
  std::string report;

  bool ok() const { return labeling.has_value(); }
};

// Unique labeling extending the faces' fiber= values (the pinned labels),
// spreading breadth-first from the unbounded face.
inline Propagation propagate(const Portrait& p) {
  Propagation r;
  auto fail = [&](Propagation::Problem kind, std::string msg) {
    r.problem = kind;
    r.report = std::move(msg);
    return r;
  };
  if (p.dimension != 2) return fail(Propagation::Problem::Unsupported, "fiber-count propagation needs n = 2");
  const auto root = p.unbounded_face();
  if (!root) return fail(Propagation::Problem::Unsupported, "portrait has no unbounded face");

  const auto g = detail::face_graph(p, *root);
  std::vector<int> pins(p.faces.size(), -1);
  for (std::size_t f = 0; f < p.faces.size(); ++f) {
    if (g.depth[f] < 0) {
      return fail(Propagation::Problem::Contradiction, "face " + p.faces[f].id + " is not reachable from the unbounded face");
    }
    if (p.faces[f].fiber) {
      const int v = *p.faces[f].fiber;
      if (v % 2 != 0) {
        return fail(Propagation::Problem::Contradiction,
                    "parity contradiction: face " + p.faces[f].id + " pinned to " + std::to_string(v) +
                        " but counts change by 2 across each fold from 0 outside; path " + detail::path_to_root(p, g, f));
      }
      pins[f] = v;
    }
  }
  if (pins[*root] > 0) {
    return fail(Propagation::Problem::Contradiction, "unbounded face " + p.faces[*root].id + " must be 0");
  }
  pins[*root] = 0;

  // Odd cycles in the face graph make any labeling impossible.
  for (const auto& adj : face_adjacencies(p)) {
    if ((g.depth[adj.a] + g.depth[adj.b]) % 2 == 0) {
      return fail(Propagation::Problem::Contradiction,
                  "odd cycle through " + adj.element + ": " + detail::path_to_root(p, g, adj.a) + " and " +
                      detail::path_to_root(p, g, adj.b));
    }
  }
  for (std::size_t f = 0; f < p.faces.size(); ++f) {
    if (pins[f] < 0) continue;
    if ((pins[f] / 2) % 2 != g.depth[f] % 2) {
      return fail(Propagation::Problem::Contradiction,
                  "face " + p.faces[f].id + " pinned to " + std::to_string(pins[f]) +
                      " contradicts the cycle " + detail::path_to_root(p, g, f));
    }
    for (const auto& [h, edge] : g.nbrs[f]) {
      if (pins[h] >= 0 && std::abs(pins[h] - pins[f]) != 2) {
        return fail(Propagation::Problem::Contradiction,
                    "pinned faces " + p.faces[f].id + " and " + p.faces[h].id + " differ by " +
                        std::to_string(std::abs(pins[h] - pins[f])) + " across " + edge);
      }
    }
  }

  std::vector<std::vector<int>> found;
  detail::search_labelings(p, g, pins, false, 2, found);
  if (found.empty()) {
    std::vector<std::vector<int>> relaxed;
    detail::search_labelings(p, g, pins, true, 1, relaxed);
    if (!relaxed.empty()) {
      for (std::size_t f : g.order) {
        if (relaxed.front()[f] < 0) {
          return fail(Propagation::Problem::Negative,
                      "negative count forced on face " + p.faces[f].id + " (" + std::to_string(relaxed.front()[f]) + ")");
        }
      }
    }
    return fail(Propagation::Problem::Contradiction, "pinned labels admit no consistent labeling");
  }
  if (found.size() > 1) {
    std::string faces;
    for (std::size_t f = 0; f < p.faces.size(); ++f) {
      if (found[0][f] != found[1][f]) faces += (faces.empty() ? "" : ", ") + p.faces[f].id;
    }
    return fail(Propagation::Problem::Ambiguous, "labels not determined on faces " + faces + "; pin more faces");
  }
  r.labeling = Labeling{found.front(), Provenance::Propagated};
  return r;
}

// ---------------------------------------------------------------------------
// enumerate_labelings

struct LabelingSet {
  std::vector<Labeling> labelings;  // sorted by counts in natural face-id order
  bool overflow = false;
};

inline constexpr std::size_t default_enumeration_cap = 10000;

// Faces in natural id order; labelings are compared through this order.
inline std::vector<std::size_t> faces_in_id_order(const Portrait& p) {
  std::vector<std::size_t> idx(p.faces.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return detail::natural_less(p.faces[a].id, p.faces[b].id);
  });
  return idx;
}

inline LabelingSet enumerate_labelings(const Portrait& p, std::size_t max_count = default_enumeration_cap) {
  LabelingSet out;
  if (p.dimension != 2) throw AnalysisError("labeling enumeration needs n = 2");
  const auto root = p.unbounded_face();
  if (!root) throw AnalysisError("portrait has no unbounded face");
  const auto g = detail::face_graph(p, *root);
  if (g.order.size() != p.faces.size()) return out;  // disconnected face graph: nothing admissible

  std::vector<int> pins(p.faces.size(), -1);
  std::vector<std::vector<int>> found;
  detail::search_labelings(p, g, pins, false, max_count + 1, found);
  if (found.size() > max_count) {
    out.overflow = true;
    found.resize(max_count);
  }
  const auto order = faces_in_id_order(p);
  std::sort(found.begin(), found.end(), [&](const auto& a, const auto& b) {
    for (std::size_t f : order) {
      if (a[f] != b[f]) return a[f] < b[f];
    }
    return false;
  });
  found.erase(std::unique(found.begin(), found.end()), found.end());
  for (auto& counts : found) out.labelings.push_back({std::move(counts), Provenance::Enumerated});
  return out;
}

// ---------------------------------------------------------------------------
// Stratified Euler characteristic

// Faces meeting a vertex: the sides of its incident arcs.
inline std::vector<std::size_t> faces_at_vertex(const Portrait& p, std::size_t v) {
  std::vector<std::size_t> out;
  const std::string& id = p.vertices[v].id;
  for (std::size_t a = 0; a < p.arcs.size(); ++a) {
    if (p.arcs[a].from != id && p.arcs[a].to != id) continue;
    auto s = arc_sides(p, a);
    if (s.left) out.push_back(*s.left);
    if (s.right) out.push_back(*s.right);
  }
  return out;
}

// Sum over strata of chi(fiber) * chi_c(stratum). For n = 2 the fiber
// counts come from `labels`: an open arc point has n_low + 1 preimages, a
// cusp value n_low, a crossing value n_min + 2. For n >= 3 the face, arc,
// circle and vertex chi= labels of the portrait are used.
inline int stratified_chi(const Portrait& p, const Labeling& labels) {
  if (p.dimension != 2) throw AnalysisError("count labelings apply to n = 2; use stratified_chi(p) for n >= 3");
  if (labels.counts.size() != p.faces.size()) throw AnalysisError("missing label: labeling does not cover every face");
  const auto chi_c = faces_chi_c(p);
  int total = 0;
  for (std::size_t f = 0; f < p.faces.size(); ++f) total += labels.counts[f] * chi_c[f];
  for (std::size_t a = 0; a < p.arcs.size(); ++a) {
    auto s = arc_sides(p, a);
    if (!s.left || !s.right) throw AnalysisError("arc " + p.arcs[a].id + " has an unresolved side");
    const int low = std::min(labels.counts[*s.left], labels.counts[*s.right]);
    total -= low + 1;
  }
  for (std::size_t v = 0; v < p.vertices.size(); ++v) {
    const auto faces = faces_at_vertex(p, v);
    if (faces.empty()) throw AnalysisError("vertex " + p.vertices[v].id + " has no incident arcs");
    int low = std::numeric_limits<int>::max();
    for (std::size_t f : faces) low = std::min(low, labels.counts[f]);
    total += p.vertices[v].kind == VertexKind::Cusp ? low : low + 2;
  }
  return total;
}

inline int stratified_chi(const Portrait& p) {
  if (p.dimension == 2) {
    auto l = given_labeling(p);
    if (!l) throw AnalysisError("missing label: every face needs fiber=");
    return stratified_chi(p, *l);
  }
  const auto chi_c = faces_chi_c(p);
  int total = 0;
  for (std::size_t f = 0; f < p.faces.size(); ++f) {
    if (!p.faces[f].chi) throw AnalysisError("missing label: face " + p.faces[f].id + " needs chi=");
    total += *p.faces[f].chi * chi_c[f];
  }
  for (const Arc& a : p.arcs) {
    if (!a.chi) throw AnalysisError("missing label: arc " + a.id + " needs chi=");
    total -= *a.chi;
  }
  for (const Circle& c : p.circles) {
    if (!c.chi) throw AnalysisError("missing label: circle " + c.id + " needs chi=");
  }
  for (const Vertex& v : p.vertices) {
    if (!v.chi) throw AnalysisError("missing label: vertex " + v.id + " needs chi=");
    total += *v.chi;
  }
  return total;
}

// Thom: the number of cusps is congruent to chi(M) mod 2.
inline bool thom_parity(const Portrait& p, int chi) {
  const long long diff = static_cast<long long>(p.cusp_count()) - chi;
  return diff % 2 == 0;
}

// ---------------------------------------------------------------------------
// Morse data of gamma(w) = w . (cos theta, sin theta) composed with the map.
//
// Critical points sit over contour points whose tangent is perpendicular to
// the gradient of gamma. The index follows from the local shape: with the
// concave side the one the contour turns toward and the rich side the face
// with more preimages, a local minimum of gamma along the contour with the
// rich side concave has index 0, a local maximum with the rich side concave
// index 2, anything else index 1.

namespace detail {

inline double cross2(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

inline void tangencies_on_polyline(const Polyline2& pts, bool closed, const Vec2& u, int left_count,
                                   int right_count, const std::string& element, std::vector<MorseDatum>& out) {
  const std::size_t n = pts.size();
  const std::size_t segs = closed ? n : n - 1;
  std::vector<Vec2> d(segs);
  std::vector<double> s(segs);
  for (std::size_t k = 0; k < segs; ++k) {
    d[k] = pts[(k + 1) % n] - pts[k];
    s[k] = d[k].dot(u);
    if (d[k].norm() == 0.0) throw AnalysisError("repeated point on " + element);
    if (std::abs(s[k]) <= 1e-12 * d[k].norm()) {
      throw AnalysisError("degenerate direction: a segment of " + element + " is perpendicular to the height gradient");
    }
  }
  const bool rich_left = left_count > right_count;
  if (left_count == right_count) throw AnalysisError("faces on both sides of " + element + " have equal counts");
  const std::size_t first = closed ? 0 : 1;
  for (std::size_t k = first; k < segs; ++k) {
    const std::size_t prev = (k + segs - 1) % segs;
    if (s[prev] * s[k] >= 0.0) continue;
    const bool minimum = s[prev] < 0.0;
    const double turn = cross2(d[prev], d[k]);
    const bool concave_left = turn > 0.0;
    const bool rich_concave = concave_left == rich_left;
    MorseDatum m;
    m.location = pts[k];
    m.value = pts[k].dot(u);
    m.element = element;
    m.index = rich_concave ? (minimum ? 0 : 2) : 1;
    out.push_back(m);
  }
}

}  // namespace detail

inline std::vector<MorseDatum> levine_morse_data(const Portrait& p, const Labeling& labels, double theta) {
  if (p.dimension != 2) throw AnalysisError("Morse data is implemented for n = 2");
  if (labels.counts.size() != p.faces.size()) throw AnalysisError("missing labeling");
  if (!p.has_geometry()) throw AnalysisError("missing geometry: every arc and circle needs pts=");
  const Vec2 u(std::cos(theta), std::sin(theta));
  std::vector<MorseDatum> out;

  for (std::size_t i = 0; i < p.arcs.size(); ++i) {
    const Arc& a = p.arcs[i];
    auto s = arc_sides(p, i);
    detail::tangencies_on_polyline(a.points, false, u, labels.counts[*s.left], labels.counts[*s.right], a.id, out);
  }
  for (std::size_t i = 0; i < p.circles.size(); ++i) {
    const Circle& c = p.circles[i];
    auto s = circle_sides(p, i);
    detail::tangencies_on_polyline(c.points, true, u, labels.counts[*s.left], labels.counts[*s.right], c.id, out);
  }

  // Vertices: the height must be monotone through crossings, and cusp
  // tangents must not be perpendicular to its gradient.
  for (std::size_t v = 0; v < p.vertices.size(); ++v) {
    const std::string& id = p.vertices[v].id;
    std::vector<Vec2> leaving;
    for (const Arc& a : p.arcs) {
      if (a.from == id) leaving.push_back(a.points[1] - a.points[0]);
      if (a.to == id) leaving.push_back(a.points[a.points.size() - 2] - a.points.back());
    }
    for (Vec2& d : leaving) d.normalize();
    if (p.vertices[v].kind == VertexKind::Cusp) {
      for (const Vec2& d : leaving) {
        if (std::abs(d.dot(u)) < 1e-9) throw AnalysisError("degenerate direction: cusp " + id + " tangent is perpendicular to the height gradient");
      }
      continue;
    }
    if (leaving.size() != 4) continue;
    std::vector<char> used(4, 0);
    for (std::size_t a = 0; a < 4; ++a) {
      if (used[a]) continue;
      std::size_t best = a;
      double best_dot = 2.0;
      for (std::size_t b = 0; b < 4; ++b) {
        if (b == a || used[b]) continue;
        const double dot = leaving[a].dot(leaving[b]);
        if (dot < best_dot) {
          best_dot = dot;
          best = b;
        }
      }
      used[a] = used[best] = 1;
      const double s_in = (-leaving[a]).dot(u);
      const double s_out = leaving[best].dot(u);
      if (s_in * s_out <= 0.0) {
        throw AnalysisError("degenerate direction: tangency at crossing " + id);
      }
    }
  }

  std::sort(out.begin(), out.end(), [](const MorseDatum& a, const MorseDatum& b) {
    if (a.value != b.value) return a.value < b.value;
    return a.index < b.index;
  });
  return out;
}

inline int morse_alternating_sum(const std::vector<MorseDatum>& data) {
  int s = 0;
  for (const auto& m : data) s += (m.index % 2 == 0) ? 1 : -1;
  return s;
}

}  // namespace portraitforge
