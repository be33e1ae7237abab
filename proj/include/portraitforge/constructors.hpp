#pragma once

// Portrait constructors: genus-g surfaces, toric surfaces from Delzant
// polygons, projective planes, sphere bundles over spheres, and lifts of
// Morse functions.

#include "portraitforge/portrait.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace portraitforge {

class ConstructionError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

namespace detail {

inline Polyline2 circle_points(const Vec2& center, double radius, int count = 64) {
  Polyline2 pts;
  for (int i = 0; i < count; ++i) {
    const double t = 2.0 * std::numbers::pi * i / count;
    pts.push_back(center + radius * Vec2(std::cos(t), std::sin(t)));
  }
  return pts;
}

inline Face make_face(std::string id, std::optional<int> fiber, std::optional<int> chi, bool unbounded = false) {
  Face f;
  f.id = std::move(id);
  f.fiber = fiber;
  f.chi = chi;
  f.unbounded = unbounded;
  return f;
}

inline Circle make_circle(std::string id, std::string inside, std::string outside, Polyline2 pts,
                          std::optional<int> chi = std::nullopt) {
  Circle c;
  c.id = std::move(id);
  c.left = std::move(inside);
  c.right = std::move(outside);
  c.points = std::move(pts);
  c.chi = chi;
  return c;
}

}  // namespace detail

// One outer circle around g small circles: fiber 2 between them, 0 inside
// the small ones and outside.
inline Portrait genus_surface_portrait(int g) {
  if (g < 0) throw ConstructionError("genus must be >= 0");
  Portrait p;
  p.dimension = 2;
  const double outer_r = g == 0 ? 1.0 : (g - 1) / 2.0 + 1.5;
  p.faces.push_back(detail::make_face("f0", 0, std::nullopt, true));
  p.faces.push_back(detail::make_face("f1", 2, std::nullopt));
  p.circles.push_back(detail::make_circle("c1", "f1", "f0", detail::circle_points(Vec2::Zero(), outer_r)));
  for (int k = 0; k < g; ++k) {
    const std::string face = "f" + std::to_string(k + 2);
    p.faces.push_back(detail::make_face(face, 0, std::nullopt));
    const Vec2 center(k - (g - 1) / 2.0, 0.0);
    p.circles.push_back(detail::make_circle("c" + std::to_string(k + 2), face, "f1", detail::circle_points(center, 0.3)));
  }
  build_boundary_walks(p);
  return p;
}

using LatticePoint = std::pair<long long, long long>;

namespace detail {

inline std::string format_lattice(const LatticePoint& v) {
  return "(" + std::to_string(v.first) + "," + std::to_string(v.second) + ")";
}

inline LatticePoint primitive(long long dx, long long dy) {
  const long long g = std::gcd(dx, dy);
  return {dx / g, dy / g};
}

}  // namespace detail

// Moment-polygon portrait of a regular toric surface: n = 4, a cusp of
// index 1 at each polygon vertex (point fibers), circle fibers over the
// edges, torus fibers over the interior.
inline Portrait toric_portrait(std::vector<LatticePoint> polygon) {
  const std::size_t k = polygon.size();
  if (k < 3) throw ConstructionError("polygon needs at least 3 vertices");
  long long twice_area = 0;
  for (std::size_t i = 0; i < k; ++i) {
    const auto& a = polygon[i];
    const auto& b = polygon[(i + 1) % k];
    twice_area += a.first * b.second - a.second * b.first;
  }
  if (twice_area == 0) throw ConstructionError("degenerate polygon");
  if (twice_area < 0) std::reverse(polygon.begin(), polygon.end());
  for (std::size_t i = 0; i < k; ++i) {
    const auto& prev = polygon[(i + k - 1) % k];
    const auto& v = polygon[i];
    const auto& next = polygon[(i + 1) % k];
    const long long ax = v.first - prev.first, ay = v.second - prev.second;
    const long long bx = next.first - v.first, by = next.second - v.second;
    if ((ax == 0 && ay == 0) || (bx == 0 && by == 0)) throw ConstructionError("repeated vertex " + detail::format_lattice(v));
    if (ax * by - ay * bx <= 0) throw ConstructionError("polygon is not convex at vertex " + detail::format_lattice(v));
  }
  for (std::size_t i = 0; i < k; ++i) {
    const auto& prev = polygon[(i + k - 1) % k];
    const auto& v = polygon[i];
    const auto& next = polygon[(i + 1) % k];
    const auto u = detail::primitive(next.first - v.first, next.second - v.second);
    const auto w = detail::primitive(prev.first - v.first, prev.second - v.second);
    const long long det = u.first * w.second - u.second * w.first;
    if (det != 1 && det != -1) {
      throw ConstructionError("Delzant condition fails at vertex " + detail::format_lattice(v) +
                              ": edge primitives have determinant " + std::to_string(det));
    }
  }
  Portrait p;
  p.dimension = 4;
  p.faces.push_back(detail::make_face("f0", std::nullopt, 0, true));
  p.faces.push_back(detail::make_face("f1", std::nullopt, 0));
  for (std::size_t i = 0; i < k; ++i) {
    Vertex v;
    v.id = "v" + std::to_string(i + 1);
    v.kind = VertexKind::Cusp;
    v.position = Vec2(static_cast<double>(polygon[i].first), static_cast<double>(polygon[i].second));
    v.cusp_index = 1;
    v.chi = 1;
    p.vertices.push_back(v);
  }
  for (std::size_t i = 0; i < k; ++i) {
    Arc a;
    a.id = "a" + std::to_string(i + 1);
    a.from = p.vertices[i].id;
    a.to = p.vertices[(i + 1) % k].id;
    a.left = "f1";  // counter-clockwise boundary: interior on the left
    a.right = "f0";
    a.chi = 0;
    const Vec2 s = *p.vertices[i].position, e = *p.vertices[(i + 1) % k].position;
    for (int t = 0; t <= 8; ++t) a.points.push_back(s + (e - s) * (t / 8.0));
    p.arcs.push_back(a);
  }
  build_boundary_walks(p);
  return p;
}

enum class ProjectiveField { R, C, H };

namespace detail {

// Three-cusped closed curve (a deltoid) made of three arcs.
inline void add_deltoid(Portrait& p, double scale, const std::string& inside, const std::string& outside) {
  auto point = [scale](double t) {
    return Vec2(scale * (2.0 * std::cos(t) + std::cos(2.0 * t)), scale * (2.0 * std::sin(t) - std::sin(2.0 * t)));
  };
  for (int i = 0; i < 3; ++i) {
    Vertex v;
    v.id = "v" + std::to_string(i + 1);
    v.kind = VertexKind::Cusp;
    v.position = point(2.0 * std::numbers::pi * i / 3.0);
    p.vertices.push_back(v);
  }
  // Increasing t runs counter-clockwise, so the inside is on the left.
  for (int i = 0; i < 3; ++i) {
    Arc a;
    a.id = "a" + std::to_string(i + 1);
    a.from = "v" + std::to_string(i + 1);
    a.to = "v" + std::to_string((i + 1) % 3 + 1);
    a.left = inside;
    a.right = outside;
    for (int s = 0; s <= 32; ++s) {
      a.points.push_back(point(2.0 * std::numbers::pi * (i + s / 32.0) / 3.0));
    }
    a.points.back() = *p.vertices[(i + 1) % 3].position;
    p.arcs.push_back(a);
  }
}

}  // namespace detail

inline Portrait projective_plane_portrait(ProjectiveField k) {
  if (k == ProjectiveField::C) return toric_portrait({{0, 0}, {1, 0}, {0, 1}});
  Portrait p;
  if (k == ProjectiveField::R) {
    // A fold oval around a deltoid: 2 sheets over the ring, 4 inside the
    // deltoid; chi = 4 - 3*3 + 3*2 = 1.
    p.dimension = 2;
    p.faces.push_back(detail::make_face("f0", 0, std::nullopt, true));
    p.faces.push_back(detail::make_face("f1", 2, std::nullopt));
    p.faces.push_back(detail::make_face("f2", 4, std::nullopt));
    p.circles.push_back(detail::make_circle("c1", "f1", "f0", detail::circle_points(Vec2::Zero(), 2.0)));
    detail::add_deltoid(p, 0.5, "f2", "f1");
    for (auto& v : p.vertices) v.cusp_index = 0;
  } else {
    // n = 8, three cusps of index 3; point fibers over the cusps.
    p.dimension = 8;
    p.faces.push_back(detail::make_face("f0", std::nullopt, 0, true));
    p.faces.push_back(detail::make_face("f1", std::nullopt, 0));
    detail::add_deltoid(p, 0.5, "f1", "f0");
    for (auto& v : p.vertices) {
      v.cusp_index = 3;
      v.chi = 1;
    }
    for (auto& a : p.arcs) a.chi = 0;
  }
  build_boundary_walks(p);
  return p;
}

inline int sphere_chi(int d) { return d % 2 == 0 ? 2 : 0; }

// Template portrait of an S^q-bundle over S^p with a section, dimension
// p + q: two nested fold circles.
inline Portrait sphere_bundle_portrait(int sp, int sq) {
  if (sp < 1 || sq < 1) throw ConstructionError("sphere bundle needs p, q >= 1");
  if (sp + sq == 2) return genus_surface_portrait(1);
  Portrait p;
  p.dimension = sp + sq;
  p.faces.push_back(detail::make_face("f0", std::nullopt, 0, true));
  p.faces.push_back(detail::make_face("f1", std::nullopt, sphere_chi(sp - 1)));
  p.faces.push_back(detail::make_face("f2", std::nullopt, sphere_chi(sp) * sphere_chi(sq)));
  p.circles.push_back(detail::make_circle("c1", "f1", "f0", detail::circle_points(Vec2::Zero(), 2.0), 1));
  p.circles.push_back(detail::make_circle("c2", "f2", "f1", detail::circle_points(Vec2::Zero(), 1.0), 1));
  build_boundary_walks(p);
  return p;
}

// ---------------------------------------------------------------------------
// Lifting Morse functions.
//
// Critical points are read left to right along gamma(w) = w.x. Each oval
// of the portrait has a left and a right extreme. An index-0 point opens a
// sheet oval (count +2), an index-2 point closes the innermost open sheet
// oval. An index-1 point closes the innermost open hole oval if that is the
// innermost open oval, otherwise it opens a new hole (count -2).

struct CriticalPoint {
  double value = 0.0;
  int index = 0;
  bool operator==(const CriticalPoint&) const = default;
};

inline Portrait morse_lift(const std::vector<CriticalPoint>& crit) {
  if (crit.empty()) throw ConstructionError("empty critical sequence");
  struct Oval {
    double left = 0.0, right = 0.0;
    bool hole = false;
    int parent = -1;  // -1: outer face
    int depth = 0;
    int count = 0;    // fiber count inside
  };
  std::vector<Oval> ovals;
  std::vector<int> open;
  int count = 0;
  auto fail = [](std::size_t i, const std::string& msg) {
    throw ConstructionError("critical point " + std::to_string(i) + ": " + msg);
  };
  for (std::size_t i = 0; i < crit.size(); ++i) {
    const auto& c = crit[i];
    if (c.index < 0 || c.index > 2) fail(i, "index must be 0, 1 or 2");
    if (i == 0 && c.index != 0) fail(i, "first index must be 0");
    if (i > 0 && !(c.value > crit[i - 1].value)) fail(i, "values must be strictly increasing");
    const int innermost = open.empty() ? -1 : open.back();
    auto open_oval = [&](bool hole) {
      Oval o;
      o.left = c.value;
      o.hole = hole;
      o.parent = innermost;
      o.depth = innermost < 0 ? 0 : ovals[innermost].depth + 1;
      count += hole ? -2 : 2;
      o.count = count;
      ovals.push_back(o);
      open.push_back(static_cast<int>(ovals.size()) - 1);
    };
    if (c.index == 0) {
      open_oval(false);
    } else if (c.index == 2) {
      if (innermost < 0 || ovals[innermost].hole) fail(i, "index 2 needs an open sheet oval innermost");
      ovals[innermost].right = c.value;
      open.pop_back();
      count -= 2;
    } else if (innermost >= 0 && ovals[innermost].hole) {
      ovals[innermost].right = c.value;
      open.pop_back();
      count += 2;
    } else {
      if (count < 2) fail(i, "fiber count would become negative");
      open_oval(true);
    }
  }
  if (!open.empty() || count != 0) {
    throw ConstructionError("critical sequence ends with fiber count " + std::to_string(count) + " (must end at 0)");
  }

  // Common x-grid: every critical value plus 8 subdivisions between them.
  std::vector<double> grid;
  for (std::size_t i = 0; i < crit.size(); ++i) {
    grid.push_back(crit[i].value);
    if (i + 1 < crit.size()) {
      for (int s = 1; s < 8; ++s) grid.push_back(crit[i].value + (crit[i + 1].value - crit[i].value) * s / 8.0);
    }
  }

  Portrait p;
  p.dimension = 2;
  p.faces.push_back(detail::make_face("f0", 0, std::nullopt, true));
  for (std::size_t k = 0; k < ovals.size(); ++k) {
    const Oval& o = ovals[k];
    const std::string face = "f" + std::to_string(k + 1);
    const std::string parent = o.parent < 0 ? "f0" : "f" + std::to_string(o.parent + 1);
    p.faces.push_back(detail::make_face(face, o.count, std::nullopt));
    // Nested ovals share the x-grid and get flatter with depth, so each one
    // stays inside its parent.
    const double k_shape = std::pow(0.5, o.depth + 1);
    auto half_height = [&](double x) { return k_shape * std::sqrt((x - o.left) * (o.right - x)); };
    Polyline2 pts{Vec2(o.left, 0.0)};
    for (double x : grid) {
      if (x > o.left && x < o.right) pts.push_back(Vec2(x, -half_height(x)));
    }
    pts.push_back(Vec2(o.right, 0.0));
    for (auto it = grid.rbegin(); it != grid.rend(); ++it) {
      if (*it > o.left && *it < o.right) pts.push_back(Vec2(*it, half_height(*it)));
    }
    p.circles.push_back(detail::make_circle("c" + std::to_string(k + 1), face, parent, std::move(pts)));
  }
  build_boundary_walks(p);
  return p;
}

}  // namespace portraitforge
