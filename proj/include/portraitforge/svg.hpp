#pragma once

// SVG drawing of portraits with geometry. Output depends only on the
// portrait, so equal inputs give byte-identical files.

#include "portraitforge/portrait.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace portraitforge {

class RenderError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline std::string svg_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  std::string s(buf);
  if (s == "-0.00") s = "0.00";
  return s;
}

inline Polyline2 edge_polyline(const Portrait& p, const EdgeRef& e) {
  Polyline2 pts = e.kind == EdgeRef::Kind::Arc ? p.arcs[e.index].points : p.circles[e.index].points;
  if (e.kind == EdgeRef::Kind::Circle) pts.push_back(pts.front());
  if (!e.forward) std::reverse(pts.begin(), pts.end());
  return pts;
}

inline Polyline2 walk_polygon(const Portrait& p, const BoundaryWalk& w) {
  Polyline2 poly;
  for (const auto& e : w) {
    const auto pts = edge_polyline(p, e);
    poly.insert(poly.end(), pts.begin(), pts.end() - 1);
  }
  return poly;
}

inline double polygon_area(const Polyline2& poly) {
  double a = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Vec2& u = poly[i];
    const Vec2& v = poly[(i + 1) % poly.size()];
    a += u.x() * v.y() - u.y() * v.x();
  }
  return 0.5 * a;
}

}  // namespace detail

inline std::string render_svg(const Portrait& p) {
  if (!p.has_geometry()) throw RenderError("missing geometry: every arc and circle needs pts=");
  constexpr double kSize = 480.0, kMargin = 20.0, kLegend = 140.0;
  static constexpr std::array<const char*, 8> kPalette = {"#ffffff", "#dbe9f6", "#a9cce3", "#7fb3d5",
                                                          "#5499c7", "#2e86c1", "#21618c", "#1b4f72"};

  Vec2 lo = Vec2::Constant(INFINITY), hi = Vec2::Constant(-INFINITY);
  auto grow = [&](const Vec2& q) {
    lo = lo.cwiseMin(q);
    hi = hi.cwiseMax(q);
  };
  for (const auto& a : p.arcs) std::for_each(a.points.begin(), a.points.end(), grow);
  for (const auto& c : p.circles) std::for_each(c.points.begin(), c.points.end(), grow);
  for (const auto& v : p.vertices) {
    if (v.position) grow(*v.position);
  }
  const double span = std::max({hi.x() - lo.x(), hi.y() - lo.y(), 1e-12});
  const double scale = (kSize - 2.0 * kMargin) / span;
  auto X = [&](const Vec2& q) { return detail::svg_num(kMargin + (q.x() - lo.x()) * scale); };
  auto Y = [&](const Vec2& q) { return detail::svg_num(kSize - kMargin - (q.y() - lo.y()) * scale); };

  // Labels shown: fiber counts for n = 2, fiber chi otherwise.
  auto label = [&](const Face& f) -> std::optional<int> { return p.dimension == 2 ? f.fiber : f.chi; };
  std::map<int, std::size_t> shade;
  for (const auto& f : p.faces) {
    if (auto l = label(f)) shade.emplace(*l, 0);
  }
  std::size_t rank = 0;
  for (auto& [value, idx] : shade) idx = std::min(rank++, kPalette.size() - 1);
  auto fill = [&](const Face& f) -> std::string {
    auto l = label(f);
    return l ? kPalette[shade[*l]] : "#eeeeee";
  };

  std::string out;
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + detail::svg_num(kSize + kLegend) + "\" height=\"" +
         detail::svg_num(kSize) + "\" viewBox=\"0 0 " + detail::svg_num(kSize + kLegend) + " " + detail::svg_num(kSize) +
         "\">\n";
  const auto unbounded = p.unbounded_face();
  out += "<rect x=\"0.00\" y=\"0.00\" width=\"" + detail::svg_num(kSize) + "\" height=\"" + detail::svg_num(kSize) +
         "\" fill=\"" + (unbounded ? fill(p.faces[*unbounded]) : std::string("#ffffff")) + "\"/>\n";

  // Faces: the outer walk of each bounded face, larger areas first.
  struct Tint {
    double area;
    std::size_t face;
    Polyline2 poly;
  };
  std::vector<Tint> tints;
  for (std::size_t f = 0; f < p.faces.size(); ++f) {
    if (p.faces[f].unbounded) continue;
    Tint best{-1.0, f, {}};
    for (const auto& w : p.faces[f].walks) {
      auto poly = detail::walk_polygon(p, w);
      const double a = std::abs(detail::polygon_area(poly));
      if (a > best.area) best = {a, f, std::move(poly)};
    }
    if (best.area > 0.0) tints.push_back(std::move(best));
  }
  std::stable_sort(tints.begin(), tints.end(), [](const Tint& a, const Tint& b) { return a.area > b.area; });
  for (const auto& t : tints) {
    out += "<polygon class=\"face\" data-id=\"" + p.faces[t.face].id + "\" fill=\"" + fill(p.faces[t.face]) + "\" points=\"";
    for (std::size_t i = 0; i < t.poly.size(); ++i) out += (i ? " " : "") + X(t.poly[i]) + "," + Y(t.poly[i]);
    out += "\"/>\n";
  }

  for (const auto& a : p.arcs) {
    out += "<path class=\"fold\" data-id=\"" + a.id + "\" fill=\"none\" stroke=\"#000000\" stroke-width=\"1.5\" d=\"";
    for (std::size_t i = 0; i < a.points.size(); ++i) out += (i ? " L" : "M") + X(a.points[i]) + " " + Y(a.points[i]);
    out += "\"/>\n";
  }
  for (const auto& c : p.circles) {
    out += "<path class=\"fold\" data-id=\"" + c.id + "\" fill=\"none\" stroke=\"#000000\" stroke-width=\"1.5\" d=\"";
    for (std::size_t i = 0; i < c.points.size(); ++i) out += (i ? " L" : "M") + X(c.points[i]) + " " + Y(c.points[i]);
    out += " Z\"/>\n";
  }
  for (const auto& v : p.vertices) {
    if (!v.position) continue;
    const double cx = kMargin + (v.position->x() - lo.x()) * scale;
    const double cy = kSize - kMargin - (v.position->y() - lo.y()) * scale;
    if (v.kind == VertexKind::Cusp) {
      out += "<polygon class=\"cusp\" data-id=\"" + v.id + "\" fill=\"#c0392b\" points=\"" + detail::svg_num(cx) + "," +
             detail::svg_num(cy - 6.0) + " " + detail::svg_num(cx - 5.0) + "," + detail::svg_num(cy + 4.0) + " " +
             detail::svg_num(cx + 5.0) + "," + detail::svg_num(cy + 4.0) + "\"/>\n";
    } else {
      out += "<circle class=\"crossing\" data-id=\"" + v.id + "\" cx=\"" + detail::svg_num(cx) + "\" cy=\"" +
             detail::svg_num(cy) + "\" r=\"4.00\" fill=\"none\" stroke=\"#1e8449\" stroke-width=\"1.5\"/>\n";
    }
  }

  double ly = kMargin;
  out += "<text x=\"" + detail::svg_num(kSize + 10.0) + "\" y=\"" + detail::svg_num(ly + 10.0) +
         "\" font-family=\"sans-serif\" font-size=\"12\">" + (p.dimension == 2 ? "fiber count" : "fiber chi") + "</text>\n";
  for (const auto& [value, idx] : shade) {
    ly += 22.0;
    out += "<rect x=\"" + detail::svg_num(kSize + 10.0) + "\" y=\"" + detail::svg_num(ly) +
           "\" width=\"16.00\" height=\"16.00\" stroke=\"#000000\" fill=\"" + kPalette[idx] + "\"/>\n";
    out += "<text x=\"" + detail::svg_num(kSize + 32.0) + "\" y=\"" + detail::svg_num(ly + 13.0) +
           "\" font-family=\"sans-serif\" font-size=\"12\">" + std::to_string(value) + "</text>\n";
  }
  out += "</svg>\n";
  return out;
}

}  // namespace portraitforge
