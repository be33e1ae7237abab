#pragma once

// Numeric side: the fold locus of (F1, F2) restricted to {g = 0}, its cusps,
// fiber counts over the plane and extraction of the planar portrait.

#include "portraitforge/analysis.hpp"
#include "portraitforge/continuation.hpp"
#include "portraitforge/expr.hpp"
#include "portraitforge/mapspec.hpp"
#include "portraitforge/portrait.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

namespace portraitforge {

using Vec3 = Eigen::Vector3d;

// Extraction found data that contradicts the fold rules (counts, parity).
class ConsistencyError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

struct CuspMarker {
  std::size_t segment = 0;  // between points[segment] and the next point
  double s = 0.0;           // position inside that segment
  Vec3 point = Vec3::Zero();
  Vec2 image = Vec2::Zero();
};

struct FoldCurve {
  std::vector<Vec3> points;
  std::vector<Vec3> tangents;
  std::vector<Vec2> image;
  bool closed = false;
  std::vector<CuspMarker> cusps;
};

// g, F1, F2, the rank-drop determinant h = det[grad g; grad F1; grad F2]
// and the needed gradients, compiled into one program.
class SurfaceSystem {
public:
  struct Values {
    double g = 0.0, F1 = 0.0, F2 = 0.0, h = 0.0;
    Vec3 dg, dF1, dF2, dh;
  };

  explicit SurfaceSystem(const MapSpec& spec) : spec_(spec) {
    using namespace expr;
    const auto dg = grad(spec.g);
    const auto d1 = grad(spec.F1);
    const auto d2 = grad(spec.F2);
    auto minor = [&](int i, int j) { return sub(mul(d1[i], d2[j]), mul(d1[j], d2[i])); };
    const Expr h = add(sub(mul(dg[0], minor(1, 2)), mul(dg[1], minor(0, 2))), mul(dg[2], minor(0, 1)));
    const auto dh = grad(h);
    program_ = Program({spec.g, dg[0], dg[1], dg[2], spec.F1, spec.F2, d1[0], d1[1], d1[2], d2[0], d2[1], d2[2], h,
                        dh[0], dh[1], dh[2]});
    h_ = h;
  }

  const MapSpec& spec() const { return spec_; }
  const expr::Expr& h_expr() const { return h_; }

  Values values(const Vec3& p) const {
    thread_local std::vector<double> scratch;
    std::array<double, 16> o{};
    program_.run({p.x(), p.y(), p.z()}, scratch, o.data());
    Values v;
    v.g = o[0];
    v.dg = Vec3(o[1], o[2], o[3]);
    v.F1 = o[4];
    v.F2 = o[5];
    v.dF1 = Vec3(o[6], o[7], o[8]);
    v.dF2 = Vec3(o[9], o[10], o[11]);
    v.h = o[12];
    v.dh = Vec3(o[13], o[14], o[15]);
    return v;
  }

  Vec2 image(const Vec3& p) const {
    const auto v = values(p);
    return {v.F1, v.F2};
  }

  CurveSystem fold_system() const {
    CurveSystem sys;
    sys.dim = 3;
    sys.eval = [this](const VecX& x, VecX& r, MatX& J) {
      const auto v = values(Vec3(x[0], x[1], x[2]));
      r.resize(2);
      r << v.g, v.h;
      J.resize(2, 3);
      J.row(0) = v.dg.transpose();
      J.row(1) = v.dh.transpose();
    };
    sys.in_domain = [this](const VecX& x) { return spec_.in_box(x[0], x[1], x[2]); };
    return sys;
  }

  ImageJacobian image_jacobian() const {
    return [this](const VecX& x) {
      const auto v = values(Vec3(x[0], x[1], x[2]));
      MatX D(2, 3);
      D.row(0) = v.dF1.transpose();
      D.row(1) = v.dF2.transpose();
      return D;
    };
  }

private:
  MapSpec spec_;
  expr::Program program_;
  expr::Expr h_;
};

inline double trace_step(const MapSpec& spec) { return spec.tol.step * spec.extent(); }

// Cusp markers on a traced fold curve.
inline std::vector<CuspMarker> detect_cusps(const SurfaceSystem& sys, const FoldCurve& c) {
  TracedCurve t;
  t.closed = c.closed;
  for (std::size_t i = 0; i < c.points.size(); ++i) {
    t.points.push_back(c.points[i]);
    t.tangents.push_back(c.tangents[i]);
  }
  const auto hits = find_cusps(sys.fold_system(), t, sys.image_jacobian(), sys.spec().tol.speed, sys.spec().tol.newton);
  std::vector<CuspMarker> out;
  for (const auto& h : hits) {
    CuspMarker m;
    m.segment = h.segment;
    m.s = h.s;
    m.point = Vec3(h.point[0], h.point[1], h.point[2]);
    m.image = sys.image(m.point);
    out.push_back(m);
  }
  return out;
}

namespace detail {

inline int seed_grid_resolution(const MapSpec& spec) {
  return std::clamp(static_cast<int>(std::ceil(0.5 / spec.tol.step)), 16, 128);
}

}  // namespace detail

inline std::vector<FoldCurve> trace_fold_locus(const SurfaceSystem& sys) {
  const MapSpec& spec = sys.spec();
  if (spec.mode == SurfaceMode::Closed) {
    if (auto bad = box_boundary_violation(spec)) {
      throw NumericError("box does not contain the surface: g vanishes or changes sign on the box boundary near " +
                         format_point(Eigen::Vector3d((*bad)[0], (*bad)[1], (*bad)[2])));
    }
  }
  const double h0 = trace_step(spec);
  const CurveSystem fold = sys.fold_system();
  ContinuationOptions opt;
  opt.step = h0;
  opt.newton_tol = spec.tol.newton;
  opt.bounded = spec.mode == SurfaceMode::Bounded;

  // Seeds: grid cells over which both g and h change sign, projected onto
  // {g = 0, h = 0}.
  const int N = detail::seed_grid_resolution(spec);
  const auto& b = spec.box;
  const double dx = (b[1] - b[0]) / N, dy = (b[3] - b[2]) / N, dz = (b[5] - b[4]) / N;
  const int M = N + 1;
  std::vector<double> gv(static_cast<std::size_t>(M) * M * M), hv(gv.size());
  auto at = [M](int i, int j, int k) { return (static_cast<std::size_t>(i) * M + j) * M + k; };
  for (int i = 0; i < M; ++i) {
    for (int j = 0; j < M; ++j) {
      for (int k = 0; k < M; ++k) {
        double g = std::numeric_limits<double>::quiet_NaN(), h = g;
        try {
          const auto v = sys.values(Vec3(b[0] + i * dx, b[2] + j * dy, b[4] + k * dz));
          g = v.g;
          h = v.h;
        } catch (const expr::DomainError&) {
        }
        gv[at(i, j, k)] = g;
        hv[at(i, j, k)] = h;
      }
    }
  }
  const double cell = std::sqrt(dx * dx + dy * dy + dz * dz);
  std::vector<VecX> seeds;
  for (int i = 0; i < N; ++i) {
    for (int j = 0; j < N; ++j) {
      for (int k = 0; k < N; ++k) {
        double gmin = INFINITY, gmax = -INFINITY, hmin = INFINITY, hmax = -INFINITY;
        bool finite = true;
        for (int c = 0; c < 8; ++c) {
          const std::size_t idx = at(i + (c & 1), j + ((c >> 1) & 1), k + ((c >> 2) & 1));
          if (!std::isfinite(gv[idx]) || !std::isfinite(hv[idx])) finite = false;
          gmin = std::min(gmin, gv[idx]);
          gmax = std::max(gmax, gv[idx]);
          hmin = std::min(hmin, hv[idx]);
          hmax = std::max(hmax, hv[idx]);
        }
        if (!finite || gmin > 0.0 || gmax < 0.0 || hmin > 0.0 || hmax < 0.0) continue;
        VecX c(3);
        c << b[0] + (i + 0.5) * dx, b[2] + (j + 0.5) * dy, b[4] + (k + 0.5) * dz;
        if (auto s = project_to_curve(fold, c, spec.tol.newton, 40, 2.0 * cell)) {
          if (spec.in_box((*s)[0], (*s)[1], (*s)[2])) seeds.push_back(*s);
        }
      }
    }
  }

  std::vector<TracedCurve> traced;
  for (const VecX& s : seeds) {
    bool known = false;
    for (const auto& t : traced) {
      if (distance_to_curve(t, s) < 3.0 * h0) {
        known = true;
        break;
      }
    }
    if (known) continue;
    traced.push_back(trace_curve(fold, s, opt));
  }

  std::vector<FoldCurve> out;
  for (const auto& t : traced) {
    FoldCurve c;
    c.closed = t.closed;
    for (std::size_t i = 0; i < t.points.size(); ++i) {
      const Vec3 p(t.points[i][0], t.points[i][1], t.points[i][2]);
      const auto v = sys.values(p);
      if (v.dg.norm() < spec.tol.grad_min) {
        throw NumericError("regularity failure: |grad g| below grad_min at " + format_point(t.points[i]), t.points[i]);
      }
      c.points.push_back(p);
      c.tangents.push_back(Vec3(t.tangents[i][0], t.tangents[i][1], t.tangents[i][2]));
      c.image.push_back({v.F1, v.F2});
    }
    c.cusps = detect_cusps(sys, c);
    out.push_back(std::move(c));
  }
  return out;
}

inline std::vector<FoldCurve> trace_fold_locus(const MapSpec& spec) { return trace_fold_locus(SurfaceSystem(spec)); }

// ---------------------------------------------------------------------------
// Fiber counts

struct FiberCount {
  int count = 0;
  bool confident = false;  // equal counts from two nested start grids
  std::vector<Vec3> points;
};

namespace detail {

inline std::vector<Vec3> solve_fiber(const SurfaceSystem& sys, const Vec2& w, int n) {
  const MapSpec& spec = sys.spec();
  const auto& b = spec.box;
  std::vector<Vec3> roots;
  const double scale = spec.extent();
  auto residual = [&](const Vec3& p, SurfaceSystem::Values& v) {
    v = sys.values(p);
    return Vec3(v.g, v.F1 - w.x(), v.F2 - w.y());
  };
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      for (int k = 0; k < n; ++k) {
        Vec3 p(b[0] + (i + 0.5) * (b[1] - b[0]) / n, b[2] + (j + 0.5) * (b[3] - b[2]) / n,
               b[4] + (k + 0.5) * (b[5] - b[4]) / n);
        bool ok = false;
        try {
          SurfaceSystem::Values v;
          Vec3 r = residual(p, v);
          for (int it = 0; it < 60; ++it) {
            Eigen::Matrix3d J;
            J.row(0) = v.dg.transpose();
            J.row(1) = v.dF1.transpose();
            J.row(2) = v.dF2.transpose();
            Vec3 dp = J.fullPivLu().solve(-r);
            if (!dp.allFinite()) break;
            if (dp.norm() > 0.25 * scale) dp *= 0.25 * scale / dp.norm();
            double lambda = 1.0;
            Vec3 trial;
            SurfaceSystem::Values tv;
            Vec3 tr;
            bool improved = false;
            for (int ls = 0; ls < 30; ++ls) {
              trial = p + lambda * dp;
              try {
                tr = residual(trial, tv);
                if (tr.allFinite() && tr.norm() < r.norm() * (1.0 - 1e-4 * lambda)) {
                  improved = true;
                  break;
                }
              } catch (const expr::DomainError&) {
              }
              lambda *= 0.5;
            }
            if (!improved) {
              ok = r.norm() < spec.tol.newton;
              break;
            }
            p = trial;
            r = tr;
            v = tv;
            if (!spec.in_box(p.x(), p.y(), p.z(), 0.1 * scale)) break;
            if (r.norm() < 1e-3 * spec.tol.newton) {
              ok = true;
              break;
            }
          }
          if (!ok) ok = r.norm() < spec.tol.newton;
        } catch (const expr::DomainError&) {
          ok = false;
        }
        if (!ok || !spec.in_box(p.x(), p.y(), p.z())) continue;
        bool dup = false;
        for (const Vec3& q : roots) {
          if ((q - p).norm() < spec.tol.dedup) {
            dup = true;
            break;
          }
        }
        if (!dup) roots.push_back(p);
      }
    }
  }
  std::sort(roots.begin(), roots.end(), [](const Vec3& a, const Vec3& c) {
    return std::lexicographical_compare(a.data(), a.data() + 3, c.data(), c.data() + 3);
  });
  return roots;
}

}  // namespace detail

// Number of points of {g = 0} in the box mapping to w.
inline FiberCount count_fiber(const SurfaceSystem& sys, const Vec2& w) {
  const auto coarse = detail::solve_fiber(sys, w, 8);
  auto fine = detail::solve_fiber(sys, w, 16);
  for (const Vec3& p : fine) {
    const auto v = sys.values(p);
    Eigen::Matrix3d J;
    J.row(0) = v.dg.transpose();
    J.row(1) = v.dF1.transpose();
    J.row(2) = v.dF2.transpose();
    const double scale = v.dg.norm() * v.dF1.norm() * v.dF2.norm();
    if (std::abs(J.determinant()) < 1e-6 * scale) {
      throw NumericError("fiber count ill-conditioned at w = " + format_point(VecX(w)) + " (too close to the contour)");
    }
  }
  FiberCount out;
  out.count = static_cast<int>(fine.size());
  out.confident = coarse.size() == fine.size();
  out.points = std::move(fine);
  return out;
}

inline FiberCount count_fiber(const MapSpec& spec, const Vec2& w) { return count_fiber(SurfaceSystem(spec), w); }

// ---------------------------------------------------------------------------
// Plane geometry helpers

namespace geom {

inline double cross(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

inline double signed_area(const std::vector<Vec2>& poly) {
  double a = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i) a += cross(poly[i], poly[(i + 1) % poly.size()]);
  return 0.5 * a;
}

inline bool inside(const std::vector<Vec2>& poly, const Vec2& p) {
  bool in = false;
  for (std::size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++) {
    const Vec2& a = poly[i];
    const Vec2& b = poly[j];
    if ((a.y() > p.y()) != (b.y() > p.y())) {
      const double x = a.x() + (p.y() - a.y()) * (b.x() - a.x()) / (b.y() - a.y());
      if (p.x() < x) in = !in;
    }
  }
  return in;
}

inline double segment_distance(const Vec2& p, const Vec2& a, const Vec2& b) {
  const Vec2 ab = b - a;
  const double len2 = ab.squaredNorm();
  const double t = len2 > 0.0 ? std::clamp((p - a).dot(ab) / len2, 0.0, 1.0) : 0.0;
  return (a + t * ab - p).norm();
}

struct Segment {
  Vec2 a, b;
};

inline double clearance(const std::vector<Segment>& segs, const Vec2& p) {
  double best = INFINITY;
  for (const auto& s : segs) best = std::min(best, segment_distance(p, s.a, s.b));
  return best;
}

// Proper intersection parameters of [a,b] and [c,d], if any.
inline std::optional<std::pair<double, double>> intersect(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& d) {
  const Vec2 r = b - a, s = d - c;
  const double den = cross(r, s);
  if (den == 0.0) return std::nullopt;
  const double t = cross(c - a, s) / den;
  const double u = cross(c - a, r) / den;
  if (t < 0.0 || t >= 1.0 || u < 0.0 || u >= 1.0) return std::nullopt;
  return std::make_pair(t, u);
}

}  // namespace geom

// ---------------------------------------------------------------------------
// Portrait extraction

struct Extraction {
  Portrait portrait;
  Labeling labeling;
  std::vector<FoldCurve> curves;
  std::vector<Vec2> face_samples;    // per face of the portrait
  std::optional<int> base_count;     // bounded mode: sheets outside the fan window
  int open_curves = 0;               // bounded mode: curves ending on the box boundary
};

namespace detail {

struct ChainNode {
  Vec2 p;
  int vertex = -1;  // index into the vertex list, -1 for plain points
};

// Image polyline of a fold curve with cusp points inserted.
inline std::vector<ChainNode> chain_with_cusps(const FoldCurve& c, std::vector<Vertex>& vertices) {
  std::vector<ChainNode> out;
  const std::size_t n = c.image.size();
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back({c.image[i], -1});
    std::vector<const CuspMarker*> here;
    for (const auto& m : c.cusps) {
      if (m.segment == i) here.push_back(&m);
    }
    std::sort(here.begin(), here.end(), [](const CuspMarker* a, const CuspMarker* b) { return a->s < b->s; });
    for (const CuspMarker* m : here) {
      Vertex v;
      v.kind = VertexKind::Cusp;
      v.position = m->image;
      v.cusp_index = 0;
      vertices.push_back(v);
      out.push_back({m->image, static_cast<int>(vertices.size()) - 1});
    }
  }
  return out;
}

struct HalfEdge {
  std::vector<Vec2> pts;  // in traversal direction
  int origin = -1;        // vertex index, -1 for circles
  int cycle = -1;
};

}  // namespace detail

inline Extraction extract_portrait_closed(const SurfaceSystem& sys, std::vector<FoldCurve> curves) {
  const MapSpec& spec = sys.spec();
  Extraction ex;
  std::vector<Vertex> vertices;
  std::vector<std::vector<detail::ChainNode>> chains;
  for (const auto& c : curves) chains.push_back(detail::chain_with_cusps(c, vertices));

  // Crossings between non-adjacent segments.
  struct SegRef {
    std::size_t chain, index;
  };
  std::vector<SegRef> segs;
  for (std::size_t c = 0; c < chains.size(); ++c) {
    for (std::size_t i = 0; i < chains[c].size(); ++i) segs.push_back({c, i});
  }
  auto seg_pts = [&](const SegRef& s) {
    const auto& ch = chains[s.chain];
    return std::make_pair(ch[s.index].p, ch[(s.index + 1) % ch.size()].p);
  };
  struct Insertion {
    std::size_t index;
    double t;
    int vertex;
  };
  std::vector<std::vector<Insertion>> inserts(chains.size());
  const double min_sin = std::sin(spec.tol.angle_min * std::numbers::pi / 180.0);
  for (std::size_t i = 0; i < segs.size(); ++i) {
    const auto [a, b] = seg_pts(segs[i]);
    const Vec2 lo1 = a.cwiseMin(b), hi1 = a.cwiseMax(b);
    for (std::size_t j = i + 1; j < segs.size(); ++j) {
      if (segs[i].chain == segs[j].chain) {
        const std::size_t m = chains[segs[i].chain].size();
        const std::size_t d = segs[j].index - segs[i].index;
        if (d == 1 || d == m - 1) continue;
      }
      const auto [c, d] = seg_pts(segs[j]);
      const Vec2 lo2 = c.cwiseMin(d), hi2 = c.cwiseMax(d);
      if ((lo1.array() > hi2.array()).any() || (lo2.array() > hi1.array()).any()) continue;
      const auto hit = geom::intersect(a, b, c, d);
      if (!hit) continue;
      const double sin_angle = std::abs(geom::cross((b - a).normalized(), (d - c).normalized()));
      const Vec2 where = a + hit->first * (b - a);
      if (sin_angle < min_sin) {
        throw NumericError("tangential contour intersection near " + format_point(VecX(where)) +
                           " (angle below angle_min; map not generic)");
      }
      Vertex v;
      v.kind = VertexKind::Crossing;
      v.position = where;
      vertices.push_back(v);
      const int vid = static_cast<int>(vertices.size()) - 1;
      inserts[segs[i].chain].push_back({segs[i].index, hit->first, vid});
      inserts[segs[j].chain].push_back({segs[j].index, hit->second, vid});
    }
  }

  // Split chains at vertices into arcs; vertex-free chains become circles.
  std::vector<std::vector<detail::ChainNode>> full(chains.size());
  for (std::size_t c = 0; c < chains.size(); ++c) {
    auto& ins = inserts[c];
    std::sort(ins.begin(), ins.end(), [](const auto& x, const auto& y) {
      return x.index != y.index ? x.index < y.index : x.t < y.t;
    });
    std::size_t k = 0;
    for (std::size_t i = 0; i < chains[c].size(); ++i) {
      full[c].push_back(chains[c][i]);
      while (k < ins.size() && ins[k].index == i) {
        full[c].push_back({*vertices[ins[k].vertex].position, ins[k].vertex});
        ++k;
      }
    }
  }

  Portrait& p = ex.portrait;
  p.dimension = 2;
  for (std::size_t v = 0; v < vertices.size(); ++v) {
    vertices[v].id = "v" + std::to_string(v + 1);
    p.vertices.push_back(vertices[v]);
  }
  struct RawArc {
    int from, to;
    std::vector<Vec2> pts;
  };
  std::vector<RawArc> raw_arcs;
  std::vector<std::vector<Vec2>> raw_circles;
  for (const auto& ch : full) {
    std::size_t first = ch.size();
    for (std::size_t i = 0; i < ch.size(); ++i) {
      if (ch[i].vertex >= 0) {
        first = i;
        break;
      }
    }
    if (first == ch.size()) {
      std::vector<Vec2> pts;
      for (const auto& n : ch) pts.push_back(n.p);
      if (geom::signed_area(pts) < 0.0) std::reverse(pts.begin(), pts.end());
      raw_circles.push_back(std::move(pts));
      continue;
    }
    RawArc cur{ch[first].vertex, -1, {ch[first].p}};
    for (std::size_t k = 1; k <= ch.size(); ++k) {
      const auto& node = ch[(first + k) % ch.size()];
      if ((node.p - cur.pts.back()).norm() > 0.0 || node.vertex >= 0) cur.pts.push_back(node.p);
      if (node.vertex >= 0) {
        cur.to = node.vertex;
        if (cur.pts.size() < 2) cur.pts.push_back(node.p);
        raw_arcs.push_back(cur);
        cur = RawArc{node.vertex, -1, {node.p}};
      }
    }
  }

  // Half-edges: 2a forward / 2a+1 backward for arcs, then circles.
  std::vector<detail::HalfEdge> he;
  for (const auto& a : raw_arcs) {
    he.push_back({a.pts, a.from, -1});
    std::vector<Vec2> rev(a.pts.rbegin(), a.pts.rend());
    he.push_back({rev, a.to, -1});
  }
  const std::size_t circle_base = he.size();
  for (const auto& c : raw_circles) {
    auto fwd = c;
    fwd.push_back(c.front());
    he.push_back({fwd, -1, -1});
    std::vector<Vec2> rev(fwd.rbegin(), fwd.rend());
    he.push_back({rev, -1, -1});
  }
  std::vector<std::vector<std::size_t>> around(vertices.size());
  for (std::size_t e = 0; e < circle_base; ++e) around[he[e].origin].push_back(e);
  for (auto& list : around) {
    std::vector<std::pair<double, std::size_t>> keyed;
    for (std::size_t e : list) {
      const Vec2 d = he[e].pts[1] - he[e].pts[0];
      keyed.push_back({std::atan2(d.y(), d.x()), e});
    }
    std::sort(keyed.begin(), keyed.end());
    list.clear();
    for (const auto& [ang, e] : keyed) list.push_back(e);
  }
  auto next = [&](std::size_t e) -> std::size_t {
    if (e >= circle_base) return e;
    const std::size_t twin = e ^ 1u;
    const auto& list = around[he[twin].origin];
    const auto pos = static_cast<std::size_t>(std::find(list.begin(), list.end(), twin) - list.begin());
    return list[(pos + list.size() - 1) % list.size()];
  };
  struct Cycle {
    std::vector<std::size_t> edges;
    std::vector<Vec2> polygon;
    double area = 0.0;
    int component = 0;
    int face = -1;
  };
  std::vector<Cycle> cycles;
  for (std::size_t e = 0; e < he.size(); ++e) {
    if (he[e].cycle >= 0) continue;
    Cycle cy;
    std::size_t cur = e;
    do {
      he[cur].cycle = static_cast<int>(cycles.size());
      cy.edges.push_back(cur);
      cy.polygon.insert(cy.polygon.end(), he[cur].pts.begin(), he[cur].pts.end() - 1);
      cur = next(cur);
    } while (cur != e);
    cy.area = geom::signed_area(cy.polygon);
    cycles.push_back(std::move(cy));
  }
  // Components: arcs joined through vertices; each circle on its own.
  detail::Dsu dsu(vertices.size() + raw_circles.size());
  for (const auto& a : raw_arcs) dsu.unite(static_cast<std::size_t>(a.from), static_cast<std::size_t>(a.to));
  for (auto& cy : cycles) {
    const std::size_t e = cy.edges.front();
    cy.component = e < circle_base ? static_cast<int>(dsu.find(static_cast<std::size_t>(he[e].origin)))
                                   : static_cast<int>(dsu.find(vertices.size() + (e - circle_base) / 2));
  }

  // Faces: positive cycles bound faces, negative cycles are holes of the
  // smallest positive cycle (of another component) around them.
  std::vector<std::size_t> face_outer;  // cycle index per bounded face
  for (std::size_t c = 0; c < cycles.size(); ++c) {
    if (cycles[c].area > 0.0) {
      cycles[c].face = static_cast<int>(face_outer.size()) + 1;
      face_outer.push_back(c);
    }
  }
  std::vector<std::vector<std::size_t>> face_holes(face_outer.size() + 1);
  for (std::size_t c = 0; c < cycles.size(); ++c) {
    if (cycles[c].area > 0.0) continue;
    const auto& poly = cycles[c].polygon;
    const Vec2 probe = 0.5 * (poly[0] + poly[1]);
    int best = 0;
    double best_area = INFINITY;
    for (std::size_t f = 0; f < face_outer.size(); ++f) {
      const auto& outer = cycles[face_outer[f]];
      if (outer.component == cycles[c].component) continue;
      if (outer.area < best_area && geom::inside(outer.polygon, probe)) {
        best_area = outer.area;
        best = static_cast<int>(f) + 1;
      }
    }
    cycles[c].face = best;
    face_holes[best].push_back(c);
  }

  const std::size_t face_count = face_outer.size() + 1;
  auto face_id = [](int f) { return "f" + std::to_string(f); };
  for (std::size_t a = 0; a < raw_arcs.size(); ++a) {
    Arc arc;
    arc.id = "a" + std::to_string(a + 1);
    arc.from = p.vertices[raw_arcs[a].from].id;
    arc.to = p.vertices[raw_arcs[a].to].id;
    arc.left = face_id(cycles[he[2 * a].cycle].face);
    arc.right = face_id(cycles[he[2 * a + 1].cycle].face);
    arc.points = raw_arcs[a].pts;
    p.arcs.push_back(arc);
  }
  for (std::size_t c = 0; c < raw_circles.size(); ++c) {
    Circle circ;
    circ.id = "c" + std::to_string(c + 1);
    circ.left = face_id(cycles[he[circle_base + 2 * c].cycle].face);
    circ.right = face_id(cycles[he[circle_base + 2 * c + 1].cycle].face);
    circ.points = raw_circles[c];
    p.circles.push_back(circ);
  }

  // Sample one point per face, as far from the contour as a grid finds.
  std::vector<geom::Segment> contour;
  for (const auto& e : he) {
    for (std::size_t i = 0; i + 1 < e.pts.size(); ++i) contour.push_back({e.pts[i], e.pts[i + 1]});
  }
  Vec2 lo = Vec2::Constant(INFINITY), hi = Vec2::Constant(-INFINITY);
  for (const auto& s : contour) {
    lo = lo.cwiseMin(s.a);
    hi = hi.cwiseMax(s.a);
  }
  ex.face_samples.assign(face_count, Vec2::Zero());
  ex.face_samples[0] = lo - 0.25 * (hi - lo) - Vec2::Constant(spec.tol.clearance * 4.0);
  for (std::size_t f = 1; f < face_count; ++f) {
    const auto& outer = cycles[face_outer[f - 1]].polygon;
    Vec2 flo = Vec2::Constant(INFINITY), fhi = Vec2::Constant(-INFINITY);
    for (const auto& q : outer) {
      flo = flo.cwiseMin(q);
      fhi = fhi.cwiseMax(q);
    }
    double best = -1.0;
    Vec2 best_pt = Vec2::Zero();
    for (int G : {48, 192}) {
      for (int i = 0; i < G; ++i) {
        for (int j = 0; j < G; ++j) {
          const Vec2 q(flo.x() + (i + 0.5) * (fhi.x() - flo.x()) / G, flo.y() + (j + 0.5) * (fhi.y() - flo.y()) / G);
          if (!geom::inside(outer, q)) continue;
          bool in_hole = false;
          for (std::size_t h : face_holes[f]) {
            if (geom::inside(cycles[h].polygon, q)) {
              in_hole = true;
              break;
            }
          }
          if (in_hole) continue;
          const double cl = geom::clearance(contour, q);
          if (cl > best) {
            best = cl;
            best_pt = q;
          }
        }
      }
      if (best > spec.tol.clearance) break;
    }
    if (best <= spec.tol.clearance) {
      throw NumericError("face sampling failure: no point of face " + face_id(static_cast<int>(f)) +
                         " found at clearance above " + std::to_string(spec.tol.clearance));
    }
    ex.face_samples[f] = best_pt;
  }

  for (std::size_t f = 0; f < face_count; ++f) {
    const auto fc = count_fiber(sys, ex.face_samples[f]);
    if (!fc.confident) {
      throw NumericError("fiber count over face " + face_id(static_cast<int>(f)) + " is unstable under grid refinement");
    }
    Face face;
    face.id = face_id(static_cast<int>(f));
    face.fiber = fc.count;
    face.unbounded = f == 0;
    p.faces.push_back(face);
    ex.labeling.counts.push_back(fc.count);
  }
  ex.labeling.provenance = Provenance::Given;
  build_boundary_walks(p);

  const auto violations = validate(p);
  if (!violations.empty()) {
    std::string msg = "extracted portrait is inconsistent:";
    for (const auto& v : violations) msg += " [" + v.element + ": " + v.message + "]";
    throw ConsistencyError(msg);
  }
  if (auto problem = labeling_problem(p, ex.labeling)) {
    throw ConsistencyError("sampled fiber counts break the fold rule: " + *problem);
  }
  ex.curves = std::move(curves);
  return ex;
}

// Bounded mode: the fold locus ends on the box boundary, so instead of a
// global portrait each cusp gets a window: the two fold arms leaving it, cut
// at radius R and closed by a short circular arc through the fan's inside.
// Labels are relative to the sheet count just outside the window.
inline Extraction extract_fan_windows(const SurfaceSystem& sys, std::vector<FoldCurve> curves) {
  const MapSpec& spec = sys.spec();
  Extraction ex;
  Portrait& p = ex.portrait;
  p.dimension = 2;
  Face outer;
  outer.id = "f0";
  outer.fiber = 0;
  outer.unbounded = true;
  p.faces.push_back(outer);
  ex.labeling.counts.push_back(0);
  ex.face_samples.push_back(Vec2::Zero());

  std::vector<geom::Segment> contour;
  Vec2 lo = Vec2::Constant(INFINITY), hi = Vec2::Constant(-INFINITY);
  std::vector<std::vector<detail::ChainNode>> chains;
  std::vector<Vertex> scratch;
  for (const auto& c : curves) {
    if (!c.closed) ++ex.open_curves;
    chains.push_back(detail::chain_with_cusps(c, scratch));
    const auto& ch = chains.back();
    const std::size_t n = ch.size();
    const std::size_t segs = c.closed ? n : n - 1;
    for (std::size_t i = 0; i < segs; ++i) contour.push_back({ch[i].p, ch[(i + 1) % n].p});
    for (const auto& node : ch) {
      lo = lo.cwiseMin(node.p);
      hi = hi.cwiseMax(node.p);
    }
  }
  const double R0 = 0.1 * (hi - lo).maxCoeff();

  int window = 0;
  for (std::size_t c = 0; c < chains.size(); ++c) {
    const auto& ch = chains[c];
    const bool closed = curves[c].closed;
    for (std::size_t k = 0; k < ch.size(); ++k) {
      if (ch[k].vertex < 0) continue;
      const Vec2 cusp = ch[k].p;
      std::optional<std::vector<Vec2>> loop;
      double R = R0;
      for (int attempt = 0; attempt < 12 && !loop; ++attempt, R *= 0.5) {
        // Arm points out to radius R, with the exact crossing of the circle.
        auto arm = [&](int dir) -> std::optional<std::vector<Vec2>> {
          std::vector<Vec2> pts{cusp};
          double last = 0.0;
          std::ptrdiff_t i = static_cast<std::ptrdiff_t>(k);
          const auto n = static_cast<std::ptrdiff_t>(ch.size());
          for (std::ptrdiff_t step = 1; step < n; ++step) {
            i += dir;
            if (closed) i = (i + n) % n;
            else if (i < 0 || i >= n) return std::nullopt;
            const Vec2 q = ch[i].p;
            const double d = (q - cusp).norm();
            if (d < last) return std::nullopt;
            if (d >= R) {
              const Vec2 a = pts.back(), e = q - a;
              // |a + t e - cusp| = R
              const Vec2 f = a - cusp;
              const double A = e.squaredNorm(), B = 2.0 * f.dot(e), C = f.squaredNorm() - R * R;
              const double t = (-B + std::sqrt(std::max(0.0, B * B - 4.0 * A * C))) / (2.0 * A);
              pts.push_back(a + t * e);
              return pts;
            }
            if (d > 0.0) pts.push_back(q);
            last = d;
          }
          return std::nullopt;
        };
        const auto armA = arm(-1), armB = arm(1);
        if (!armA || !armB) continue;
        const Vec2 ea = armA->back() - cusp, eb = armB->back() - cusp;
        const double pa = std::atan2(ea.y(), ea.x());
        const double delta = std::remainder(std::atan2(eb.y(), eb.x()) - pa, 2.0 * std::numbers::pi);
        std::vector<Vec2> poly(armA->begin(), armA->end());
        for (int s = 1; s < 16; ++s) {
          const double ang = pa + delta * s / 16.0;
          poly.push_back(cusp + R * Vec2(std::cos(ang), std::sin(ang)));
        }
        poly.insert(poly.end(), armB->rbegin(), armB->rend() - 1);
        // The window must be a simple polygon free of other contour pieces.
        bool ok = true;
        const std::size_t L = poly.size();
        for (std::size_t i = 0; i < L && ok; ++i) {
          for (std::size_t j = i + 2; j < L && ok; ++j) {
            if (i == 0 && j == L - 1) continue;
            if (geom::intersect(poly[i], poly[(i + 1) % L], poly[j], poly[(j + 1) % L])) ok = false;
          }
        }
        for (const auto& s : contour) {
          if (!ok) break;
          const double da = (s.a - cusp).norm(), db = (s.b - cusp).norm();
          if (std::min(da, db) > R + (s.a - s.b).norm()) continue;
          const bool own = std::any_of(poly.begin(), poly.end(), [&](const Vec2& q) { return q == s.a || q == s.b; });
          if (own) continue;
          if (geom::inside(poly, s.a) || geom::inside(poly, s.b)) ok = false;
          for (std::size_t i = 0; i < L && ok; ++i) {
            if (geom::intersect(poly[i], poly[(i + 1) % L], s.a, s.b)) ok = false;
          }
        }
        if (ok) loop = poly;
      }
      if (!loop) throw NumericError("no clean fan window around the cusp at " + format_point(VecX(cusp)));

      std::vector<geom::Segment> window_segs = contour;
      for (std::size_t i = 0; i < loop->size(); ++i) window_segs.push_back({(*loop)[i], (*loop)[(i + 1) % loop->size()]});
      // Inside sample: best clearance point of the window.
      Vec2 wlo = Vec2::Constant(INFINITY), whi = Vec2::Constant(-INFINITY);
      for (const auto& q : *loop) {
        wlo = wlo.cwiseMin(q);
        whi = whi.cwiseMax(q);
      }
      double best_in = -1.0;
      Vec2 in_pt = cusp;
      const int G = 96;
      for (int i = 0; i < G; ++i) {
        for (int j = 0; j < G; ++j) {
          const Vec2 q(wlo.x() + (i + 0.5) * (whi.x() - wlo.x()) / G, wlo.y() + (j + 0.5) * (whi.y() - wlo.y()) / G);
          if (!geom::inside(*loop, q)) continue;
          const double cl = geom::clearance(window_segs, q);
          if (cl > best_in) {
            best_in = cl;
            in_pt = q;
          }
        }
      }
      // Outside sample: behind the cusp, against the fan direction.
      const Vec2 ahead = (0.5 * ((*loop)[1] + loop->back()) - cusp).normalized();
      double best_out = -1.0;
      Vec2 out_pt = cusp;
      for (int s = 1; s <= 64; ++s) {
        const Vec2 q = cusp - (R * s / 64.0) * ahead;
        const double cl = geom::clearance(window_segs, q);
        if (cl > best_out) {
          best_out = cl;
          out_pt = q;
        }
      }
      if (best_in <= spec.tol.clearance || best_out <= spec.tol.clearance) {
        throw NumericError("face sampling failure around the cusp at " + format_point(VecX(cusp)));
      }
      const auto fin = count_fiber(sys, in_pt);
      const auto fout = count_fiber(sys, out_pt);
      if (!fin.confident || !fout.confident) throw NumericError("fiber count near the cusp is unstable under grid refinement");
      if (fin.count - fout.count != 2) {
        throw ConsistencyError("fan window around the cusp at " + format_point(VecX(cusp)) + " has " +
                               std::to_string(fin.count) + " sheets inside and " + std::to_string(fout.count) +
                               " outside (fold rule needs a difference of 2)");
      }
      if (!ex.base_count) ex.base_count = fout.count;

      ++window;
      Vertex v;
      v.id = "v" + std::to_string(window);
      v.kind = VertexKind::Cusp;
      v.position = cusp;
      v.cusp_index = 0;
      p.vertices.push_back(v);
      Face f;
      f.id = "f" + std::to_string(window);
      f.fiber = 2;
      p.faces.push_back(f);
      ex.labeling.counts.push_back(2);
      ex.face_samples.push_back(in_pt);
      ex.face_samples[0] = out_pt;
      Arc a;
      a.id = "a" + std::to_string(window);
      a.from = a.to = v.id;
      a.points = *loop;
      a.points.push_back(cusp);
      const bool ccw = geom::signed_area(*loop) > 0.0;
      a.left = ccw ? f.id : "f0";
      a.right = ccw ? "f0" : f.id;
      p.arcs.push_back(a);
    }
  }
  ex.labeling.provenance = Provenance::Given;
  build_boundary_walks(p);
  const auto violations = validate(p);
  if (!violations.empty()) {
    std::string msg = "fan-window portrait is inconsistent:";
    for (const auto& v : violations) msg += " [" + v.element + ": " + v.message + "]";
    throw ConsistencyError(msg);
  }
  ex.curves = std::move(curves);
  return ex;
}

inline Extraction extract_portrait(const SurfaceSystem& sys) {
  auto curves = trace_fold_locus(sys);
  if (sys.spec().mode == SurfaceMode::Bounded) return extract_fan_windows(sys, std::move(curves));
  return extract_portrait_closed(sys, std::move(curves));
}

inline Extraction extract_portrait(const MapSpec& spec) { return extract_portrait(SurfaceSystem(spec)); }

}  // namespace portraitforge
