#include "portraitforge/analysis.hpp"
#include "portraitforge/mapspec.hpp"
#include "portraitforge/numeric.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

using namespace portraitforge;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

MapSpec load(const std::string& name) { return parse_mapspec(slurp(std::string(PF_FIXTURES) + "/" + name)); }

double seg_dist(const Vec2& p, const Vec2& a, const Vec2& b) {
  const Vec2 d = b - a;
  const double t = std::clamp((p - a).dot(d) / d.squaredNorm(), 0.0, 1.0);
  return (a + t * d - p).norm();
}

// Symmetric Hausdorff distance between traced images and a circle of
// radius r about the origin, sampled on both sides.
double hausdorff_to_circle(const std::vector<Vec2>& image, bool closed, double r) {
  double worst = 0.0;
  for (const auto& w : image) worst = std::max(worst, std::abs(w.norm() - r));
  const std::size_t segs = closed ? image.size() : image.size() - 1;
  for (int k = 0; k < 720; ++k) {
    const double a = 2 * std::numbers::pi * k / 720;
    const Vec2 q(r * std::cos(a), r * std::sin(a));
    double best = INFINITY;
    for (std::size_t i = 0; i < segs; ++i) {
      best = std::min(best, seg_dist(q, image[i], image[(i + 1) % image.size()]));
    }
    worst = std::max(worst, best);
  }
  return worst;
}

// Independent fiber count for a linear projection (F1, F2) = (x, y cos a + z sin a):
// the fiber over w is the line x = w1, y = w2 cos a - s sin a, z = w2 sin a + s cos a,
// and its points are sign changes of g along s. Returns -1 when a sample lands
// too close to a root to be sure.
int count_on_line(const MapSpec& spec, const Vec2& w, double alpha) {
  const double c = std::cos(alpha), s = std::sin(alpha);
  const double lim = 10.0;
  const int n = 20000;
  int roots = 0;
  double prev = NAN;
  for (int i = 0; i <= n; ++i) {
    const double t = -lim + 2 * lim * i / n;
    const double v = expr::eval(spec.g, w.x(), w.y() * c - t * s, w.y() * s + t * c);
    if (std::abs(v) < 1e-6) return -1;
    if (i > 0 && (v > 0) != (prev > 0)) ++roots;
    prev = v;
  }
  return roots;
}

}  // namespace

TEST(Trace, SphereContourIsTheUnitCircle) {
  const auto curves = trace_fold_locus(load("sphere.map"));
  ASSERT_EQ(curves.size(), 1u);
  EXPECT_TRUE(curves[0].closed);
  EXPECT_TRUE(curves[0].cusps.empty());
  EXPECT_LT(hausdorff_to_circle(curves[0].image, true, 1.0), 1e-3);
  // Points lie on the surface and on the rank-drop set.
  const SurfaceSystem sys(load("sphere.map"));
  for (const auto& x : curves[0].points) {
    const auto v = sys.values(x);
    EXPECT_LT(std::abs(v.g), 1e-8);
    EXPECT_LT(std::abs(v.h), 1e-8);
  }
}

TEST(Trace, TorusContourIsTwoCircles) {
  const auto curves = trace_fold_locus(load("torus.map"));
  ASSERT_EQ(curves.size(), 2u);
  std::vector<double> radii;
  for (const auto& c : curves) {
    EXPECT_TRUE(c.closed);
    EXPECT_TRUE(c.cusps.empty());
    radii.push_back(c.image.front().norm());
  }
  std::sort(radii.begin(), radii.end());
  EXPECT_NEAR(radii[0], 1.0, 1e-3);
  EXPECT_NEAR(radii[1], 3.0, 1e-3);
  for (const auto& c : curves) {
    const double r = c.image.front().norm() < 2 ? 1.0 : 3.0;
    EXPECT_LT(hausdorff_to_circle(c.image, true, r), 1e-3);
  }
}

TEST(Trace, TiltedTorusCuspsAppearPastTheThreshold) {
  // A tilted torus of radii 2 and 1 shows cusps only once the tilt exceeds
  // pi/4 from vertical: at 0.5 rad the contour is smooth, at 1 rad it has
  // four cusps and two crossings.
  auto count = [](const MapSpec& spec) {
    std::size_t n = 0;
    for (const auto& c : trace_fold_locus(spec)) n += c.cusps.size();
    return n;
  };
  EXPECT_EQ(count(load("tilted-torus.map")), 0u);
  MapSpec steep = load("tilted-torus-steep.map");
  EXPECT_EQ(count(steep), 4u);
  steep.tol.step /= 2;
  EXPECT_EQ(count(steep), 4u);
}

TEST(FiberCount, MatchesLineRootOracle) {
  struct Case {
    const char* file;
    double alpha;
  };
  std::mt19937 rng(21);
  for (const Case& k : {Case{"sphere.map", 0.0}, Case{"torus.map", 0.0}, Case{"tilted-torus-steep.map", 1.0}}) {
    const MapSpec spec = load(k.file);
    const SurfaceSystem sys(spec);
    std::uniform_real_distribution<double> u(-3.5, 3.5);
    int compared = 0;
    for (int i = 0; i < 25; ++i) {
      const Vec2 w(u(rng), u(rng));
      const int expect = count_on_line(spec, w, k.alpha);
      if (expect < 0) continue;
      try {
        const auto got = count_fiber(sys, w);
        EXPECT_EQ(got.count, expect) << k.file << " at " << w.transpose();
        EXPECT_TRUE(got.confident);
        ++compared;
      } catch (const NumericError&) {
        // Too close to the contour to count.
      }
    }
    EXPECT_GT(compared, 15) << k.file;
  }
}

TEST(FiberCount, KnownValuesAndContourRejection) {
  const SurfaceSystem sphere(load("sphere.map"));
  EXPECT_EQ(count_fiber(sphere, Vec2(0.0, 0.0)).count, 2);
  EXPECT_EQ(count_fiber(sphere, Vec2(1.5, 0.0)).count, 0);
  const auto fc = count_fiber(sphere, Vec2(0.3, 0.4));
  ASSERT_EQ(fc.points.size(), 2u);
  for (const auto& x : fc.points) {
    EXPECT_NEAR(x.x(), 0.3, 1e-9);
    EXPECT_NEAR(x.y(), 0.4, 1e-9);
    EXPECT_NEAR(std::abs(x.z()), std::sqrt(0.75), 1e-9);
  }
  EXPECT_THROW(count_fiber(sphere, Vec2(1.0, 0.0)), NumericError);

  const SurfaceSystem torus(load("torus.map"));
  EXPECT_EQ(count_fiber(torus, Vec2(0.0, 0.0)).count, 0);
  EXPECT_EQ(count_fiber(torus, Vec2(2.0, 0.0)).count, 2);
  EXPECT_EQ(count_fiber(torus, Vec2(0.0, 3.5)).count, 0);
}

TEST(Extract, ClosedPortraitsHaveTheRightInvariants) {
  struct Case {
    const char* file;
    int chi;
    std::size_t cusps, crossings, faces;
  };
  for (const Case& k : {Case{"sphere.map", 2, 0, 0, 2}, Case{"torus.map", 0, 0, 0, 3},
                        Case{"tilted-torus.map", 0, 0, 0, 3}, Case{"tilted-torus-steep.map", 0, 4, 2, 5}}) {
    const auto ex = extract_portrait(load(k.file));
    const Portrait& p = ex.portrait;
    EXPECT_TRUE(validate(p).empty()) << k.file;
    EXPECT_FALSE(labeling_problem(p, ex.labeling)) << k.file;
    EXPECT_EQ(p.cusp_count(), k.cusps) << k.file;
    EXPECT_EQ(p.vertices.size() - p.cusp_count(), k.crossings) << k.file;
    EXPECT_EQ(p.faces.size(), k.faces) << k.file;
    EXPECT_EQ(stratified_chi(p, ex.labeling), k.chi) << k.file;
    EXPECT_TRUE(thom_parity(p, k.chi)) << k.file;
    EXPECT_EQ(stratification_sum(p), 1) << k.file;
  }
}

TEST(Extract, StableUnderHalvedStep) {
  MapSpec spec = load("tilted-torus-steep.map");
  const auto a = extract_portrait(spec);
  spec.tol.step /= 2;
  const auto b = extract_portrait(spec);
  EXPECT_EQ(a.portrait.vertices.size(), b.portrait.vertices.size());
  EXPECT_EQ(a.portrait.arcs.size(), b.portrait.arcs.size());
  EXPECT_EQ(a.portrait.faces.size(), b.portrait.faces.size());
  std::vector<int> ca = a.labeling.counts, cb = b.labeling.counts;
  std::sort(ca.begin(), ca.end());
  std::sort(cb.begin(), cb.end());
  EXPECT_EQ(ca, cb);
  // Cusps are refined on the curve; crossings come from polyline chords,
  // whose error is second order in the step (0.08 here).
  for (const auto& v : a.portrait.vertices) {
    double best = INFINITY;
    for (const auto& u : b.portrait.vertices) {
      if (u.kind == v.kind) best = std::min(best, (*u.position - *v.position).norm());
    }
    EXPECT_LT(best, v.kind == VertexKind::Cusp ? 1e-6 : 1e-3) << v.id;
  }
}

TEST(Extract, BoundedTwiceFoldWindow) {
  const MapSpec spec = load("twice-fold.map");
  const auto ex = extract_portrait(spec);
  EXPECT_EQ(ex.open_curves, 2);
  ASSERT_TRUE(ex.base_count);
  EXPECT_EQ(*ex.base_count, 2);
  std::vector<CuspMarker> cusps;
  for (const auto& c : ex.curves) cusps.insert(cusps.end(), c.cusps.begin(), c.cusps.end());
  ASSERT_EQ(cusps.size(), 1u);
  EXPECT_LT((cusps[0].point - Vec3(0.1, 0.1, 0.0)).norm(), 1e-4);
  EXPECT_LT((cusps[0].image - Vec2(0.03, 0.03)).norm(), 1e-4);
  const Portrait& p = ex.portrait;
  EXPECT_EQ(p.cusp_count(), 1u);
  EXPECT_TRUE(validate(p).empty());
  std::vector<int> counts = ex.labeling.counts;
  std::sort(counts.begin(), counts.end());
  EXPECT_EQ(counts, (std::vector<int>{0, 2}));
}

TEST(Extract, BoxCrossingSurfaceIsRejected) {
  // Closed mode needs the surface inside the box.
  const MapSpec spec = parse_mapspec("map v1\nsurface: x^2 + y^2 + z^2 - 1\nF1: x\nF2: y\nbox: -0.5 2 -2 2 -2 2\n");
  EXPECT_TRUE(box_boundary_violation(spec));
  EXPECT_ANY_THROW(extract_portrait(spec));
}
