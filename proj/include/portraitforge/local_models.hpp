#pragma once

// Local models: Whitney fold and cusp, the twice folding projection
// TF_{p,q}(x, y) = (|x|^2, |y|^2) on D^p x D^q with the perturbation
// (|x|^2 + eps*y1, |y|^2 + eps*x1), and cusped fans in portraits.

#include "portraitforge/continuation.hpp"
#include "portraitforge/portrait.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace portraitforge {

class ModelError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

inline Vec2 fold_normal(double t, double x) { return {t, x * x}; }
inline Vec2 cusp_normal(double t, double x) { return {t, x * x * x - t * x}; }

// Image of the singular set {3x^2 = t} of the cusp normal form for t in
// [-1, 1], traced by continuation.
inline std::vector<Vec2> cusp_normal_discriminant(double step = 1e-3) {
  CurveSystem sys;
  sys.dim = 2;
  sys.eval = [](const VecX& z, VecX& r, MatX& J) {
    r.resize(1);
    r << 3.0 * z[1] * z[1] - z[0];
    J.resize(1, 2);
    J << -1.0, 6.0 * z[1];
  };
  sys.in_domain = [](const VecX& z) { return z[0] >= -1.0 && z[0] <= 1.0 && std::abs(z[1]) <= 1.0; };
  ContinuationOptions opt;
  opt.step = step;
  opt.bounded = true;
  VecX seed(2);
  seed << 0.5, std::sqrt(0.5 / 3.0);
  const auto curve = trace_curve(sys, seed, opt);
  std::vector<Vec2> out;
  for (const auto& z : curve.points) out.push_back(cusp_normal(z[0], z[1]));
  return out;
}

struct TwiceFold {
  int p = 1, q = 1;
  double eps = 0.0;
  double radius_x = 1.0, radius_y = 1.0;

  int n() const { return p + q; }

  void check() const {
    if (p < 1 || q < 1) throw ModelError("twice fold needs p >= 1 and q >= 1");
    if (eps < 0.0) throw ModelError("perturbation eps must be >= 0");
    if (!(eps < std::min(radius_x, radius_y))) throw ModelError("perturbation eps must be smaller than the domain radius");
  }
};

inline Vec2 tf_eval(const TwiceFold& m, const VecX& x, const VecX& y) {
  m.check();
  if (x.size() != m.p || y.size() != m.q) throw ModelError("tf_eval: argument sizes do not match (p, q)");
  const double slack = 1e-12;
  if (x.norm() > m.radius_x * (1.0 + slack) || y.norm() > m.radius_y * (1.0 + slack)) {
    throw ModelError("tf_eval: point outside D^p x D^q");
  }
  return {x.squaredNorm() + m.eps * y[0], y.squaredNorm() + m.eps * x[0]};
}

inline Vec2 tf_eval(const TwiceFold& m, const VecX& z) { return tf_eval(m, z.head(m.p), z.tail(m.q)); }

// 2 x (p+q) Jacobian of the perturbed twice fold at z = (x, y).
inline MatX tf_jacobian(const TwiceFold& m, const VecX& z) {
  MatX D = MatX::Zero(2, m.n());
  D.row(0).head(m.p) = 2.0 * z.head(m.p).transpose();
  D(0, m.p) = m.eps;
  D.row(1).tail(m.q) = 2.0 * z.tail(m.q).transpose();
  D(1, 0) += m.eps;
  return D;
}

// Rank drop of the Jacobian as the vanishing of all its 2 x 2 minors.
inline CurveSystem tf_rank_drop_system(const TwiceFold& m) {
  CurveSystem sys;
  sys.dim = m.n();
  sys.eval = [m](const VecX& z, VecX& r, MatX& J) {
    const int n = m.n();
    const MatX D = tf_jacobian(m, z);
    auto h1 = [&](int i, int k) { return (i == k && i < m.p) ? 2.0 : 0.0; };
    auto h2 = [&](int j, int k) { return (j == k && j >= m.p) ? 2.0 : 0.0; };
    const int rows = n * (n - 1) / 2;
    r.resize(rows);
    J.resize(rows, n);
    int row = 0;
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j, ++row) {
        r[row] = D(0, i) * D(1, j) - D(0, j) * D(1, i);
        for (int k = 0; k < n; ++k) {
          J(row, k) = h1(i, k) * D(1, j) + D(0, i) * h2(j, k) - h1(j, k) * D(1, i) - D(0, j) * h2(i, k);
        }
      }
    }
  };
  sys.in_domain = [m](const VecX& z) {
    return z.head(m.p).norm() <= m.radius_x && z.tail(m.q).norm() <= m.radius_y;
  };
  return sys;
}

struct SingularSet {
  std::vector<TracedCurve> branches;
  std::vector<std::vector<CuspHit>> cusps;  // per branch
  std::vector<VecX> self_crossings;
};

namespace detail {

inline std::vector<TracedCurve> tf_branches(const TwiceFold& m, const CurveSystem& sys, int resolution, double step) {
  const int n = m.n();
  const double rmax = std::max(m.radius_x, m.radius_y);
  const double cell = 2.0 * rmax / resolution;
  ContinuationOptions opt;
  opt.step = step;
  opt.bounded = true;
  std::vector<TracedCurve> out;
  long total = 1;
  for (int i = 0; i < n; ++i) total *= resolution;
  VecX z(n);
  for (long idx = 0; idx < total; ++idx) {
    long rest = idx;
    for (int i = 0; i < n; ++i) {
      z[i] = -rmax + (static_cast<double>(rest % resolution) + 0.5) * cell;
      rest /= resolution;
    }
    if (!sys.in_domain(z)) continue;
    auto s = project_to_curve(sys, z, 1e-12, 40, 2.0 * cell * std::sqrt(static_cast<double>(n)));
    if (!s || !sys.in_domain(*s)) continue;
    bool known = false;
    for (const auto& c : out) {
      if (distance_to_curve(c, *s) < 3.0 * step) {
        known = true;
        break;
      }
    }
    if (!known) out.push_back(trace_curve(sys, *s, opt));
  }
  return out;
}

// Critical points of the p = q = 1 determinant lying on its zero set: the
// points where the rank-drop curve crosses itself.
inline std::vector<VecX> tf_planar_self_crossings(const TwiceFold& m) {
  std::vector<VecX> out;
  for (int i = 0; i < 8; ++i) {
    for (int j = 0; j < 8; ++j) {
      Eigen::Vector2d z(-m.radius_x + (i + 0.5) * m.radius_x / 4.0, -m.radius_y + (j + 0.5) * m.radius_y / 4.0);
      // grad det = (4y, 4x); Hessian [[0, 4], [4, 0]].
      Eigen::Matrix2d H;
      H << 0.0, 4.0, 4.0, 0.0;
      for (int it = 0; it < 20; ++it) {
        const Eigen::Vector2d g(4.0 * z.y(), 4.0 * z.x());
        z -= H.inverse() * g;
      }
      const double det = 4.0 * z.x() * z.y() - m.eps * m.eps;
      if (std::abs(det) > 1e-12) continue;
      bool dup = false;
      for (const auto& c : out) dup = dup || (c - VecX(z)).norm() < 1e-9;
      if (!dup) out.push_back(z);
    }
  }
  return out;
}

}  // namespace detail

// Rank-drop locus of the perturbed twice fold inside D^p x D^q. For eps = 0
// only p = q = 1 is a curve (the two coordinate axes, crossing at 0).
inline SingularSet tf_singular_set(const TwiceFold& m, int resolution = 16, double step = 1e-2) {
  m.check();
  if (resolution < 2) throw ModelError("grid resolution must be at least 2");
  SingularSet out;
  if (m.eps == 0.0) {
    if (m.p != 1 || m.q != 1) {
      throw ModelError("eps = 0 with p + q > 2: the rank-drop locus is not a curve");
    }
    for (int axis = 0; axis < 2; ++axis) {
      TracedCurve c;
      const double r = axis == 0 ? m.radius_x : m.radius_y;
      const int count = static_cast<int>(std::ceil(2.0 * r / step));
      for (int i = 0; i <= count; ++i) {
        VecX z = VecX::Zero(2);
        z[axis] = -r + 2.0 * r * i / count;
        c.points.push_back(z);
        VecX t = VecX::Zero(2);
        t[axis] = 1.0;
        c.tangents.push_back(t);
      }
      out.branches.push_back(c);
      out.cusps.emplace_back();
    }
    out.self_crossings = detail::tf_planar_self_crossings(m);
    return out;
  }
  const CurveSystem sys = tf_rank_drop_system(m);
  out.branches = detail::tf_branches(m, sys, resolution, step);
  const auto finer = detail::tf_branches(m, sys, 2 * resolution, step);
  if (finer.size() != out.branches.size()) {
    throw NumericError("grid resolution " + std::to_string(resolution) + " too coarse: found " +
                       std::to_string(out.branches.size()) + " branches, " + std::to_string(finer.size()) +
                       " at twice the resolution");
  }
  const ImageJacobian DF = [m](const VecX& z) { return tf_jacobian(m, z); };
  for (const auto& b : out.branches) out.cusps.push_back(find_cusps(sys, b, DF, 1e-5, 1e-12));
  if (m.p == 1 && m.q == 1) out.self_crossings = detail::tf_planar_self_crossings(m);
  return out;
}

// The fan's twice-fold factor dimensions for a cusp of index kappa in
// dimension n: (kappa + 1, n - kappa - 1), ordered so that p <= q.
inline std::pair<int, int> fan_fiber_model(int n, int kappa) {
  if (n < 2) throw ModelError("dimension must be at least 2");
  if (kappa < 0 || kappa > n - 2) {
    throw ModelError("cusp index " + std::to_string(kappa) + " out of range [0, " + std::to_string(n - 2) + "]");
  }
  int p = kappa + 1, q = n - kappa - 1;
  if (p > q) std::swap(p, q);
  return {p, q};
}

struct LocalFace {
  std::string id;
  std::optional<int> fiber;
  std::optional<int> chi;
};

struct CuspedFan {
  std::string vertex;
  std::vector<std::string> arcs;  // the two arc-ends at the cusp (an arc may appear twice)
  std::vector<LocalFace> faces;   // poorer side first when counts are known
  std::optional<std::pair<int, int>> model;
  bool counts_consistent = true;  // n = 2: the local counts differ by exactly 2
};

inline std::vector<CuspedFan> detect_cusped_fans(const Portrait& p) {
  std::vector<CuspedFan> out;
  for (const Vertex& v : p.vertices) {
    if (v.kind != VertexKind::Cusp) continue;
    CuspedFan fan;
    fan.vertex = v.id;
    std::vector<std::string> face_ids;
    for (const Arc& a : p.arcs) {
      for (int end = 0; end < 2; ++end) {
        if ((end == 0 ? a.from : a.to) != v.id) continue;
        fan.arcs.push_back(a.id);
        for (const auto* f : {&a.left, &a.right}) {
          if (std::find(face_ids.begin(), face_ids.end(), *f) == face_ids.end()) face_ids.push_back(*f);
        }
      }
    }
    for (const auto& id : face_ids) {
      LocalFace lf;
      lf.id = id;
      if (auto idx = p.face_index(id)) {
        lf.fiber = p.faces[*idx].fiber;
        lf.chi = p.faces[*idx].chi;
      }
      fan.faces.push_back(lf);
    }
    const bool all_counts = std::all_of(fan.faces.begin(), fan.faces.end(), [](const LocalFace& f) { return f.fiber.has_value(); });
    if (all_counts) {
      std::stable_sort(fan.faces.begin(), fan.faces.end(), [](const LocalFace& a, const LocalFace& b) { return *a.fiber < *b.fiber; });
      if (p.dimension == 2) {
        fan.counts_consistent = fan.faces.size() == 2 && *fan.faces[1].fiber - *fan.faces[0].fiber == 2;
      }
    }
    if (v.cusp_index) fan.model = fan_fiber_model(p.dimension, *v.cusp_index);
    out.push_back(std::move(fan));
  }
  return out;
}

}  // namespace portraitforge
