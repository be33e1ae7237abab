#pragma once

// Predictor-corrector continuation of implicit curves {r(x) = 0} in R^d,
// where r has d - 1 (or more, for rank-deficient systems) components.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <functional>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace portraitforge {

using VecX = Eigen::VectorXd;
using MatX = Eigen::MatrixXd;

class NumericError : public std::runtime_error {
public:
  NumericError(const std::string& what, VecX where = {}) : std::runtime_error(what), where_(std::move(where)) {}
  const VecX& where() const { return where_; }

private:
  VecX where_;
};

inline std::string format_point(const VecX& x) {
  std::ostringstream os;
  os.precision(6);
  os << "(";
  for (Eigen::Index i = 0; i < x.size(); ++i) os << (i ? ", " : "") << x[i];
  os << ")";
  return os.str();
}

struct CurveSystem {
  int dim = 0;
  // Residual and Jacobian at x. May throw; a throwing point counts as a
  // failed evaluation.
  std::function<void(const VecX&, VecX&, MatX&)> eval;
  std::function<bool(const VecX&)> in_domain;
};

struct ContinuationOptions {
  double step = 1e-2;       // absolute step length
  double min_step = 0.0;    // 0: step / 1024
  double newton_tol = 1e-10;
  double max_turn = 0.05;   // radians between consecutive tangents
  int max_steps = 400000;
  bool bounded = false;     // curves may leave the domain
};

struct TracedCurve {
  std::vector<VecX> points;
  std::vector<VecX> tangents;  // unit, oriented along the point order
  bool closed = false;
};

namespace detail {

inline bool safe_eval(const CurveSystem& sys, const VecX& x, VecX& r, MatX& J) {
  try {
    sys.eval(x, r, J);
  } catch (const std::exception&) {
    return false;
  }
  return r.allFinite() && J.allFinite();
}

inline VecX null_direction(const MatX& J) {
  Eigen::JacobiSVD<MatX> svd(J, Eigen::ComputeFullV);
  return svd.matrixV().col(J.cols() - 1);
}

}  // namespace detail

// Gauss-Newton (minimum-norm steps) projection of x onto the curve.
inline std::optional<VecX> project_to_curve(const CurveSystem& sys, VecX x, double tol, int max_iter = 40,
                                            double max_move = std::numeric_limits<double>::infinity()) {
  const VecX start = x;
  VecX r;
  MatX J;
  for (int it = 0; it < max_iter; ++it) {
    if (!detail::safe_eval(sys, x, r, J)) return std::nullopt;
    if (r.norm() < tol) return x;
    const VecX dx = J.completeOrthogonalDecomposition().solve(-r);
    if (!dx.allFinite()) return std::nullopt;
    x += dx;
    if ((x - start).norm() > max_move) return std::nullopt;
  }
  if (!detail::safe_eval(sys, x, r, J) || r.norm() >= tol) return std::nullopt;
  return x;
}

inline std::optional<VecX> curve_tangent(const CurveSystem& sys, const VecX& x) {
  VecX r;
  MatX J;
  if (!detail::safe_eval(sys, x, r, J)) return std::nullopt;
  return detail::null_direction(J);
}

namespace detail {

inline double point_segment_distance(const VecX& p, const VecX& a, const VecX& b) {
  const VecX ab = b - a;
  const double len2 = ab.squaredNorm();
  double t = len2 > 0.0 ? (p - a).dot(ab) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return (a + t * ab - p).norm();
}

// One corrector run from the predicted point on the hyperplane orthogonal
// to tangent through `predicted`.
inline std::optional<VecX> correct(const CurveSystem& sys, const VecX& predicted, const VecX& tangent, double tol) {
  VecX x = predicted;
  VecX r;
  MatX J;
  for (int it = 0; it < 12; ++it) {
    if (!safe_eval(sys, x, r, J)) return std::nullopt;
    const double plane = tangent.dot(x - predicted);
    if (r.norm() < tol && std::abs(plane) < 1e-12) return x;
    MatX A(J.rows() + 1, J.cols());
    A << J, tangent.transpose();
    VecX b(J.rows() + 1);
    b << -r, -plane;
    const VecX dx = A.colPivHouseholderQr().solve(b);
    if (!dx.allFinite()) return std::nullopt;
    x += dx;
  }
  if (!safe_eval(sys, x, r, J) || r.norm() >= tol) return std::nullopt;
  return x;
}

enum class MarchEnd { Closed, LeftDomain };

// Marches from seed along `dir`, appending points (excluding the seed).
inline MarchEnd march(const CurveSystem& sys, const VecX& seed, const VecX& seed_tangent, double dir,
                      const ContinuationOptions& opt, std::vector<VecX>& pts, std::vector<VecX>& tans) {
  const double h0 = opt.step;
  const double h_min = opt.min_step > 0.0 ? opt.min_step : h0 / 1024.0;
  VecX x = seed;
  VecX T = dir * seed_tangent;
  double h = h0;
  bool left_seed = false;
  for (int step = 0; step < opt.max_steps; ++step) {
    std::optional<VecX> next;
    VecX T_next;
    while (true) {
      next = correct(sys, x + h * T, T, opt.newton_tol);
      if (next) {
        const double moved = (*next - x).norm();
        auto t = curve_tangent(sys, *next);
        if (t && moved < 2.0 * h && moved > 0.1 * h) {
          T_next = *t;
          if (T_next.dot(T) < 0.0) T_next = -T_next;
          const double turn = std::acos(std::clamp(T_next.dot(T), -1.0, 1.0));
          if (turn <= opt.max_turn || h <= h_min) break;
        }
      }
      h *= 0.5;
      if (h < h_min) throw NumericError("corrector divergence near " + format_point(x), x);
    }
    if (opt.bounded && !sys.in_domain(*next)) return MarchEnd::LeftDomain;
    if (!opt.bounded && !sys.in_domain(*next)) {
      throw NumericError("open curve at box boundary near " + format_point(*next) + " (surface not closed inside the box)", *next);
    }
    if ((*next - seed).norm() > 2.0 * h0) left_seed = true;
    if (left_seed && step >= 3 && point_segment_distance(seed, x, *next) < 0.25 * h0 &&
        T_next.dot(dir * seed_tangent) > 0.5) {
      return MarchEnd::Closed;
    }
    x = *next;
    T = T_next;
    pts.push_back(x);
    tans.push_back(T);
    h = std::min(h0, h * 1.5);
  }
  throw NumericError("continuation exceeded the step budget near " + format_point(x), x);
}

}  // namespace detail

// Traces the curve through `seed` (already on the curve). Closed curves are
// returned once around; in bounded mode open curves run boundary to
// boundary.
inline TracedCurve trace_curve(const CurveSystem& sys, const VecX& seed, const ContinuationOptions& opt) {
  auto t0 = curve_tangent(sys, seed);
  if (!t0) throw NumericError("cannot evaluate the curve system at seed " + format_point(seed), seed);
  TracedCurve out;
  std::vector<VecX> fwd, fwd_t;
  if (detail::march(sys, seed, *t0, 1.0, opt, fwd, fwd_t) == detail::MarchEnd::Closed) {
    out.closed = true;
    out.points.push_back(seed);
    out.tangents.push_back(*t0);
    out.points.insert(out.points.end(), fwd.begin(), fwd.end());
    out.tangents.insert(out.tangents.end(), fwd_t.begin(), fwd_t.end());
    return out;
  }
  std::vector<VecX> back, back_t;
  detail::march(sys, seed, *t0, -1.0, opt, back, back_t);
  for (auto it = back.rbegin(); it != back.rend(); ++it) out.points.push_back(*it);
  for (auto it = back_t.rbegin(); it != back_t.rend(); ++it) out.tangents.push_back(-*it);
  out.points.push_back(seed);
  out.tangents.push_back(*t0);
  out.points.insert(out.points.end(), fwd.begin(), fwd.end());
  out.tangents.insert(out.tangents.end(), fwd_t.begin(), fwd_t.end());
  return out;
}

// Distance from x to the polyline of a traced curve.
inline double distance_to_curve(const TracedCurve& c, const VecX& x) {
  double best = std::numeric_limits<double>::infinity();
  const std::size_t n = c.points.size();
  if (n == 1) return (c.points[0] - x).norm();
  const std::size_t segs = c.closed ? n : n - 1;
  for (std::size_t i = 0; i < segs; ++i) {
    best = std::min(best, detail::point_segment_distance(x, c.points[i], c.points[(i + 1) % n]));
  }
  return best;
}

// ---------------------------------------------------------------------------
// Cusps: points where the image velocity DF * T of the traced curve
// vanishes. Bracketed by a reversal of the image velocity between
// consecutive points, then located by golden-section search of |DF * T|.

struct CuspHit {
  std::size_t segment = 0;  // between points[segment] and points[segment + 1] (cyclic when closed)
  double s = 0.0;           // refined parameter in [0, 1]
  double raw_s = 0.0;       // linear estimate from the bracketing speeds
  VecX point;
  double speed = 0.0;
};

using ImageJacobian = std::function<MatX(const VecX&)>;

inline std::vector<CuspHit> find_cusps(const CurveSystem& sys, const TracedCurve& c, const ImageJacobian& DF,
                                       double speed_tol, double newton_tol = 1e-10) {
  std::vector<CuspHit> out;
  const std::size_t n = c.points.size();
  if (n < 2) return out;
  std::vector<VecX> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = DF(c.points[i]) * c.tangents[i];
  const std::size_t segs = c.closed ? n : n - 1;
  for (std::size_t i = 0; i < segs; ++i) {
    const std::size_t j = (i + 1) % n;
    if (v[i].norm() < speed_tol && v[j].norm() < speed_tol) {
      throw NumericError("near-degenerate contour speed over the segment from " + format_point(c.points[i]) + " to " +
                             format_point(c.points[j]) + " (map not generic)",
                         c.points[i]);
    }
    if (v[i].dot(v[j]) >= 0.0) continue;
    const VecX a = c.points[i], b = c.points[j];
    const VecX Ta = c.tangents[i];
    auto speed_at = [&](double s, VecX* where) {
      auto x = project_to_curve(sys, a + s * (b - a), newton_tol, 40, (b - a).norm());
      if (!x) return std::numeric_limits<double>::infinity();
      auto T = curve_tangent(sys, *x);
      if (!T) return std::numeric_limits<double>::infinity();
      if (T->dot(Ta) < 0.0) *T = -*T;
      if (where) *where = *x;
      return (DF(*x) * *T).norm();
    };
    const double g = 0.5 * (std::sqrt(5.0) - 1.0);
    double lo = 0.0, hi = 1.0;
    double x1 = hi - g * (hi - lo), x2 = lo + g * (hi - lo);
    double f1 = speed_at(x1, nullptr), f2 = speed_at(x2, nullptr);
    while (hi - lo > 1e-9) {
      if (f1 < f2) {
        hi = x2;
        x2 = x1;
        f2 = f1;
        x1 = hi - g * (hi - lo);
        f1 = speed_at(x1, nullptr);
      } else {
        lo = x1;
        x1 = x2;
        f1 = f2;
        x2 = lo + g * (hi - lo);
        f2 = speed_at(x2, nullptr);
      }
    }
    CuspHit hit;
    hit.segment = i;
    hit.s = 0.5 * (lo + hi);
    hit.raw_s = v[i].norm() / (v[i].norm() + v[j].norm());
    hit.speed = speed_at(hit.s, &hit.point);
    if (hit.speed < speed_tol) out.push_back(hit);
  }
  return out;
}

}  // namespace portraitforge
