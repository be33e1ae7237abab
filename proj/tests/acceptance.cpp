// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include "portraitforge/portraitforge.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

using namespace portraitforge;

namespace {

constexpr double kContourTol = 1e-3;   // Hausdorff distance of traced contours
constexpr double kCuspTol = 1e-4;      // twice-fold cusp location
constexpr double kGradRelTol = 1e-6;   // symbolic vs finite-difference gradients
constexpr int kMorseTrials = 200;
constexpr std::size_t kMorseMaxLen = 12;
constexpr std::size_t kEnumMaxFaces = 6;

const std::string kFixtures = PF_FIXTURES;

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

MapSpec load_map(const std::string& name) { return parse_mapspec(slurp(kFixtures + "/" + name)); }

std::vector<std::string> portrait_files() {
  std::vector<std::string> out;
  for (const auto& e : std::filesystem::directory_iterator(kFixtures)) {
    if (e.path().extension() == ".portrait") out.push_back(e.path().string());
  }
  std::sort(out.begin(), out.end());
  return out;
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(int n, const char* title, const std::function<Outcome()>& check) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = check();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (!o.pass) ++failures;
  std::printf("%s %2d %s: %s (%.2fs)\n", o.pass ? "PASS" : "FAIL", n, title, o.detail.c_str(), secs);
  std::fflush(stdout);
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

double seg_dist(const Vec2& p, const Vec2& a, const Vec2& b) {
  const Vec2 d = b - a;
  const double t = std::clamp((p - a).dot(d) / d.squaredNorm(), 0.0, 1.0);
  return (a + t * d - p).norm();
}

double hausdorff_to_circle(const std::vector<Vec2>& image, double r) {
  double worst = 0.0;
  for (const auto& w : image) worst = std::max(worst, std::abs(w.norm() - r));
  for (int k = 0; k < 720; ++k) {
    const double a = 2 * std::numbers::pi * k / 720;
    const Vec2 q(r * std::cos(a), r * std::sin(a));
    double best = INFINITY;
    for (std::size_t i = 0; i < image.size(); ++i) best = std::min(best, seg_dist(q, image[i], image[(i + 1) % image.size()]));
    worst = std::max(worst, best);
  }
  return worst;
}

std::size_t cusp_total(const std::vector<FoldCurve>& curves) {
  std::size_t n = 0;
  for (const auto& c : curves) n += c.cusps.size();
  return n;
}

std::vector<int> sorted_counts(const Labeling& l) {
  auto c = l.counts;
  std::sort(c.begin(), c.end());
  return c;
}

// Random valid critical sequence from the nesting grammar
//   sheet := 0 (sheet | hole)* 2,  hole := 1 sheet* 1.
std::vector<CriticalPoint> random_critical_sequence(std::mt19937& rng) {
  std::vector<int> idx;
  std::uniform_int_distribution<int> coin(0, 2);
  std::function<void(bool, int)> fill = [&](bool in_hole, int depth) {
    while (idx.size() + 2 + static_cast<std::size_t>(depth) <= kMorseMaxLen && coin(rng) != 0) {
      const bool hole = !in_hole && coin(rng) == 0;
      idx.push_back(hole ? 1 : 0);
      fill(hole, depth + 1);
      idx.push_back(hole ? 1 : 2);
    }
  };
  do {
    idx.push_back(0);
    fill(false, 1);
    idx.push_back(2);
  } while (idx.size() + 2 <= kMorseMaxLen && coin(rng) == 0);
  std::vector<CriticalPoint> out;
  double v = std::uniform_real_distribution<double>(-3, 3)(rng);
  for (int i : idx) {
    out.push_back({v, i});
    v += std::uniform_real_distribution<double>(0.25, 2.0)(rng);
  }
  return out;
}

// Every even labeling bounded by 2 * #faces that differs by exactly 2
// across each arc and circle, with the outer face at 0.
std::set<std::vector<int>> brute_force_labelings(const Portrait& p) {
  std::vector<std::pair<std::size_t, std::size_t>> sides;
  for (const auto& a : p.arcs) sides.push_back({*p.face_index(a.left), *p.face_index(a.right)});
  for (const auto& c : p.circles) sides.push_back({*p.face_index(c.left), *p.face_index(c.right)});
  const std::size_t n = p.faces.size();
  std::set<std::vector<int>> out;
  std::vector<int> digit(n, 0);
  while (true) {
    std::vector<int> counts(n);
    bool ok = true;
    for (std::size_t i = 0; i < n; ++i) {
      counts[i] = 2 * digit[i];
      if (p.faces[i].unbounded && counts[i] != 0) ok = false;
    }
    for (auto [a, b] : sides) ok = ok && std::abs(counts[a] - counts[b]) == 2;
    if (ok) out.insert(counts);
    std::size_t k = 0;
    while (k < n && ++digit[k] > static_cast<int>(n)) digit[k++] = 0;
    if (k == n) break;
  }
  return out;
}

Outcome tilted_torus(const std::string& file) {
  MapSpec spec = load_map(file);
  const auto ex = extract_portrait(spec);
  const std::size_t cusps = ex.portrait.cusp_count();
  spec.tol.step /= 2;
  const std::size_t cusps_half = cusp_total(trace_fold_locus(spec));
  const int chi = stratified_chi(ex.portrait, ex.labeling);
  const bool thom = thom_parity(ex.portrait, chi);
  Outcome o;
  o.pass = cusps == 4 && cusps_half == 4 && chi == 0 && thom;
  o.detail = "CUSPS=" + std::to_string(cusps) + " (half step " + std::to_string(cusps_half) +
             ", expected 4) CHI=" + std::to_string(chi) + " THOM=" + (thom ? "pass" : "fail");
  return o;
}

}  // namespace

int main() {
  report(1, "sphere map-spec", [] {
    const auto ex = extract_portrait(load_map("sphere.map"));
    const double hd = ex.curves.size() == 1 ? hausdorff_to_circle(ex.curves[0].image, 1.0) : INFINITY;
    const int chi = stratified_chi(ex.portrait, ex.labeling);
    const bool thom = thom_parity(ex.portrait, chi);
    const bool faces = sorted_counts(ex.labeling) == std::vector<int>{0, 2};
    return Outcome{hd < kContourTol && ex.portrait.cusp_count() == 0 && faces && chi == 2 && thom,
                   "hausdorff=" + fmt("%.2e", hd) + " CUSPS=" + std::to_string(ex.portrait.cusp_count()) +
                       " faces " + (faces ? "{0,2}" : "wrong") + " CHI=" + std::to_string(chi) +
                       " THOM=" + (thom ? "pass" : "fail")};
  });

  report(2, "axis-aligned torus map-spec", [] {
    const auto ex = extract_portrait(load_map("torus.map"));
    double worst = ex.curves.size() == 2 ? 0.0 : INFINITY;
    std::vector<double> radii;
    for (const auto& c : ex.curves) {
      const double r = c.image.front().norm() < 2.0 ? 1.0 : 3.0;
      radii.push_back(r);
      worst = std::max(worst, hausdorff_to_circle(c.image, r));
    }
    std::sort(radii.begin(), radii.end());
    const int chi = stratified_chi(ex.portrait, ex.labeling);
    const bool thom = thom_parity(ex.portrait, chi);
    return Outcome{worst < kContourTol && radii == std::vector<double>{1.0, 3.0} && chi == 0 && thom,
                   "circles=" + std::to_string(ex.curves.size()) + " hausdorff=" + fmt("%.2e", worst) +
                       " CHI=" + std::to_string(chi) + " THOM=" + (thom ? "pass" : "fail")};
  });

  report(3, "tilted torus alpha=0.5", [] { return tilted_torus("tilted-torus.map"); });
  {
    const auto steep = tilted_torus("tilted-torus-steep.map");
    std::printf("     note: same torus at alpha=1.0: %s\n", steep.detail.c_str());
  }

  report(4, "perturbed twice-fold p=q=1 eps=0.2", [] {
    const auto ex = extract_portrait(load_map("twice-fold.map"));
    std::vector<CuspMarker> cusps;
    for (const auto& c : ex.curves) cusps.insert(cusps.end(), c.cusps.begin(), c.cusps.end());
    const auto flat = tf_singular_set(TwiceFold{1, 1, 0.0});
    if (cusps.size() != 1) return Outcome{false, "cusps=" + std::to_string(cusps.size())};
    const double ds = (cusps[0].point.head<2>() - Vec2(0.1, 0.1)).norm() + std::abs(cusps[0].point.z());
    const double di = (cusps[0].image - Vec2(0.03, 0.03)).norm();
    return Outcome{ds < kCuspTol && di < kCuspTol && !flat.self_crossings.empty(),
                   "cusps=1 source err=" + fmt("%.1e", ds) + " image err=" + fmt("%.1e", di) +
                       " eps=0 self-crossings=" + std::to_string(flat.self_crossings.size())};
  });

  report(5, "genus surfaces chi = 2 - 2g, g = 0..4", [] {
    std::string got;
    bool ok = true;
    for (int g = 0; g <= 4; ++g) {
      const int chi = stratified_chi(genus_surface_portrait(g));
      ok = ok && chi == 2 - 2 * g;
      got += (g ? " " : "") + std::to_string(chi);
    }
    return Outcome{ok, "chi = " + got};
  });

  report(6, "toric polygons", [] {
    const Portrait tri = toric_portrait({{0, 0}, {1, 0}, {0, 1}});
    const Portrait sq = toric_portrait({{0, 0}, {1, 0}, {1, 1}, {0, 1}});
    std::string reject = "accepted";
    try {
      toric_portrait({{0, 0}, {2, 0}, {0, 1}});
    } catch (const ConstructionError& e) {
      reject = e.what();
    }
    const bool named = reject.find("(0,1)") != std::string::npos;
    const bool ok = tri.cusp_count() == 3 && stratified_chi(tri) == 3 && sq.cusp_count() == 4 &&
                    stratified_chi(sq) == 4 && named;
    return Outcome{ok, "triangle cusps=" + std::to_string(tri.cusp_count()) + " CHI=" + std::to_string(stratified_chi(tri)) +
                           ", square cusps=" + std::to_string(sq.cusp_count()) + " CHI=" +
                           std::to_string(stratified_chi(sq)) + ", non-Delzant: " + reject};
  });

  report(7, "Morse-lift round trip", [] {
    std::mt19937 rng(20240);
    int bad = 0;
    std::size_t longest = 0;
    for (int k = 0; k < kMorseTrials; ++k) {
      const auto s = random_critical_sequence(rng);
      longest = std::max(longest, s.size());
      const Portrait p = morse_lift(s);
      const auto labels = *given_labeling(p);
      const auto data = levine_morse_data(p, labels, 0.0);
      std::vector<CriticalPoint> back;
      for (const auto& m : data) back.push_back({m.value, m.index});
      if (back != s || morse_alternating_sum(data) != stratified_chi(p, labels)) ++bad;
    }
    return Outcome{bad == 0, std::to_string(kMorseTrials - bad) + "/" + std::to_string(kMorseTrials) +
                                 " exact, longest sequence " + std::to_string(longest)};
  });

  report(8, "enumeration completeness", [] {
    int checked = 0, bad = 0;
    for (const auto& f : portrait_files()) {
      Portrait p = parse_portrait(slurp(f));
      if (p.dimension != 2 || p.faces.size() > kEnumMaxFaces || !validate(p).empty()) continue;
      for (auto& face : p.faces) face.fiber.reset();
      const auto got = enumerate_labelings(p);
      std::set<std::vector<int>> have;
      for (const auto& l : got.labelings) have.insert(l.counts);
      if (got.overflow || have.size() != got.labelings.size() || have != brute_force_labelings(p)) ++bad;
      ++checked;
    }
    return Outcome{bad == 0 && checked > 0, std::to_string(checked - bad) + "/" + std::to_string(checked) +
                                                " fixture portraits match brute force"};
  });

  report(9, "Morse equality, 8 directions", [] {
    std::vector<std::pair<std::string, Portrait>> geo;
    for (const auto& f : portrait_files()) {
      const Portrait p = parse_portrait(slurp(f));
      if (p.dimension == 2 && p.has_geometry() && given_labeling(p) && validate(p).empty()) {
        geo.push_back({std::filesystem::path(f).filename().string(), p});
      }
    }
    for (const char* m : {"sphere.map", "torus.map", "tilted-torus.map", "tilted-torus-steep.map"}) {
      const auto ex = extract_portrait(load_map(m));
      Portrait p = ex.portrait;
      for (std::size_t i = 0; i < p.faces.size(); ++i) p.faces[i].fiber = ex.labeling.counts[i];
      geo.push_back({m, p});
    }
    int checks = 0, bad = 0;
    std::string first;
    for (const auto& [name, p] : geo) {
      const auto labels = *given_labeling(p);
      const int chi = stratified_chi(p, labels);
      for (int k = 0; k < 8; ++k) {
        const double theta = 0.1234 + k * std::numbers::pi / 4;
        ++checks;
        if (morse_alternating_sum(levine_morse_data(p, labels, theta)) != chi) {
          ++bad;
          if (first.empty()) first = " first mismatch " + name;
        }
      }
    }
    return Outcome{bad == 0, std::to_string(checks - bad) + "/" + std::to_string(checks) + " over " +
                                 std::to_string(geo.size()) + " portraits" + first};
  });

  report(10, "stratification identity", [] {
    int checked = 0, bad = 0;
    auto check = [&](const Portrait& p) {
      if (!validate(p).empty()) return;
      ++checked;
      if (stratification_sum(p) != 1) ++bad;
    };
    for (const auto& f : portrait_files()) check(parse_portrait(slurp(f)));
    for (int g = 0; g <= 4; ++g) check(genus_surface_portrait(g));
    check(toric_portrait({{0, 0}, {3, 0}, {2, 1}, {0, 1}}));
    check(projective_plane_portrait(ProjectiveField::H));
    check(sphere_bundle_portrait(2, 3));
    return Outcome{bad == 0 && checked > 0, std::to_string(checked - bad) + "/" + std::to_string(checked) + " portraits sum to 1"};
  });

  report(11, "parser gradients vs central differences", [] {
    std::mt19937 rng(11);
    double worst = 0.0;
    int checks = 0;
    for (const char* m : {"sphere.map", "torus.map", "tilted-torus.map", "tilted-torus-steep.map", "twice-fold.map"}) {
      const MapSpec spec = load_map(m);
      for (const expr::Expr& e : {spec.g, spec.F1, spec.F2}) {
        const auto g = expr::grad(e);
        for (int k = 0; k < 100; ++k) {
          std::array<double, 3> p;
          for (int i = 0; i < 3; ++i) p[i] = std::uniform_real_distribution<double>(spec.box[2 * i], spec.box[2 * i + 1])(rng);
          for (int i = 0; i < 3; ++i) {
            auto at = [&](double d) {
              auto q = p;
              q[i] += d;
              return expr::eval(e, q[0], q[1], q[2]);
            };
            const double h = 1e-3;
            const double fd = (-at(2 * h) + 8 * at(h) - 8 * at(-h) + at(-2 * h)) / (12 * h);
            const double exact = expr::eval(g[i], p[0], p[1], p[2]);
            worst = std::max(worst, std::abs(exact - fd) / std::max(1.0, std::abs(exact)));
            ++checks;
          }
        }
      }
    }
    return Outcome{worst < kGradRelTol, std::to_string(checks) + " partials, worst rel err " + fmt("%.1e", worst)};
  });

  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
