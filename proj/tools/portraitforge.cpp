// portraitforge: command-line front end.
//
//   portraitforge analyze <map>        trace, extract and check a map-spec
//   portraitforge check <portrait>     validate and report a portrait file
//   portraitforge enumerate <portrait> list admissible fiber labelings
//   portraitforge construct <kind>     emit a template portrait (or map-spec)
//   portraitforge render <portrait>    draw a portrait as SVG
//
// Exit codes: 0 pass, 2 parity or consistency failure, 1 usage or numeric
// error.

#include "portraitforge/portraitforge.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace pf = portraitforge;

namespace {

constexpr int kPass = 0;
constexpr int kError = 1;
constexpr int kInconsistent = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw UsageError("cannot write " + path);
  out << text;
}

std::string face_list(const pf::Portrait& p, const std::vector<int>& counts) {
  std::string s;
  for (std::size_t f : pf::faces_in_id_order(p)) {
    s += (s.empty() ? "" : " ") + p.faces[f].id + "=" + std::to_string(counts[f]);
  }
  return s;
}

void print_morse(const pf::Portrait& p, const pf::Labeling& l, double theta) {
  for (const auto& m : pf::levine_morse_data(p, l, theta)) {
    std::cout << "MORSE v=" << pf::detail::format_number(m.value) << " i=" << m.index << "\n";
  }
}

// CHI/CUSPS/THOM block shared by analyze and check. Returns the exit code.
int report_invariants(const pf::Portrait& p, int chi) {
  const bool thom = pf::thom_parity(p, chi);
  std::cout << "CHI=" << chi << "\n";
  std::cout << "CUSPS=" << p.cusp_count() << "\n";
  std::cout << "THOM=" << (thom ? "pass" : "fail") << "\n";
  return thom ? kPass : kInconsistent;
}

struct Options {
  std::string input;
  std::string out;
  std::string svg;
  std::size_t max = pf::default_enumeration_cap;
  std::optional<double> theta;
  std::map<std::string, double> tol;

  // construct
  std::string kind;
  int genus = 0;
  std::string polygon;
  std::string field = "R";
  int p = 1, q = 1;
  double eps = 0.2;
  std::string points;
};

int cmd_analyze(const Options& o) {
  auto spec = pf::parse_mapspec(read_file(o.input));
  for (const auto& [name, value] : o.tol) spec.tol.set(name, value);
  const pf::SurfaceSystem sys(spec);
  const auto ex = pf::extract_portrait(sys);
  const pf::Portrait& p = ex.portrait;
  std::cout << "CURVES=" << ex.curves.size() << "\n";
  if (spec.mode == pf::SurfaceMode::Bounded) {
    std::cout << "OPEN_CURVES=" << ex.open_curves << "\n";
    if (ex.base_count) std::cout << "BASE=" << *ex.base_count << "\n";
  }
  std::cout << "CROSSINGS=" << p.crossing_count() << "\n";
  std::cout << "FACES=" << face_list(p, ex.labeling.counts) << "\n";
  for (const auto& fan : pf::detect_cusped_fans(p)) {
    std::cout << "FAN " << fan.vertex;
    if (fan.model) std::cout << " p=" << fan.model->first << " q=" << fan.model->second;
    std::cout << "\n";
  }
  for (const auto& c : ex.curves) {
    for (const auto& m : c.cusps) {
      std::cout << "CUSP at=" << pf::detail::format_number(m.point.x()) << "," << pf::detail::format_number(m.point.y())
                << "," << pf::detail::format_number(m.point.z()) << " image=" << pf::detail::format_number(m.image.x())
                << "," << pf::detail::format_number(m.image.y()) << "\n";
    }
  }
  const int chi = pf::stratified_chi(p, ex.labeling);
  const int code = report_invariants(p, chi);
  if (o.theta) print_morse(p, ex.labeling, *o.theta);
  if (!o.out.empty()) write_file(o.out, pf::serialize_portrait(p));
  if (!o.svg.empty()) write_file(o.svg, pf::render_svg(p));
  return code;
}

int cmd_check(const Options& o) {
  const auto p = pf::parse_portrait(read_file(o.input));
  const auto violations = pf::validate(p);
  if (!violations.empty()) {
    for (const auto& v : violations) std::cout << "VIOLATION " << v.element << " " << v.rule << ": " << v.message << "\n";
    return kInconsistent;
  }
  int chi = 0;
  if (p.dimension == 2) {
    pf::Labeling labels;
    if (auto given = pf::given_labeling(p)) {
      if (auto problem = pf::labeling_problem(p, *given)) {
        std::cout << "LABELING=inconsistent " << *problem << "\n";
        return kInconsistent;
      }
      labels = *given;
    } else {
      const auto prop = pf::propagate(p);
      if (!prop.ok()) {
        std::cout << "LABELING=failed " << prop.report << "\n";
        return kInconsistent;
      }
      labels = *prop.labeling;
    }
    std::cout << "FACES=" << face_list(p, labels.counts) << "\n";
    chi = pf::stratified_chi(p, labels);
    const int code = report_invariants(p, chi);
    if (o.theta) print_morse(p, labels, *o.theta);
    return code;
  }
  chi = pf::stratified_chi(p);
  for (const auto& fan : pf::detect_cusped_fans(p)) {
    std::cout << "FAN " << fan.vertex;
    if (fan.model) std::cout << " p=" << fan.model->first << " q=" << fan.model->second;
    std::cout << "\n";
  }
  return report_invariants(p, chi);
}

int cmd_enumerate(const Options& o) {
  const auto p = pf::parse_portrait(read_file(o.input));
  const auto violations = pf::validate(p);
  if (!violations.empty()) {
    for (const auto& v : violations) std::cout << "VIOLATION " << v.element << " " << v.rule << ": " << v.message << "\n";
    return kInconsistent;
  }
  const auto set = pf::enumerate_labelings(p, o.max);
  std::cout << "LABELINGS=" << set.labelings.size() << "\n";
  if (set.overflow) std::cout << "OVERFLOW=1\n";
  for (const auto& l : set.labelings) std::cout << face_list(p, l.counts) << "\n";
  return kPass;
}

std::vector<pf::LatticePoint> parse_polygon(const std::string& text) {
  std::vector<pf::LatticePoint> out;
  std::istringstream is(text);
  std::string tok;
  while (is >> tok) {
    const auto comma = tok.find(',');
    if (comma == std::string::npos) throw UsageError("polygon vertices are written x,y");
    try {
      out.push_back({std::stoll(tok.substr(0, comma)), std::stoll(tok.substr(comma + 1))});
    } catch (const std::logic_error&) {
      throw UsageError("bad polygon vertex '" + tok + "'");
    }
  }
  return out;
}

std::vector<pf::CriticalPoint> parse_critical(const std::string& text) {
  std::vector<pf::CriticalPoint> out;
  std::istringstream is(text);
  std::string tok;
  while (is >> tok) {
    const auto colon = tok.find(':');
    if (colon == std::string::npos) throw UsageError("critical points are written value:index");
    pf::CriticalPoint c;
    if (!pf::detail::parse_double(tok.substr(0, colon), c.value) || !pf::detail::parse_int(tok.substr(colon + 1), c.index)) {
      throw UsageError("bad critical point '" + tok + "'");
    }
    out.push_back(c);
  }
  return out;
}

int cmd_construct(const Options& o) {
  std::string text;
  if (o.kind == "genus") {
    text = pf::serialize_portrait(pf::genus_surface_portrait(o.genus));
  } else if (o.kind == "toric") {
    text = pf::serialize_portrait(pf::toric_portrait(parse_polygon(o.polygon)));
  } else if (o.kind == "projective") {
    pf::ProjectiveField k;
    if (o.field == "R") k = pf::ProjectiveField::R;
    else if (o.field == "C") k = pf::ProjectiveField::C;
    else if (o.field == "H") k = pf::ProjectiveField::H;
    else throw UsageError("--field must be R, C or H");
    text = pf::serialize_portrait(pf::projective_plane_portrait(k));
  } else if (o.kind == "bundle") {
    text = pf::serialize_portrait(pf::sphere_bundle_portrait(o.p, o.q));
  } else if (o.kind == "morse") {
    text = pf::serialize_portrait(pf::morse_lift(parse_critical(o.points)));
  } else if (o.kind == "tf") {
    pf::TwiceFold m{o.p, o.q, o.eps};
    m.check();
    if (o.p != 1 || o.q != 1) throw UsageError("construct tf emits a map-spec only for p = q = 1");
    const std::string e = pf::detail::format_number(o.eps);
    text = "map v1\n# perturbed twice-folding projection on [-1,1]^2, eps = " + e +
           "\nsurface: z\nF1: x^2 + " + e + "*y\nF2: y^2 + " + e + "*x\nbox: -1 1 -1 1 -0.5 0.5\nmode: bounded\n";
  } else {
    throw UsageError("unknown construct kind '" + o.kind + "' (genus, toric, projective, bundle, morse, tf)");
  }
  if (o.out.empty()) std::cout << text;
  else write_file(o.out, text);
  return kPass;
}

int cmd_render(const Options& o) {
  const auto p = pf::parse_portrait(read_file(o.input));
  const auto svg = pf::render_svg(p);
  const std::string dest = !o.svg.empty() ? o.svg : o.out;
  if (dest.empty()) std::cout << svg;
  else write_file(dest, svg);
  return kPass;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Planar portraits of stable maps to the plane"};
  app.require_subcommand(1);
  Options o;

  auto* analyze = app.add_subcommand("analyze", "Trace the fold locus of a map-spec and report its portrait");
  analyze->add_option("mapspec", o.input, "map-spec file")->required();
  analyze->add_option("--out", o.out, "write the extracted portrait here");
  analyze->add_option("--svg", o.svg, "write an SVG drawing here");
  analyze->add_option("--theta", o.theta, "also print Morse data for the height in direction theta");
  for (auto name : pf::Tolerances::names) {
    const std::string key(name);
    analyze->add_option_function<double>("--tol." + key, [&o, key](double v) { o.tol[key] = v; },
                                         "override tolerance " + key);
  }

  auto* check = app.add_subcommand("check", "Validate a portrait file and report its invariants");
  check->add_option("portrait", o.input, "portrait file")->required();
  check->add_option("--theta", o.theta, "also print Morse data for the height in direction theta");

  auto* enumerate = app.add_subcommand("enumerate", "List the admissible fiber-count labelings of a portrait");
  enumerate->add_option("portrait", o.input, "portrait file")->required();
  enumerate->add_option("--max", o.max, "stop after this many labelings");

  auto* construct = app.add_subcommand("construct", "Emit a template portrait");
  construct->add_option("kind", o.kind, "genus | toric | projective | bundle | morse | tf")->required();
  construct->add_option("--out", o.out, "output file (default stdout)");
  construct->add_option("--g", o.genus, "genus");
  construct->add_option("--polygon", o.polygon, "lattice polygon, e.g. \"0,0 1,0 0,1\"");
  construct->add_option("--field", o.field, "R, C or H");
  construct->add_option("--p", o.p, "first dimension");
  construct->add_option("--q", o.q, "second dimension");
  construct->add_option("--eps", o.eps, "perturbation size");
  construct->add_option("--points", o.points, "critical points, e.g. \"0:0 1:1 2:1 3:2\"");

  auto* render = app.add_subcommand("render", "Draw a portrait as SVG");
  render->add_option("portrait", o.input, "portrait file")->required();
  render->add_option("--svg", o.svg, "output file (default stdout)");
  render->add_option("--out", o.out, "same as --svg");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kPass : kError;
  }

  try {
    if (*analyze) return cmd_analyze(o);
    if (*check) return cmd_check(o);
    if (*enumerate) return cmd_enumerate(o);
    if (*construct) return cmd_construct(o);
    if (*render) return cmd_render(o);
  } catch (const pf::ConsistencyError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInconsistent;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kError;
  }
  return kError;
}
