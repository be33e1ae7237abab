#pragma once

// Map specifications: an implicit surface {g = 0} in a box of R^3 and two
// coordinate functions F1, F2 giving the map to the plane.

#include "portraitforge/expr.hpp"
#include "portraitforge/portrait_io.hpp"

#include <array>
#include <cmath>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>

namespace portraitforge {

class MapSpecError : public std::runtime_error {
public:
  MapSpecError(int line, const std::string& msg)
      : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + msg : msg), line_(line) {}
  int line() const { return line_; }

private:
  int line_;
};

struct Tolerances {
  double step = 1e-2;        // trace step, relative to the largest box extent
  double newton = 1e-10;
  double dedup = 1e-6;
  double speed = 1e-5;
  double clearance = 5e-3;
  double angle_min = 5.0;    // degrees
  double grad_min = 1e-8;

  // Sets a tolerance by name; false if the name is unknown.
  bool set(std::string_view name, double value) {
    if (name == "step") step = value;
    else if (name == "newton") newton = value;
    else if (name == "dedup") dedup = value;
    else if (name == "speed") speed = value;
    else if (name == "clearance") clearance = value;
    else if (name == "angle_min") angle_min = value;
    else if (name == "grad_min") grad_min = value;
    else return false;
    return true;
  }

  static constexpr std::array<std::string_view, 7> names = {"step",      "newton",    "dedup",   "speed",
                                                            "clearance", "angle_min", "grad_min"};
};

enum class SurfaceMode { Closed, Bounded };

struct MapSpec {
  expr::Expr g, F1, F2;
  std::string g_text, F1_text, F2_text;
  std::array<double, 6> box{};  // xmin xmax ymin ymax zmin zmax
  Tolerances tol;
  SurfaceMode mode = SurfaceMode::Closed;

  double extent() const { return std::max({box[1] - box[0], box[3] - box[2], box[5] - box[4]}); }
  bool in_box(double x, double y, double z, double margin = 0.0) const {
    return x >= box[0] - margin && x <= box[1] + margin && y >= box[2] - margin && y <= box[3] + margin &&
           z >= box[4] - margin && z <= box[5] + margin;
  }
};

inline MapSpec parse_mapspec(std::string_view text) {
  MapSpec spec;
  bool header = false, have_g = false, have_f1 = false, have_f2 = false, have_box = false;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t end = std::min(text.find('\n', pos), text.size());
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    while (!line.empty() && std::isspace(static_cast<unsigned char>(line.back()))) line.remove_suffix(1);
    std::size_t lead = 0;
    while (lead < line.size() && std::isspace(static_cast<unsigned char>(line[lead]))) ++lead;
    line = line.substr(lead);
    if (line.empty()) {
      if (end == text.size()) break;
      continue;
    }
    if (!header) {
      if (line != "map v1") throw MapSpecError(line_no, "expected header 'map v1'");
      header = true;
      continue;
    }
    const auto colon = line.find(':');
    if (colon == std::string_view::npos) throw MapSpecError(line_no, "expected '<key>: <value>'");
    std::string_view key = line.substr(0, colon);
    std::string_view value = line.substr(colon + 1);
    while (!value.empty() && value.front() == ' ') value.remove_prefix(1);
    const int value_col = static_cast<int>(lead + colon + 1 + (line.substr(colon + 1).size() - value.size()));

    auto parse_expression = [&](std::string_view src) {
      try {
        return expr::parse(src);
      } catch (const expr::ParseError& e) {
        throw MapSpecError(line_no, "column " + std::to_string(e.column() + value_col) + ": " + e.what() +
                                        " of the expression");
      }
    };
    if (key == "surface") {
      spec.g = parse_expression(value);
      spec.g_text = std::string(value);
      have_g = true;
    } else if (key == "F1") {
      spec.F1 = parse_expression(value);
      spec.F1_text = std::string(value);
      have_f1 = true;
    } else if (key == "F2") {
      spec.F2 = parse_expression(value);
      spec.F2_text = std::string(value);
      have_f2 = true;
    } else if (key == "box") {
      const auto parts = detail::split_ws(value);
      if (parts.size() != 6) throw MapSpecError(line_no, "box needs 6 numbers");
      for (int i = 0; i < 6; ++i) {
        if (!detail::parse_double(parts[i], spec.box[i])) {
          throw MapSpecError(line_no, "bad number '" + std::string(parts[i]) + "' in box");
        }
      }
      for (int i = 0; i < 3; ++i) {
        if (!(spec.box[2 * i] < spec.box[2 * i + 1])) throw MapSpecError(line_no, "box bounds must be increasing");
      }
      have_box = true;
    } else if (key == "mode") {
      if (value == "closed") spec.mode = SurfaceMode::Closed;
      else if (value == "bounded") spec.mode = SurfaceMode::Bounded;
      else throw MapSpecError(line_no, "mode must be 'closed' or 'bounded'");
    } else if (key.substr(0, 4) == "tol.") {
      double v = 0.0;
      if (!detail::parse_double(value, v) || !(v > 0.0)) throw MapSpecError(line_no, "tolerance needs a positive number");
      if (!spec.tol.set(key.substr(4), v)) throw MapSpecError(line_no, "unknown tolerance '" + std::string(key) + "'");
    } else {
      throw MapSpecError(line_no, "unknown key '" + std::string(key) + "'");
    }
    if (end == text.size()) break;
  }
  if (!header) throw MapSpecError(1, "expected header 'map v1'");
  if (!have_g) throw MapSpecError(0, "missing 'surface:'");
  if (!have_f1) throw MapSpecError(0, "missing 'F1:'");
  if (!have_f2) throw MapSpecError(0, "missing 'F2:'");
  if (!have_box) throw MapSpecError(0, "missing 'box:'");
  return spec;
}

inline std::string serialize_mapspec(const MapSpec& spec) {
  std::ostringstream os;
  os << "map v1\n";
  os << "surface: " << (spec.g_text.empty() ? expr::print(spec.g) : spec.g_text) << "\n";
  os << "F1: " << (spec.F1_text.empty() ? expr::print(spec.F1) : spec.F1_text) << "\n";
  os << "F2: " << (spec.F2_text.empty() ? expr::print(spec.F2) : spec.F2_text) << "\n";
  os << "box:";
  for (double b : spec.box) os << " " << detail::format_number(b);
  os << "\n";
  if (spec.mode == SurfaceMode::Bounded) os << "mode: bounded\n";
  return os.str();
}

// Sign of g sampled on the box boundary: in closed mode the surface must
// not reach the boundary. Returns the offending point if it does.
inline std::optional<std::array<double, 3>> box_boundary_violation(const MapSpec& spec, int samples = 24) {
  int sign = 0;
  const auto& b = spec.box;
  for (int face = 0; face < 6; ++face) {
    const int axis = face / 2;
    const double fixed = b[face];
    const int u_axis = (axis + 1) % 3, v_axis = (axis + 2) % 3;
    for (int i = 0; i <= samples; ++i) {
      for (int j = 0; j <= samples; ++j) {
        std::array<double, 3> p{};
        p[axis] = fixed;
        p[u_axis] = b[2 * u_axis] + (b[2 * u_axis + 1] - b[2 * u_axis]) * i / samples;
        p[v_axis] = b[2 * v_axis] + (b[2 * v_axis + 1] - b[2 * v_axis]) * j / samples;
        double v = 0.0;
        try {
          v = expr::eval(spec.g, p[0], p[1], p[2]);
        } catch (const expr::DomainError&) {
          return p;
        }
        const int s = v > 0.0 ? 1 : (v < 0.0 ? -1 : 0);
        if (s == 0 || (sign != 0 && s != sign)) return p;
        sign = s;
      }
    }
  }
  return std::nullopt;
}

}  // namespace portraitforge
