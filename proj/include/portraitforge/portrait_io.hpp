#pragma once

// Line-oriented portrait files:
//
//   portrait v1 dim=<n>
//   vertex <id> cusp|crossing [at <x> <y>] [index=<k>] [chi=<c>]
//   arc <id> from=<vid> to=<vid> left=<fid> right=<fid> [chi=<c>] [pts= x1,y1 x2,y2 ...]
//   circle <id> left=<fid> right=<fid> [chi=<c>] [pts= ...]
//   face <id> [fiber=<int>|chi=<int>] [comps=<int>] [unbounded]
//
// '#' starts a comment. Elements may appear in any order.

#include "portraitforge/portrait.hpp"

#include <charconv>
#include <cctype>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace portraitforge {

class PortraitParseError : public std::runtime_error {
public:
  PortraitParseError(const std::string& what, int line)
      : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
  int line() const { return line_; }

private:
  int line_;
};

namespace detail {

inline std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    const std::size_t start = i;
    while (i < s.size() && !std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    if (i > start) out.push_back(s.substr(start, i - start));
  }
  return out;
}

inline bool parse_double(std::string_view s, double& out) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

inline bool parse_int(std::string_view s, int& out) {
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

inline std::string format_number(double v) {
  if (v == 0.0) v = 0.0;  // drop negative zero
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

// Natural ordering of ids: digit runs compare numerically ("f2" < "f10").
inline bool natural_less(const std::string& a, const std::string& b) {
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    const bool da = std::isdigit(static_cast<unsigned char>(a[i])) != 0;
    const bool db = std::isdigit(static_cast<unsigned char>(b[j])) != 0;
    if (da && db) {
      std::size_t ie = i, je = j;
      while (ie < a.size() && std::isdigit(static_cast<unsigned char>(a[ie]))) ++ie;
      while (je < b.size() && std::isdigit(static_cast<unsigned char>(b[je]))) ++je;
      std::string_view na(a.data() + i, ie - i), nb(b.data() + j, je - j);
      while (na.size() > 1 && na.front() == '0') na.remove_prefix(1);
      while (nb.size() > 1 && nb.front() == '0') nb.remove_prefix(1);
      if (na.size() != nb.size()) return na.size() < nb.size();
      if (na != nb) return na < nb;
      i = ie;
      j = je;
    } else {
      if (a[i] != b[j]) return a[i] < b[j];
      ++i;
      ++j;
    }
  }
  if (a.size() - i != b.size() - j) return a.size() - i < b.size() - j;
  return a < b;
}

class PortraitReader {
public:
  explicit PortraitReader(std::string_view text) : text_(text) {}

  Portrait run() {
    std::istringstream in{std::string(text_)};
    std::string raw;
    bool header = false;
    while (std::getline(in, raw)) {
      ++line_;
      std::string_view line(raw);
      if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
      auto tok = split_ws(line);
      if (tok.empty()) continue;
      if (!header) {
        read_header(tok);
        header = true;
        continue;
      }
      if (tok[0] == "vertex") read_vertex(tok);
      else if (tok[0] == "arc") read_arc(tok);
      else if (tok[0] == "circle") read_circle(tok);
      else if (tok[0] == "face") read_face(tok);
      else fail("unknown record '" + std::string(tok[0]) + "'");
    }
    if (!header) throw PortraitParseError("missing 'portrait v1 dim=<n>' header", 1);
    resolve();
    build_boundary_walks(p_);
    return std::move(p_);
  }

private:
  std::string_view text_;
  int line_ = 0;
  Portrait p_;
  std::set<std::string> ids_;
  std::vector<std::pair<std::string, int>> vertex_refs_, face_refs_;

  [[noreturn]] void fail(const std::string& msg) const { throw PortraitParseError(msg, line_); }

  void declare(std::string_view id) {
    if (id.empty()) fail("empty id");
    if (!ids_.insert(std::string(id)).second) fail("duplicate id '" + std::string(id) + "'");
  }

  static bool key_value(std::string_view tok, std::string_view key, std::string_view& value) {
    if (tok.size() <= key.size() || tok.substr(0, key.size()) != key || tok[key.size()] != '=') return false;
    value = tok.substr(key.size() + 1);
    return true;
  }

  int int_value(std::string_view v, std::string_view key) const {
    int out = 0;
    if (!parse_int(v, out)) fail("expected integer for " + std::string(key) + "=, got '" + std::string(v) + "'");
    return out;
  }

  double double_value(std::string_view v) const {
    double out = 0.0;
    if (!parse_double(v, out)) fail("expected number, got '" + std::string(v) + "'");
    return out;
  }

  // pts= may carry its first point in the same token ("pts=1,2") or not ("pts= 1,2").
  Polyline2 read_points(const std::vector<std::string_view>& tok, std::size_t first, std::string_view inline_first) {
    Polyline2 pts;
    auto add = [&](std::string_view pair) {
      const auto comma = pair.find(',');
      if (comma == std::string_view::npos) fail("point '" + std::string(pair) + "' is not x,y");
      pts.emplace_back(double_value(pair.substr(0, comma)), double_value(pair.substr(comma + 1)));
    };
    if (!inline_first.empty()) add(inline_first);
    for (std::size_t i = first; i < tok.size(); ++i) add(tok[i]);
    if (pts.empty()) fail("pts= without points");
    return pts;
  }

  void read_header(const std::vector<std::string_view>& tok) {
    if (tok.size() != 3 || tok[0] != "portrait" || tok[1] != "v1") fail("expected 'portrait v1 dim=<n>'");
    std::string_view v;
    if (!key_value(tok[2], "dim", v)) fail("expected dim=<n>");
    p_.dimension = int_value(v, "dim");
    if (p_.dimension < 2) fail("dim must be at least 2");
  }

  void read_vertex(const std::vector<std::string_view>& tok) {
    if (tok.size() < 3) fail("vertex needs an id and a kind");
    Vertex v;
    declare(tok[1]);
    v.id = std::string(tok[1]);
    if (tok[2] == "cusp") v.kind = VertexKind::Cusp;
    else if (tok[2] == "crossing") v.kind = VertexKind::Crossing;
    else fail("vertex kind must be cusp or crossing");
    for (std::size_t i = 3; i < tok.size(); ++i) {
      std::string_view val;
      if (tok[i] == "at") {
        if (i + 2 >= tok.size()) fail("'at' needs two coordinates");
        v.position = Vec2(double_value(tok[i + 1]), double_value(tok[i + 2]));
        i += 2;
      } else if (key_value(tok[i], "index", val)) {
        if (v.kind != VertexKind::Cusp) fail("index= is only valid on cusps");
        const int k = int_value(val, "index");
        if (k < 0 || k > p_.dimension - 2) fail("cusp index outside [0, n-2]");
        v.cusp_index = canonical_cusp_index(k, p_.dimension);
      } else if (key_value(tok[i], "chi", val)) {
        v.chi = int_value(val, "chi");
      } else {
        fail("unexpected token '" + std::string(tok[i]) + "'");
      }
    }
    p_.vertices.push_back(std::move(v));
  }

  void read_arc(const std::vector<std::string_view>& tok) {
    if (tok.size() < 2) fail("arc needs an id");
    Arc a;
    declare(tok[1]);
    a.id = std::string(tok[1]);
    bool has_from = false, has_to = false, has_left = false, has_right = false;
    for (std::size_t i = 2; i < tok.size(); ++i) {
      std::string_view val;
      if (key_value(tok[i], "from", val)) {
        a.from = std::string(val);
        has_from = true;
        vertex_refs_.emplace_back(a.from, line_);
      } else if (key_value(tok[i], "to", val)) {
        a.to = std::string(val);
        has_to = true;
        vertex_refs_.emplace_back(a.to, line_);
      } else if (key_value(tok[i], "left", val)) {
        a.left = std::string(val);
        has_left = true;
        face_refs_.emplace_back(a.left, line_);
      } else if (key_value(tok[i], "right", val)) {
        a.right = std::string(val);
        has_right = true;
        face_refs_.emplace_back(a.right, line_);
      } else if (key_value(tok[i], "chi", val)) {
        a.chi = int_value(val, "chi");
      } else if (tok[i] == "pts=" || key_value(tok[i], "pts", val)) {
        a.points = read_points(tok, i + 1, tok[i] == "pts=" ? std::string_view{} : val);
        break;
      } else {
        fail("unexpected token '" + std::string(tok[i]) + "'");
      }
    }
    if (!has_from || !has_to || !has_left || !has_right) fail("arc needs from=, to=, left= and right=");
    p_.arcs.push_back(std::move(a));
  }

  void read_circle(const std::vector<std::string_view>& tok) {
    if (tok.size() < 2) fail("circle needs an id");
    Circle c;
    declare(tok[1]);
    c.id = std::string(tok[1]);
    bool has_left = false, has_right = false;
    for (std::size_t i = 2; i < tok.size(); ++i) {
      std::string_view val;
      if (key_value(tok[i], "left", val)) {
        c.left = std::string(val);
        has_left = true;
        face_refs_.emplace_back(c.left, line_);
      } else if (key_value(tok[i], "right", val)) {
        c.right = std::string(val);
        has_right = true;
        face_refs_.emplace_back(c.right, line_);
      } else if (key_value(tok[i], "chi", val)) {
        c.chi = int_value(val, "chi");
      } else if (tok[i] == "pts=" || key_value(tok[i], "pts", val)) {
        c.points = read_points(tok, i + 1, tok[i] == "pts=" ? std::string_view{} : val);
        break;
      } else {
        fail("unexpected token '" + std::string(tok[i]) + "'");
      }
    }
    if (!has_left || !has_right) fail("circle needs left= and right=");
    p_.circles.push_back(std::move(c));
  }

  void read_face(const std::vector<std::string_view>& tok) {
    if (tok.size() < 2) fail("face needs an id");
    Face f;
    declare(tok[1]);
    f.id = std::string(tok[1]);
    for (std::size_t i = 2; i < tok.size(); ++i) {
      std::string_view val;
      if (key_value(tok[i], "fiber", val)) f.fiber = int_value(val, "fiber");
      else if (key_value(tok[i], "chi", val)) f.chi = int_value(val, "chi");
      else if (key_value(tok[i], "comps", val)) f.components = int_value(val, "comps");
      else if (tok[i] == "unbounded") f.unbounded = true;
      else fail("unexpected token '" + std::string(tok[i]) + "'");
    }
    if (f.fiber && f.chi) fail("face takes fiber= or chi=, not both");
    p_.faces.push_back(std::move(f));
  }

  void resolve() {
    for (const auto& [id, line] : vertex_refs_) {
      if (!p_.vertex_index(id)) throw PortraitParseError("reference to undeclared vertex '" + id + "'", line);
    }
    for (const auto& [id, line] : face_refs_) {
      if (!p_.face_index(id)) throw PortraitParseError("reference to undeclared face '" + id + "'", line);
    }
  }
};

}  // namespace detail

inline Portrait parse_portrait(std::string_view text) { return detail::PortraitReader(text).run(); }

// Canonical text: header, then vertices, arcs, circles and faces, each sorted
// by natural id order, with shortest round-trip number formatting.
inline std::string serialize_portrait(const Portrait& p) {
  using detail::format_number;
  auto sorted = [](const auto& items) {
    std::vector<const std::remove_cvref_t<decltype(items.front())>*> out;
    for (const auto& item : items) out.push_back(&item);
    std::sort(out.begin(), out.end(), [](auto* a, auto* b) { return detail::natural_less(a->id, b->id); });
    return out;
  };
  auto points = [](const Polyline2& pts) {
    std::string s = " pts=";
    for (const Vec2& q : pts) s += " " + format_number(q.x()) + "," + format_number(q.y());
    return s;
  };

  std::string out = "portrait v1 dim=" + std::to_string(p.dimension) + "\n";
  if (!p.vertices.empty()) {
    for (const Vertex* v : sorted(p.vertices)) {
      out += "vertex " + v->id + (v->kind == VertexKind::Cusp ? " cusp" : " crossing");
      if (v->position) out += " at " + format_number(v->position->x()) + " " + format_number(v->position->y());
      if (v->cusp_index) out += " index=" + std::to_string(*v->cusp_index);
      if (v->chi) out += " chi=" + std::to_string(*v->chi);
      out += "\n";
    }
  }
  if (!p.arcs.empty()) {
    for (const Arc* a : sorted(p.arcs)) {
      out += "arc " + a->id + " from=" + a->from + " to=" + a->to + " left=" + a->left + " right=" + a->right;
      if (a->chi) out += " chi=" + std::to_string(*a->chi);
      if (!a->points.empty()) out += points(a->points);
      out += "\n";
    }
  }
  if (!p.circles.empty()) {
    for (const Circle* c : sorted(p.circles)) {
      out += "circle " + c->id + " left=" + c->left + " right=" + c->right;
      if (c->chi) out += " chi=" + std::to_string(*c->chi);
      if (!c->points.empty()) out += points(c->points);
      out += "\n";
    }
  }
  for (const Face* f : sorted(p.faces)) {
    out += "face " + f->id;
    if (f->fiber) out += " fiber=" + std::to_string(*f->fiber);
    if (f->chi) out += " chi=" + std::to_string(*f->chi);
    if (f->components) out += " comps=" + std::to_string(*f->components);
    if (f->unbounded) out += " unbounded";
    out += "\n";
  }
  return out;
}

}  // namespace portraitforge
