#include "portraitforge/constructors.hpp"
#include "portraitforge/portrait_io.hpp"
#include "portraitforge/svg.hpp"

#include <gtest/gtest.h>

#include <fstream>
#include <regex>
#include <sstream>

using namespace portraitforge;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::size_t occurrences(const std::string& s, const std::string& needle) {
  std::size_t n = 0;
  for (auto pos = s.find(needle); pos != std::string::npos; pos = s.find(needle, pos + 1)) ++n;
  return n;
}

}  // namespace

TEST(Svg, OnePathPerFoldCurve) {
  for (const char* name : {"sphere", "torus", "genus2", "rp2", "tilted-torus-steep", "cp2-toric"}) {
    const Portrait p = parse_portrait(slurp(std::string(PF_FIXTURES) + "/" + name + ".portrait"));
    const std::string svg = render_svg(p);
    EXPECT_EQ(occurrences(svg, "<path"), p.arcs.size() + p.circles.size()) << name;
    EXPECT_EQ(occurrences(svg, "class=\"cusp\""), p.cusp_count()) << name;
    EXPECT_EQ(occurrences(svg, "class=\"crossing\""), p.vertices.size() - p.cusp_count()) << name;
    EXPECT_EQ(svg.rfind("<svg ", 0), 0u);
    EXPECT_EQ(svg.substr(svg.size() - 7), "</svg>\n");
    EXPECT_EQ(svg.find("nan"), std::string::npos);
    EXPECT_EQ(svg.find("inf"), std::string::npos);
  }
}

TEST(Svg, Deterministic) {
  const Portrait p = parse_portrait(slurp(std::string(PF_FIXTURES) + "/tilted-torus-steep.portrait"));
  EXPECT_EQ(render_svg(p), render_svg(p));
  EXPECT_EQ(render_svg(p), render_svg(parse_portrait(serialize_portrait(p))));
}

TEST(Svg, LegendListsEachLabelOnce) {
  const Portrait p = parse_portrait(slurp(std::string(PF_FIXTURES) + "/rp2.portrait"));
  const std::string svg = render_svg(p);
  EXPECT_NE(svg.find("fiber count"), std::string::npos);
  for (const char* v : {">0</text>", ">2</text>", ">4</text>"}) EXPECT_EQ(occurrences(svg, v), 1u) << v;
  const std::string chi = render_svg(projective_plane_portrait(ProjectiveField::C));
  EXPECT_NE(chi.find("fiber chi"), std::string::npos);
}

TEST(Svg, CoordinatesStayInTheCanvas) {
  const std::string svg = render_svg(genus_surface_portrait(3));
  const std::regex num(R"((-?\d+\.\d\d))");
  for (auto it = std::sregex_iterator(svg.begin(), svg.end(), num); it != std::sregex_iterator(); ++it) {
    const double v = std::stod((*it)[1]);
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 620.0);
  }
}

TEST(Svg, NeedsGeometry) {
  const Portrait bare = parse_portrait(
      "portrait v1 dim=2\nvertex v1 cusp\narc a1 from=v1 to=v1 left=f1 right=f0\n"
      "face f0 fiber=0 unbounded\nface f1 fiber=2\n");
  EXPECT_THROW(render_svg(bare), RenderError);
}
