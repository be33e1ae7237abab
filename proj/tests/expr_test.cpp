#include "portraitforge/expr.hpp"
#include "portraitforge/mapspec.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

using namespace portraitforge;
using namespace portraitforge::expr;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const std::vector<std::string> kMapFixtures = {"sphere.map", "torus.map", "tilted-torus.map",
                                               "tilted-torus-steep.map", "twice-fold.map"};

// Fourth-order central difference.
double central_difference(const Expr& e, std::array<double, 3> p, int var, double h) {
  auto at = [&](double d) {
    auto q = p;
    q[var] += d;
    return eval(e, q[0], q[1], q[2]);
  };
  return (-at(2 * h) + 8 * at(h) - 8 * at(-h) + at(-2 * h)) / (12 * h);
}

// Random expression over the grammar, for round trips.
Expr random_expr(std::mt19937& rng, int depth) {
  std::uniform_int_distribution<int> pick(0, depth <= 0 ? 1 : 9);
  std::uniform_int_distribution<int> var(0, 2);
  std::uniform_real_distribution<double> val(0.1, 5.0);
  switch (pick(rng)) {
    case 0: return constant(std::round(val(rng) * 100) / 100);
    case 1: return variable(var(rng));
    case 2: return expr::detail::make(Op::Neg, random_expr(rng, depth - 1));
    case 3: return expr::detail::make(Op::Sin, random_expr(rng, depth - 1));
    case 4: return expr::detail::make(Op::Cos, random_expr(rng, depth - 1));
    case 5: return expr::detail::make(Op::Add, random_expr(rng, depth - 1), random_expr(rng, depth - 1));
    case 6: return expr::detail::make(Op::Sub, random_expr(rng, depth - 1), random_expr(rng, depth - 1));
    case 7: return expr::detail::make(Op::Mul, random_expr(rng, depth - 1), random_expr(rng, depth - 1));
    case 8: return expr::detail::make(Op::Div, random_expr(rng, depth - 1), variable(var(rng)));
    default: return expr::pow(random_expr(rng, depth - 1), 2 + var(rng));
  }
}

}  // namespace

TEST(Expr, GradientsMatchFiniteDifferences) {
  std::mt19937 rng(7);
  for (const auto& name : kMapFixtures) {
    const MapSpec spec = parse_mapspec(slurp(std::string(PF_FIXTURES) + "/" + name));
    for (const Expr& e : {spec.g, spec.F1, spec.F2}) {
      const auto g = grad(e);
      for (int k = 0; k < 100; ++k) {
        std::array<double, 3> p;
        for (int i = 0; i < 3; ++i) {
          p[i] = std::uniform_real_distribution<double>(spec.box[2 * i], spec.box[2 * i + 1])(rng);
        }
        for (int i = 0; i < 3; ++i) {
          const double exact = eval(g[i], p[0], p[1], p[2]);
          const double fd = central_difference(e, p, i, 1e-3);
          EXPECT_LT(std::abs(exact - fd) / std::max(1.0, std::abs(exact)), 1e-6) << name << " d/d" << "xyz"[i];
        }
      }
    }
  }
}

TEST(Expr, PrintParseRoundTrip) {
  std::mt19937 rng(11);
  for (int k = 0; k < 300; ++k) {
    const Expr e = random_expr(rng, 4);
    const std::string s = print(e);
    const Expr back = parse(s);
    EXPECT_EQ(print(back), s);
    EXPECT_TRUE(equal(parse(print(back)), back)) << s;
  }
  for (const char* s : {"-x^2", "(-x)^2", "x - (y - z)", "x/(y*z)", "2^3^1"}) {
    if (std::string(s) == "2^3^1") {
      EXPECT_THROW(parse(s), ParseError);
      continue;
    }
    const Expr e = parse(s);
    EXPECT_TRUE(equal(parse(print(e)), e)) << s;
  }
  EXPECT_DOUBLE_EQ(eval(parse("-x^2"), 3, 0, 0), -9.0);
  EXPECT_DOUBLE_EQ(eval(parse("(-x)^2"), 3, 0, 0), 9.0);
  EXPECT_DOUBLE_EQ(eval(parse("x - (y - z)"), 1, 2, 3), 2.0);
}

TEST(Expr, DiffIsLinear) {
  const Expr f = parse("sin(x*y) + z^3");
  const Expr g = parse("exp(x) * cos(z) - y/(1 + x^2)");
  const Expr combo = add(mul(constant(2.0), f), mul(constant(-3.0), g));
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int k = 0; k < 50; ++k) {
    const double x = u(rng), y = u(rng), z = u(rng);
    for (int v = 0; v < 3; ++v) {
      const double lhs = eval(diff(combo, v), x, y, z);
      const double rhs = 2 * eval(diff(f, v), x, y, z) - 3 * eval(diff(g, v), x, y, z);
      EXPECT_NEAR(lhs, rhs, 1e-12);
    }
  }
}

TEST(Expr, ClosedFormDerivatives) {
  EXPECT_DOUBLE_EQ(eval(diff(parse("x^3"), 0), 2, 0, 0), 12.0);
  EXPECT_DOUBLE_EQ(eval(diff(parse("sqrt(x)"), 0), 4, 0, 0), 0.25);
  EXPECT_DOUBLE_EQ(eval(diff(parse("x*y*z"), 1), 2, 5, 3), 6.0);
  EXPECT_TRUE(is_const(diff(parse("y + 1"), 0), 0.0));
}

TEST(Expr, ProgramMatchesTreeEvaluation) {
  const std::vector<Expr> outs = {parse("x^2 + y^2 + z^2 - 1"), parse("sin(x) * (x^2 + y^2)"), parse("x^2 + y^2")};
  const Program prog(outs);
  EXPECT_EQ(prog.output_count(), 3u);
  std::vector<double> scratch;
  double out[3];
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> u(-2, 2);
  for (int k = 0; k < 100; ++k) {
    const std::array<double, 3> p{u(rng), u(rng), u(rng)};
    prog.run(p, scratch, out);
    for (int i = 0; i < 3; ++i) EXPECT_DOUBLE_EQ(out[i], eval(outs[i], p[0], p[1], p[2]));
  }
}

TEST(Expr, ParseErrorsCarryColumns) {
  try {
    parse("x +");
    FAIL() << "expected a parse error";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.column(), 4);
    EXPECT_NE(std::string(e.what()).find("column 4"), std::string::npos);
  }
  try {
    parse("x + foo(y)");
    FAIL() << "expected a parse error";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.column(), 5);
    EXPECT_NE(std::string(e.what()).find("foo"), std::string::npos);
  }
  EXPECT_THROW(parse("(x + y"), ParseError);
  EXPECT_THROW(parse("x / 0"), ParseError);
  EXPECT_THROW(parse(""), ParseError);
}

TEST(Expr, DomainErrorsAtEvaluation) {
  EXPECT_THROW(eval(parse("sqrt(x)"), -1, 0, 0), DomainError);
  EXPECT_THROW(eval(parse("1/x"), 0, 0, 0), DomainError);
  EXPECT_DOUBLE_EQ(eval(parse("sqrt(x)"), 9, 0, 0), 3.0);
}

TEST(MapSpec, ParsesFixturesAndRoundTrips) {
  const MapSpec spec = parse_mapspec(slurp(std::string(PF_FIXTURES) + "/twice-fold.map"));
  EXPECT_EQ(spec.mode, SurfaceMode::Bounded);
  EXPECT_DOUBLE_EQ(spec.box[4], -0.5);
  const MapSpec again = parse_mapspec(serialize_mapspec(spec));
  EXPECT_TRUE(equal(again.F1, spec.F1));
  EXPECT_EQ(again.box, spec.box);
  EXPECT_EQ(again.mode, spec.mode);
}

TEST(MapSpec, ErrorsNameTheLine) {
  try {
    parse_mapspec(slurp(std::string(PF_FIXTURES) + "/malformed.map"));
    FAIL() << "expected an error";
  } catch (const MapSpecError& e) {
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
  }
  EXPECT_THROW(parse_mapspec("map v1\nsurface: z\nF1: x\nF2: y\n"), MapSpecError);  // no box
  EXPECT_THROW(parse_mapspec("map v1\nsurface: z\nF1: x\nF2: y\nbox: 1 -1 -1 1 -1 1\n"), MapSpecError);
  EXPECT_THROW(parse_mapspec("map v1\nsurface: z\nF1: x\nF2: y\nbox: -1 1 -1 1 -1 1\ntol.bogus: 1\n"), MapSpecError);
}
