#include "portraitforge/analysis.hpp"
#include "portraitforge/constructors.hpp"
#include "portraitforge/local_models.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace portraitforge;

namespace {

// Random valid critical sequence of length <= max_len, built from the
// nesting grammar rather than by replaying the lift's rules:
//   top   := sheet+
//   sheet := 0 (sheet | hole)* 2
//   hole  := 1 sheet* 1
std::vector<int> random_indices(std::mt19937& rng, std::size_t max_len) {
  std::vector<int> out;
  std::uniform_int_distribution<int> coin(0, 2);
  // depth: closing indices still owed by the enclosing ovals.
  std::function<void(bool, int)> fill = [&](bool in_hole, int depth) {
    while (out.size() + 2 + static_cast<std::size_t>(depth) <= max_len && coin(rng) != 0) {
      const bool make_hole = !in_hole && coin(rng) == 0;
      out.push_back(make_hole ? 1 : 0);
      fill(make_hole, depth + 1);
      out.push_back(make_hole ? 1 : 2);
    }
  };
  out.push_back(0);
  fill(false, 1);
  out.push_back(2);
  while (out.size() + 2 <= max_len && coin(rng) == 0) {
    out.push_back(0);
    fill(false, 1);
    out.push_back(2);
  }
  return out;
}

std::vector<CriticalPoint> with_values(std::mt19937& rng, const std::vector<int>& idx) {
  std::uniform_real_distribution<double> gap(0.25, 2.0);
  std::vector<CriticalPoint> out;
  double v = std::uniform_real_distribution<double>(-3.0, 3.0)(rng);
  for (int i : idx) {
    out.push_back({v, i});
    v += gap(rng);
  }
  return out;
}

}  // namespace

TEST(Genus, ChiIsTwoMinusTwoG) {
  for (int g = 0; g <= 4; ++g) {
    const Portrait p = genus_surface_portrait(g);
    EXPECT_TRUE(validate(p).empty()) << g;
    EXPECT_EQ(stratified_chi(p), 2 - 2 * g) << g;
    EXPECT_EQ(p.cusp_count(), 0u);
    EXPECT_EQ(p.circles.size(), static_cast<std::size_t>(g + 1));
    EXPECT_TRUE(thom_parity(p, 2 - 2 * g));
  }
  EXPECT_THROW(genus_surface_portrait(-1), ConstructionError);
}

TEST(Toric, CornerCountAndChi) {
  const Portrait tri = toric_portrait({{0, 0}, {1, 0}, {0, 1}});
  EXPECT_EQ(tri.cusp_count(), 3u);
  EXPECT_EQ(stratified_chi(tri), 3);
  EXPECT_TRUE(validate(tri).empty());

  // Clockwise input is read in the opposite order.
  EXPECT_EQ(stratified_chi(toric_portrait({{0, 0}, {0, 1}, {1, 0}})), 3);

  const Portrait sq = toric_portrait({{0, 0}, {1, 0}, {1, 1}, {0, 1}});
  EXPECT_EQ(sq.cusp_count(), 4u);
  EXPECT_EQ(stratified_chi(sq), 4);

  // Hirzebruch-type trapezoid and the doubled simplex are Delzant too.
  EXPECT_EQ(stratified_chi(toric_portrait({{0, 0}, {3, 0}, {2, 1}, {0, 1}})), 4);
  EXPECT_EQ(stratified_chi(toric_portrait({{0, 0}, {2, 0}, {0, 2}})), 3);

  for (const auto& fan : detect_cusped_fans(sq)) {
    ASSERT_TRUE(fan.model);
    EXPECT_EQ(*fan.model, std::make_pair(2, 2));
  }
}

TEST(Toric, RejectsNonDelzantAndNonConvex) {
  try {
    toric_portrait({{0, 0}, {2, 0}, {0, 1}});
    FAIL() << "expected rejection";
  } catch (const ConstructionError& e) {
    EXPECT_NE(std::string(e.what()).find("(0,1)"), std::string::npos) << e.what();
  }
  EXPECT_THROW(toric_portrait({{0, 0}, {2, 0}, {1, 1}, {2, 2}, {0, 2}}), ConstructionError);  // reflex corner
  EXPECT_THROW(toric_portrait({{0, 0}, {1, 1}, {2, 2}}), ConstructionError);                   // collinear
  EXPECT_THROW(toric_portrait({{0, 0}, {1, 0}}), ConstructionError);
}

TEST(Projective, RealComplexQuaternionic) {
  const Portrait r = projective_plane_portrait(ProjectiveField::R);
  EXPECT_EQ(r.dimension, 2);
  EXPECT_EQ(r.cusp_count(), 3u);
  EXPECT_EQ(stratified_chi(r), 1);
  EXPECT_TRUE(thom_parity(r, 1));
  EXPECT_TRUE(validate(r).empty());

  const Portrait c = projective_plane_portrait(ProjectiveField::C);
  EXPECT_EQ(c.dimension, 4);
  EXPECT_EQ(stratified_chi(c), 3);

  const Portrait h = projective_plane_portrait(ProjectiveField::H);
  EXPECT_EQ(h.dimension, 8);
  EXPECT_EQ(stratified_chi(h), 3);
  EXPECT_TRUE(validate(h).empty());
  for (const auto& v : h.vertices) EXPECT_EQ(v.cusp_index, 3);
}

TEST(SphereBundle, ChiIsProductOfSphereChis) {
  for (int p = 1; p <= 4; ++p) {
    for (int q = 1; q <= 4; ++q) {
      const Portrait b = sphere_bundle_portrait(p, q);
      EXPECT_TRUE(validate(b).empty()) << p << "," << q;
      EXPECT_EQ(b.dimension, p + q);
      const int chi = (p % 2 == 0 ? 2 : 0) * (q % 2 == 0 ? 2 : 0);
      EXPECT_EQ(stratified_chi(b), chi) << p << "," << q;
      EXPECT_TRUE(thom_parity(b, chi));
    }
  }
  EXPECT_THROW(sphere_bundle_portrait(0, 2), ConstructionError);
}

TEST(MorseLift, RejectsInvalidSequences) {
  EXPECT_THROW(morse_lift({}), ConstructionError);
  EXPECT_THROW(morse_lift({{0, 1}, {1, 1}}), ConstructionError);        // starts with a saddle
  EXPECT_THROW(morse_lift({{0, 0}, {0, 2}}), ConstructionError);        // values not increasing
  EXPECT_THROW(morse_lift({{0, 0}, {1, 0}, {2, 2}}), ConstructionError);  // ends with sheets open
  EXPECT_THROW(morse_lift({{0, 0}, {1, 3}}), ConstructionError);
  EXPECT_THROW(morse_lift({{0, 0}, {1, 2}, {2, 2}}), ConstructionError);
}

TEST(MorseLift, TorusSequence) {
  const std::vector<CriticalPoint> s = {{0, 0}, {1, 1}, {2, 1}, {3, 2}};
  const Portrait p = morse_lift(s);
  EXPECT_TRUE(validate(p).empty());
  EXPECT_EQ(stratified_chi(p), 0);
  const auto data = levine_morse_data(p, *given_labeling(p), 0.0);
  ASSERT_EQ(data.size(), 4u);
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(data[i].value, s[i].value);
    EXPECT_EQ(data[i].index, s[i].index);
  }
}

TEST(MorseLift, RandomRoundTrips) {
  std::mt19937 rng(2024);
  int with_holes = 0, long_ones = 0;
  for (int k = 0; k < 200; ++k) {
    const auto s = with_values(rng, random_indices(rng, 12));
    ASSERT_LE(s.size(), 12u);
    with_holes += std::any_of(s.begin(), s.end(), [](const CriticalPoint& c) { return c.index == 1; });
    long_ones += s.size() >= 8;
    const Portrait p = morse_lift(s);
    ASSERT_TRUE(validate(p).empty()) << "case " << k;
    const auto labels = *given_labeling(p);
    const auto data = levine_morse_data(p, labels, 0.0);
    std::vector<CriticalPoint> back;
    for (const auto& m : data) back.push_back({m.value, m.index});
    EXPECT_EQ(back, s) << "case " << k;
    int alt = 0;
    for (const auto& c : s) alt += c.index == 1 ? -1 : 1;
    EXPECT_EQ(stratified_chi(p, labels), alt) << "case " << k;
  }
  EXPECT_GT(with_holes, 40);
  EXPECT_GT(long_ones, 20);
}
