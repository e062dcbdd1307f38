#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "channel_eq/errors.hpp"
#include "channel_eq/flow.hpp"
#include "channel_eq/geometry.hpp"

using namespace channel_eq;

namespace {

DomainSpec spec_at(ObstacleState s, double L = 2.0, double d = 0.5) {
  DomainSpec spec;
  spec.L = L;
  spec.d = d;
  spec.state = s;
  return spec;
}

double shoelace(const std::array<Vec2, 4>& p) {
  double a = 0.0;
  for (int i = 0; i < 4; ++i) a += cross(p[i], p[(i + 1) % 4]);
  return 0.5 * a;
}

}  // namespace

TEST(ValidateState, CenterIsAdmissible) { EXPECT_NO_THROW(validate_state(spec_at(Translation{0.0}))); }

TEST(ValidateState, TouchingTheWallIsACollision) {
  EXPECT_THROW(validate_state(spec_at(Translation{1.0})), CollisionError);
  EXPECT_THROW(validate_state(spec_at(Translation{-1.2})), CollisionError);
  try {
    validate_state(spec_at(Translation{1.0}));
  } catch (const CollisionError& e) {
    EXPECT_NE(std::string(e.what()).find("collision"), std::string::npos);
  }
}

TEST(ValidateState, RotationNeedsRoomForTheDiagonal) {
  EXPECT_NO_THROW(validate_state(spec_at(Rotation{0.3}, 2.0, 1.0)));
  EXPECT_THROW(validate_state(spec_at(Rotation{0.3}, 1.4, 1.0)), GeometryError);
}

TEST(ValidateState, AngleRange) {
  EXPECT_THROW(validate_state(spec_at(Rotation{std::numbers::pi / 2})), RangeError);
  EXPECT_NO_THROW(validate_state(spec_at(Rotation{1.5})));
}

TEST(ValidateState, BadDimensions) {
  EXPECT_THROW(validate_state(spec_at(Translation{0.0}, 1.0)), GeometryError);
  DomainSpec s = spec_at(Translation{0.0});
  s.X = 3.0;  // below 4d + 2
  EXPECT_THROW(validate_state(s), GeometryError);
}

TEST(ObstaclePolygon, IdentityPlacement) {
  const auto p = obstacle_polygon(Translation{0.0}, 0.5);
  const std::array<Vec2, 4> want{{{0.5, -1.0}, {0.5, 1.0}, {-0.5, 1.0}, {-0.5, -1.0}}};
  for (int i = 0; i < 4; ++i) {
    EXPECT_EQ(p[i].x, want[i].x);
    EXPECT_EQ(p[i].y, want[i].y);
  }
}

TEST(ObstaclePolygon, TranslationShiftsOnlyHeights) {
  const auto p0 = obstacle_polygon(Translation{0.0}, 0.5);
  const auto p = obstacle_polygon(Translation{0.3}, 0.5);
  for (int i = 0; i < 4; ++i) {
    EXPECT_EQ(p[i].x, p0[i].x);
    EXPECT_DOUBLE_EQ(p[i].y, p0[i].y + 0.3);
  }
}

TEST(ObstaclePolygon, QuarterTurn) {
  const auto p = obstacle_polygon(Rotation{std::numbers::pi / 2}, 0.5);
  const std::array<Vec2, 4> want{{{1.0, 0.5}, {-1.0, 0.5}, {-1.0, -0.5}, {1.0, -0.5}}};
  for (int i = 0; i < 4; ++i) {
    EXPECT_NEAR(p[i].x, want[i].x, 1e-15);
    EXPECT_NEAR(p[i].y, want[i].y, 1e-15);
  }
}

TEST(ObstaclePolygon, RandomStatesAreCounterclockwiseWithArea4d) {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> pos(-0.99, 0.99), ang(-1.55, 1.55), dd(0.2, 1.5);
  for (int i = 0; i < 50; ++i) {
    const double d = dd(rng);
    const ObstacleState s = i % 2 ? ObstacleState{Translation{pos(rng)}} : ObstacleState{Rotation{ang(rng)}};
    EXPECT_NEAR(shoelace(obstacle_polygon(s, d)), 4.0 * d, 1e-12);
  }
}

TEST(GapEpsilon, DirectSubstitution) {
  EXPECT_DOUBLE_EQ(gap_epsilon(Translation{0.0}, 2.0), 0.5);
  EXPECT_NEAR(gap_epsilon(Translation{0.9}, 2.0), 0.05, 1e-15);
  EXPECT_EQ(gap_epsilon(Translation{-0.9}, 2.0), gap_epsilon(Translation{0.9}, 2.0));
}

TEST(GapEpsilon, CollisionPropagates) { EXPECT_THROW(gap_epsilon(Translation{1.0}, 2.0), CollisionError); }

TEST(ModeText, RoundTrip) {
  EXPECT_EQ(parse_mode(to_string(Mode::Rotation)), Mode::Rotation);
  EXPECT_EQ(parse_mode("translation"), Mode::Translation);
  EXPECT_THROW(parse_mode("spin"), InputError);
  EXPECT_EQ(position_of(make_state(Mode::Rotation, 0.25)), 0.25);
}

TEST(ExtensionGeometry, DiskAndStrip) {
  const double s = std::sqrt(1.25);
  EXPECT_DOUBLE_EQ(rotation_disk_radius(0.5, 2.0), s + 0.25 * (1.5 - s));
  EXPECT_DOUBLE_EQ(extension_strip_level(2.0), -1.5);
}

TEST(Cutoff, PlateausAndBlend) {
  const double d = 0.5;
  EXPECT_EQ(cutoff(0.0, d), 0.0);
  EXPECT_EQ(cutoff(1.5, d), 0.0);
  EXPECT_EQ(cutoff(-2.0, d), 1.0);
  EXPECT_EQ(cutoff(5.0, d), 1.0);
  EXPECT_DOUBLE_EQ(cutoff(1.75, d), 0.5);
  // C2 at the junctions: one-sided second differences vanish.
  const double e = 1e-4;
  for (double x0 : {1.5, 2.0}) {
    const double c = cutoff(x0, d);
    const double second = (cutoff(x0 + e, d) - 2.0 * c + cutoff(x0 - e, d)) / (e * e);
    EXPECT_NEAR(second, 0.0, 5e-2);
  }
  for (double x = 1.5; x < 2.0; x += 0.01) EXPECT_LE(cutoff(x, d), cutoff(x + 0.01, d));
}
