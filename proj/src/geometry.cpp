#include "channel_eq/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "channel_eq/errors.hpp"

namespace channel_eq {

double segment_distance(Vec2 p, Vec2 a, Vec2 b) {
  const Vec2 ab = b - a;
  const double len2 = dot(ab, ab);
  double t = len2 > 0.0 ? dot(p - a, ab) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return norm(p - (a + t * ab));
}

Mode mode_of(const ObstacleState& state) {
  return std::holds_alternative<Translation>(state) ? Mode::Translation : Mode::Rotation;
}

double position_of(const ObstacleState& state) {
  if (const auto* t = std::get_if<Translation>(&state)) return t->h;
  return std::get<Rotation>(state).theta;
}

ObstacleState make_state(Mode mode, double position) {
  if (mode == Mode::Translation) return Translation{position};
  return Rotation{position};
}

std::string to_string(Mode mode) {
  return mode == Mode::Translation ? "translation" : "rotation";
}

Mode parse_mode(const std::string& text) {
  if (text == "translation") return Mode::Translation;
  if (text == "rotation") return Mode::Rotation;
  throw InputError("unknown mode '" + text + "' (expected translation|rotation)");
}

void validate_state(const DomainSpec& spec) {
  std::ostringstream msg;
  if (!(spec.L > 1.0)) {
    msg << "channel half-height L=" << spec.L << " must exceed the obstacle half-thickness 1";
    throw GeometryError(msg.str());
  }
  if (!(spec.d > 0.0)) {
    msg << "obstacle half-length d=" << spec.d << " must be positive";
    throw GeometryError(msg.str());
  }
  if (!(spec.X >= 4.0 * spec.d + 2.0)) {
    msg << "truncation X=" << spec.X << " must be at least 4d+2=" << 4.0 * spec.d + 2.0;
    throw GeometryError(msg.str());
  }
  if (const auto* t = std::get_if<Translation>(&spec.state)) {
    if (!(std::abs(t->h) < spec.L - 1.0)) {
      msg << "collision: |h|=" << std::abs(t->h) << " reaches the wall distance L-1="
          << spec.L - 1.0;
      throw CollisionError(msg.str());
    }
    return;
  }
  const double theta = std::get<Rotation>(spec.state).theta;
  if (!(spec.L * spec.L > 1.0 + spec.d * spec.d)) {
    msg << "rotation requires L^2 > 1 + d^2 (L^2=" << spec.L * spec.L
        << ", 1+d^2=" << 1.0 + spec.d * spec.d << ")";
    throw GeometryError(msg.str());
  }
  if (!(std::abs(theta) < std::numbers::pi / 2.0)) {
    msg << "rotation angle |theta|=" << std::abs(theta) << " must be below pi/2";
    throw RangeError(msg.str());
  }
}

std::array<Vec2, 4> obstacle_polygon(const ObstacleState& state, double d) {
  std::array<Vec2, 4> v{Vec2{d, -1.0}, Vec2{d, 1.0}, Vec2{-d, 1.0}, Vec2{-d, -1.0}};
  if (const auto* t = std::get_if<Translation>(&state)) {
    for (auto& p : v) p.y += t->h;
    return v;
  }
  const double theta = std::get<Rotation>(state).theta;
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  for (auto& p : v) p = Vec2{c * p.x - s * p.y, s * p.x + c * p.y};
  return v;
}

double gap_epsilon(const Translation& state, double L) {
  if (!(std::abs(state.h) < L - 1.0)) {
    throw CollisionError("collision: |h| reaches L-1, gap is closed");
  }
  return ((L - 1.0) - std::abs(state.h)) / 2.0;
}

double rotation_disk_radius(double d, double L) {
  const double half_diagonal = std::sqrt(1.0 + d * d);
  return half_diagonal + 0.25 * (std::min(3.0 * d, L) - half_diagonal);
}

double extension_strip_level(double L) { return -0.5 * (L + 1.0); }

}  // namespace channel_eq
