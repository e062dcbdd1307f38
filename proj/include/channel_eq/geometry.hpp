#pragma once

#include <array>
#include <cmath>
#include <string>
#include <variant>

namespace channel_eq {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
  friend bool operator==(Vec2 a, Vec2 b) { return a.x == b.x && a.y == b.y; }
};

inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Vec2 a) { return std::hypot(a.x, a.y); }

// Distance from p to the closed segment [a, b].
double segment_distance(Vec2 p, Vec2 a, Vec2 b);

struct Translation {
  double h = 0.0;
};

struct Rotation {
  double theta = 0.0;  // radians
};

using ObstacleState = std::variant<Translation, Rotation>;

enum class Mode { Translation, Rotation };

Mode mode_of(const ObstacleState& state);
double position_of(const ObstacleState& state);
ObstacleState make_state(Mode mode, double position);
std::string to_string(Mode mode);
Mode parse_mode(const std::string& text);

// Channel (-X, X) x (-L, L) with the rectangle [-d, d] x [-1, 1] placed by
// `state`. Lengths are scaled by the obstacle half-thickness.
struct DomainSpec {
  double L = 2.0;
  double d = 0.5;
  double X = 6.0;
  ObstacleState state = Translation{};
  bool symmetrize = false;
};

// Throws GeometryError (bad L, d, X or L^2 <= 1 + d^2 in rotation mode),
// CollisionError (|h| >= L - 1) or RangeError (|theta| >= pi/2).
void validate_state(const DomainSpec& spec);

// Images of (d,-1), (d,1), (-d,1), (-d,-1): counterclockwise, starting from
// the image of (d,-1).
std::array<Vec2, 4> obstacle_polygon(const ObstacleState& state, double d);

// Half the narrowest wall gap, ((L - 1) - |h|) / 2.
double gap_epsilon(const Translation& state, double L);

// Radius of the disk that contains every rotated obstacle and inside which
// the rotation-mode extension vanishes: a quarter of the way from the half
// diagonal sqrt(1 + d^2) to min(3d, L).
double rotation_disk_radius(double d, double L);

// Level x2 = strip below which (for h >= 0) the translation extension
// corrects its divergence: halfway between the wall and the lowest admissible
// obstacle edge, -(L + 1) / 2.
double extension_strip_level(double L);

}  // namespace channel_eq
