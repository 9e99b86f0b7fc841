#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>

namespace platesim {

inline constexpr double kPi = std::numbers::pi;

struct Vec2 {
  double x{0.0};
  double y{0.0};

  constexpr Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
  constexpr Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
  constexpr Vec2 operator*(double s) const { return {x * s, y * s}; }
  constexpr Vec2 operator-() const { return {-x, -y}; }
  constexpr bool operator==(const Vec2&) const = default;
};

inline constexpr double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline constexpr double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Vec2 v) { return std::hypot(v.x, v.y); }
inline double distance(Vec2 a, Vec2 b) { return norm(a - b); }

inline Vec2 normalized(Vec2 v) {
  const double n = norm(v);
  return {v.x / n, v.y / n};
}

inline Vec2 unit_from_angle(double a) { return {std::cos(a), std::sin(a)}; }

// Rotates a vector counter-clockwise by `a` radians.
inline Vec2 rotate(Vec2 v, double a) {
  const double c = std::cos(a);
  const double s = std::sin(a);
  return {c * v.x - s * v.y, s * v.x + c * v.y};
}

// Wraps an angle into (-pi, pi].
inline double wrap_angle(double a) {
  if (a > -kPi && a <= kPi) {
    return a;
  }
  double w = std::fmod(a + kPi, 2.0 * kPi);
  if (w <= 0.0) {
    w += 2.0 * kPi;
  }
  return w - kPi;
}

inline double deg_to_rad(double d) { return d * kPi / 180.0; }
inline double rad_to_deg(double r) { return r * 180.0 / kPi; }

struct Pose {
  Vec2 position{};
  double yaw{0.0};

  Vec2 heading() const { return unit_from_angle(yaw); }
  // Maps a body-frame offset (x forward, y left) into the world frame.
  Vec2 to_world(Vec2 body) const { return position + rotate(body, yaw); }
  bool operator==(const Pose&) const = default;
};

struct Segment {
  Vec2 a{};
  Vec2 b{};
};

// Parametric distance along the ray to the segment, if the ray hits it at t > 0.
inline std::optional<double> intersect_ray_segment(Vec2 origin, Vec2 dir, const Segment& seg) {
  const Vec2 e = seg.b - seg.a;
  const double denom = cross(dir, e);
  if (std::abs(denom) < 1e-15) {
    return std::nullopt;
  }
  const Vec2 ao = seg.a - origin;
  const double t = cross(ao, e) / denom;
  const double s = cross(ao, dir) / denom;
  if (t <= 1e-12 || s < 0.0 || s > 1.0) {
    return std::nullopt;
  }
  return t;
}

struct Rect {
  Vec2 min{};
  Vec2 max{};

  double width() const { return max.x - min.x; }
  double height() const { return max.y - min.y; }

  bool contains(Vec2 p, double tol = 0.0) const {
    return p.x >= min.x - tol && p.x <= max.x + tol && p.y >= min.y - tol && p.y <= max.y + tol;
  }
  bool strictly_contains(Vec2 p) const {
    return p.x > min.x && p.x < max.x && p.y > min.y && p.y < max.y;
  }
  void expand(Vec2 p) {
    min.x = std::min(min.x, p.x);
    min.y = std::min(min.y, p.y);
    max.x = std::max(max.x, p.x);
    max.y = std::max(max.y, p.y);
  }
};

}  // namespace platesim
