#pragma once

#include <cmath>
#include <numbers>
#include <optional>

namespace thumbtrak::sim {

struct Vec3 {
  double x = 0.0, y = 0.0, z = 0.0;

  constexpr Vec3 operator+(const Vec3 &o) const { return {x + o.x, y + o.y, z + o.z}; }
  constexpr Vec3 operator-(const Vec3 &o) const { return {x - o.x, y - o.y, z - o.z}; }
  constexpr Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
  constexpr Vec3 operator-() const { return {-x, -y, -z}; }
  constexpr bool operator==(const Vec3 &) const = default;
};

constexpr Vec3 operator*(double s, const Vec3 &v) { return v * s; }
constexpr double dot(const Vec3 &a, const Vec3 &b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
constexpr Vec3 cross(const Vec3 &a, const Vec3 &b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
inline double norm(const Vec3 &v) { return std::sqrt(dot(v, v)); }
inline Vec3 normalized(const Vec3 &v) { return v * (1.0 / norm(v)); }

constexpr double deg2rad(double d) { return d * std::numbers::pi / 180.0; }

/// Rotates v about unit axis k by angle (radians), right-handed.
inline Vec3 rotate(const Vec3 &v, const Vec3 &k, double angle) {
  const double c = std::cos(angle), s = std::sin(angle);
  return v * c + cross(k, v) * s + k * (dot(k, v) * (1.0 - c));
}

/// Segment a-b swept by a sphere of the given radius.
struct Capsule {
  Vec3 a, b;
  double radius = 0.0;
};

/// Distance from p to the capsule surface; negative inside.
double signed_distance(const Vec3 &p, const Capsule &c);

/// Smallest t >= 0 with origin + t*dir on the capsule surface (dir unit).
/// Returns 0 when the origin is inside the capsule.
std::optional<double> ray_hit(const Vec3 &origin, const Vec3 &dir, const Capsule &c);

} // namespace thumbtrak::sim
