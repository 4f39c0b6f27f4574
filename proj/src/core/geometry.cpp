#include "geometry.hpp"

#include <algorithm>
#include <limits>

namespace thumbtrak::sim {

double signed_distance(const Vec3 &p, const Capsule &c) {
  const Vec3 ab = c.b - c.a;
  const double len2 = dot(ab, ab);
  const double t = len2 > 0.0 ? std::clamp(dot(p - c.a, ab) / len2, 0.0, 1.0) : 0.0;
  return norm(p - (c.a + ab * t)) - c.radius;
}

namespace {

// Entry time of the ray into a sphere, ignoring entries behind the origin.
std::optional<double> sphere_entry(const Vec3 &o, const Vec3 &d, const Vec3 &center, double r) {
  const Vec3 oc = o - center;
  const double b = dot(d, oc);
  const double c = dot(oc, oc) - r * r;
  const double h = b * b - c;
  if (h < 0.0)
    return std::nullopt;
  const double t = -b - std::sqrt(h);
  if (t < 0.0)
    return std::nullopt;
  return t;
}

} // namespace

std::optional<double> ray_hit(const Vec3 &origin, const Vec3 &dir, const Capsule &c) {
  if (signed_distance(origin, c) <= 0.0)
    return 0.0;

  double best = std::numeric_limits<double>::infinity();

  // Cylinder side, restricted to the segment's extent.
  const Vec3 ba = c.b - c.a;
  const Vec3 oa = origin - c.a;
  const double baba = dot(ba, ba);
  const double bard = dot(ba, dir);
  const double baoa = dot(ba, oa);
  const double rdoa = dot(dir, oa);
  const double oaoa = dot(oa, oa);
  const double qa = baba - bard * bard;
  if (qa > 1e-12 * baba) {
    const double qb = baba * rdoa - baoa * bard;
    const double qc = baba * oaoa - baoa * baoa - c.radius * c.radius * baba;
    const double h = qb * qb - qa * qc;
    if (h >= 0.0) {
      const double t = (-qb - std::sqrt(h)) / qa;
      const double y = baoa + t * bard;
      if (t >= 0.0 && y > 0.0 && y < baba)
        best = t;
    }
  }
  for (const Vec3 &end : {c.a, c.b})
    if (auto t = sphere_entry(origin, dir, end, c.radius))
      best = std::min(best, *t);

  if (best == std::numeric_limits<double>::infinity())
    return std::nullopt;
  return best;
}

} // namespace thumbtrak::sim
