#pragma once

#include <cmath>

namespace spikegrasp {

struct Vec3 {
  double x = 0.0, y = 0.0, z = 0.0;

  Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
  Vec3 operator-() const { return {-x, -y, -z}; }
  Vec3& operator+=(const Vec3& o) {
    x += o.x;
    y += o.y;
    z += o.z;
    return *this;
  }
  Vec3& operator-=(const Vec3& o) {
    x -= o.x;
    y -= o.y;
    z -= o.z;
    return *this;
  }
};

inline Vec3 operator*(double s, const Vec3& v) { return v * s; }

inline double dot(const Vec3& a, const Vec3& b) {
  return a.x * b.x + a.y * b.y + a.z * b.z;
}

inline Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}

inline double norm(const Vec3& v) { return std::sqrt(dot(v, v)); }

// Unit vector, or zero when the norm is below eps.
inline Vec3 normalized(const Vec3& v, double eps = 1e-9) {
  const double n = norm(v);
  if (n < eps) return {0.0, 0.0, 0.0};
  return v * (1.0 / n);
}

inline double clamp(double v, double lo, double hi) {
  return v < lo ? lo : (v > hi ? hi : v);
}

// Rotation of `v` by yaw about world Z then pitch about the yawed X axis.
inline Vec3 rotate_yaw_pitch(const Vec3& v, double yaw, double pitch) {
  const double cp = std::cos(pitch), sp = std::sin(pitch);
  const Vec3 pitched{v.x, cp * v.y - sp * v.z, sp * v.y + cp * v.z};
  const double cy = std::cos(yaw), sy = std::sin(yaw);
  return {cy * pitched.x - sy * pitched.y, sy * pitched.x + cy * pitched.y,
          pitched.z};
}

inline Vec3 rotate_z(const Vec3& v, double angle) {
  const double c = std::cos(angle), s = std::sin(angle);
  return {c * v.x - s * v.y, s * v.x + c * v.y, v.z};
}

}  // namespace spikegrasp
