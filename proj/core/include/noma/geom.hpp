#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <utility>

namespace noma {

struct Vec3 {
  float x = 0.f, y = 0.f, z = 0.f;

  float& operator[](int i) { return (&x)[i]; }
  float operator[](int i) const { return (&x)[i]; }

  Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  Vec3 operator*(float s) const { return {x * s, y * s, z * s}; }
  Vec3 operator/(float s) const { return {x / s, y / s, z / s}; }
  Vec3 operator-() const { return {-x, -y, -z}; }
  Vec3& operator+=(const Vec3& o) { x += o.x; y += o.y; z += o.z; return *this; }
  Vec3& operator-=(const Vec3& o) { x -= o.x; y -= o.y; z -= o.z; return *this; }
  Vec3& operator*=(float s) { x *= s; y *= s; z *= s; return *this; }
};

inline Vec3 operator*(float s, const Vec3& v) { return v * s; }
inline float dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
inline float norm(const Vec3& v) { return std::sqrt(dot(v, v)); }
inline float squared_norm(const Vec3& v) { return dot(v, v); }
inline Vec3 normalized(const Vec3& v) {
  float n = norm(v);
  return n > 0.f ? v / n : Vec3{0.f, 0.f, 0.f};
}
inline Vec3 cwise_min(const Vec3& a, const Vec3& b) {
  return {std::fmin(a.x, b.x), std::fmin(a.y, b.y), std::fmin(a.z, b.z)};
}
inline Vec3 cwise_max(const Vec3& a, const Vec3& b) {
  return {std::fmax(a.x, b.x), std::fmax(a.y, b.y), std::fmax(a.z, b.z)};
}
inline Vec3 cwise_mul(const Vec3& a, const Vec3& b) { return {a.x * b.x, a.y * b.y, a.z * b.z}; }
inline Vec3 cwise_div(const Vec3& a, const Vec3& b) { return {a.x / b.x, a.y / b.y, a.z / b.z}; }

// Row-major 3x3.
struct Mat3 {
  std::array<float, 9> m{1.f, 0.f, 0.f, 0.f, 1.f, 0.f, 0.f, 0.f, 1.f};

  float& operator()(int r, int c) { return m[static_cast<std::size_t>(r) * 3 + c]; }
  float operator()(int r, int c) const { return m[static_cast<std::size_t>(r) * 3 + c]; }

  Vec3 operator*(const Vec3& v) const {
    return {m[0] * v.x + m[1] * v.y + m[2] * v.z,
            m[3] * v.x + m[4] * v.y + m[5] * v.z,
            m[6] * v.x + m[7] * v.y + m[8] * v.z};
  }
  Mat3 operator*(const Mat3& o) const {
    Mat3 r;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        float s = 0.f;
        for (int k = 0; k < 3; ++k) s += (*this)(i, k) * o(k, j);
        r(i, j) = s;
      }
    return r;
  }
  Mat3 transposed() const {
    Mat3 r;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) r(i, j) = (*this)(j, i);
    return r;
  }
};

inline Mat3 rot_z(float angle) {
  float c = std::cos(angle), s = std::sin(angle);
  Mat3 r;
  r.m = {c, -s, 0.f, s, c, 0.f, 0.f, 0.f, 1.f};
  return r;
}

inline Mat3 rot_x(float angle) {
  float c = std::cos(angle), s = std::sin(angle);
  Mat3 r;
  r.m = {1.f, 0.f, 0.f, 0.f, c, -s, 0.f, s, c};
  return r;
}

inline Mat3 rot_y(float angle) {
  float c = std::cos(angle), s = std::sin(angle);
  Mat3 r;
  r.m = {c, 0.f, s, 0.f, 1.f, 0.f, -s, 0.f, c};
  return r;
}

// Rigid transform: world_point = R * local_point + t.
struct Pose {
  Mat3 R;
  Vec3 t;

  Vec3 apply(const Vec3& p) const { return R * p + t; }
  Vec3 apply_inverse(const Vec3& p) const { return R.transposed() * (p - t); }
  Pose inverse() const {
    Mat3 Rt = R.transposed();
    return {Rt, -(Rt * t)};
  }
};

// Yaw angle of R about +z assuming R ~ rot_z(yaw) on the xy-plane.
inline float yaw_of(const Mat3& R) { return std::atan2(R(1, 0), R(0, 0)); }

inline float wrap_angle(float a) {
  constexpr float kPi = 3.14159265358979323846f;
  while (a > kPi) a -= 2.f * kPi;
  while (a < -kPi) a += 2.f * kPi;
  return a;
}

constexpr float kPi = 3.14159265358979323846f;

struct Box3 {
  Vec3 min{0.f, 0.f, 0.f};
  Vec3 max{0.f, 0.f, 0.f};

  Vec3 center() const { return (min + max) * 0.5f; }
  Vec3 size() const { return max - min; }
  bool contains(const Vec3& p) const {
    return p.x >= min.x && p.x <= max.x && p.y >= min.y && p.y <= max.y && p.z >= min.z &&
           p.z <= max.z;
  }
  void expand(const Vec3& p) {
    min = cwise_min(min, p);
    max = cwise_max(max, p);
  }
};

// Slab test; returns false when the ray misses. t_near may be negative when the
// origin is inside the box.
inline bool ray_box_intersect(const Vec3& origin, const Vec3& dir, const Box3& box, float& t_near,
                              float& t_far) {
  float t0 = -std::numeric_limits<float>::infinity();
  float t1 = std::numeric_limits<float>::infinity();
  for (int a = 0; a < 3; ++a) {
    float o = origin[a], d = dir[a];
    if (std::fabs(d) < 1e-12f) {
      if (o < box.min[a] || o > box.max[a]) return false;
      continue;
    }
    float inv = 1.f / d;
    float ta = (box.min[a] - o) * inv;
    float tb = (box.max[a] - o) * inv;
    if (ta > tb) std::swap(ta, tb);
    t0 = std::fmax(t0, ta);
    t1 = std::fmin(t1, tb);
  }
  if (t0 > t1) return false;
  t_near = t0;
  t_far = t1;
  return true;
}

}  // namespace noma
