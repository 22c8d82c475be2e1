#pragma once

#include <cmath>

namespace afem {

struct Vec2 {
  double x = 0.0, y = 0.0;
};

inline Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
inline Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
inline Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Vec2 a) { return std::hypot(a.x, a.y); }

// General 2x2 matrix. The diffusion coefficient must be symmetric; assembly
// verifies that pointwise instead of the type enforcing it, so that feeding a
// nonsymmetric field is a detectable input error rather than silent truncation.
struct Mat2 {
  double a11 = 0.0, a12 = 0.0, a21 = 0.0, a22 = 0.0;
};

inline Vec2 apply(const Mat2& m, Vec2 v) {
  return {m.a11 * v.x + m.a12 * v.y, m.a21 * v.x + m.a22 * v.y};
}
inline Mat2 identity2() { return {1.0, 0.0, 0.0, 1.0}; }

}  // namespace afem
