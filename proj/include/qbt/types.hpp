// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <complex>
#include <numbers>

namespace qbt {

using cdouble = std::complex<double>;

inline constexpr double pi = std::numbers::pi;
inline constexpr double two_pi = 2.0 * std::numbers::pi;

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  constexpr Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
  constexpr Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
  constexpr Vec2 operator*(double a) const { return {a * x, a * y}; }
  constexpr Vec2 operator-() const { return {-x, -y}; }
  double norm() const { return std::hypot(x, y); }
};

constexpr Vec2 operator*(double a, Vec2 v) { return v * a; }
constexpr double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
constexpr double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
/// Counter-clockwise quarter turn.
constexpr Vec2 perp(Vec2 v) { return {-v.y, v.x}; }

enum class BoundaryCondition { dirichlet, neumann };

const char *to_string(BoundaryCondition bc) noexcept;
BoundaryCondition parse_bc(const char *text);

}  // namespace qbt
