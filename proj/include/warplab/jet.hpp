#pragma once

#include <cmath>

#include "warplab/types.hpp"

namespace warplab {

/// Truncated second-order Taylor value: f(r), f'(r), f''(r).
///
/// Arithmetic on Jet2 is forward-mode differentiation, so a closed-form
/// expression built from these operations carries exact first and second
/// derivatives (up to rounding) with no step-size choice.
struct Jet2 {
  real value = 0;
  real d1 = 0;
  real d2 = 0;

  static constexpr Jet2 constant(real c) { return {c, 0, 0}; }
  static constexpr Jet2 variable(real r) { return {r, 1, 0}; }

  bool finite() const {
    return std::isfinite(value) && std::isfinite(d1) && std::isfinite(d2);
  }
};

inline constexpr Jet2 operator-(const Jet2& a) { return {-a.value, -a.d1, -a.d2}; }

inline constexpr Jet2 operator+(const Jet2& a, const Jet2& b) {
  return {a.value + b.value, a.d1 + b.d1, a.d2 + b.d2};
}
inline constexpr Jet2 operator-(const Jet2& a, const Jet2& b) {
  return {a.value - b.value, a.d1 - b.d1, a.d2 - b.d2};
}
inline constexpr Jet2 operator*(const Jet2& a, const Jet2& b) {
  return {a.value * b.value, a.d1 * b.value + a.value * b.d1,
          a.d2 * b.value + 2 * a.d1 * b.d1 + a.value * b.d2};
}
inline constexpr Jet2 operator/(const Jet2& a, const Jet2& b) {
  const real q = a.value / b.value;
  const real q1 = (a.d1 - q * b.d1) / b.value;
  const real q2 = (a.d2 - 2 * q1 * b.d1 - q * b.d2) / b.value;
  return {q, q1, q2};
}

inline constexpr Jet2 operator+(const Jet2& a, real c) { return {a.value + c, a.d1, a.d2}; }
inline constexpr Jet2 operator+(real c, const Jet2& a) { return a + c; }
inline constexpr Jet2 operator-(const Jet2& a, real c) { return {a.value - c, a.d1, a.d2}; }
inline constexpr Jet2 operator-(real c, const Jet2& a) { return {c - a.value, -a.d1, -a.d2}; }
inline constexpr Jet2 operator*(const Jet2& a, real c) { return {a.value * c, a.d1 * c, a.d2 * c}; }
inline constexpr Jet2 operator*(real c, const Jet2& a) { return a * c; }
inline constexpr Jet2 operator/(const Jet2& a, real c) { return {a.value / c, a.d1 / c, a.d2 / c}; }
inline constexpr Jet2 operator/(real c, const Jet2& a) { return Jet2::constant(c) / a; }

namespace detail {
// g(u) given g(u0), g'(u0), g''(u0).
inline constexpr Jet2 chain(const Jet2& u, real g0, real g1, real g2) {
  return {g0, g1 * u.d1, g2 * u.d1 * u.d1 + g1 * u.d2};
}
}  // namespace detail

inline Jet2 exp(const Jet2& u) {
  const real e = std::exp(u.value);
  return detail::chain(u, e, e, e);
}

inline Jet2 log(const Jet2& u) {
  return detail::chain(u, std::log(u.value), 1 / u.value, -1 / (u.value * u.value));
}

/// u^p for a constant exponent p; requires u > 0 unless p is a small integer.
inline Jet2 pow(const Jet2& u, real p) {
  const real v = std::pow(u.value, p);
  if (u.value == 0) {
    return detail::chain(u, v, p == 1 ? 1 : 0, p == 2 ? 2 : 0);
  }
  // Work with u'/u so that nothing underflows when u^p and 1/u are both tiny.
  const real l1 = u.d1 / u.value;
  const real l2 = u.d2 / u.value;
  return {v, v * (p * l1), v * (p * (p - 1) * l1 * l1 + p * l2)};
}

inline Jet2 sqrt(const Jet2& u) {
  const real s = std::sqrt(u.value);
  return detail::chain(u, s, 1 / (2 * s), -1 / (4 * s * u.value));
}

inline Jet2 sin(const Jet2& u) {
  const real s = std::sin(u.value);
  const real c = std::cos(u.value);
  return detail::chain(u, s, c, -s);
}

inline Jet2 cos(const Jet2& u) {
  const real s = std::sin(u.value);
  const real c = std::cos(u.value);
  return detail::chain(u, c, -s, -c);
}

}  // namespace warplab
