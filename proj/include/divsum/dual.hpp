#pragma once

#include <cmath>

namespace divsum {

// Forward-mode dual number: value plus first derivative with respect to s.
struct Dual {
  double v = 0.0;
  double d = 0.0;

  constexpr Dual() = default;
  constexpr Dual(double value, double deriv = 0.0) : v(value), d(deriv) {}

  static constexpr Dual variable(double value) { return {value, 1.0}; }

  Dual& operator+=(const Dual& o) {
    v += o.v;
    d += o.d;
    return *this;
  }
  Dual& operator-=(const Dual& o) {
    v -= o.v;
    d -= o.d;
    return *this;
  }
  Dual& operator*=(const Dual& o) {
    d = d * o.v + v * o.d;
    v *= o.v;
    return *this;
  }
  Dual& operator/=(const Dual& o) {
    d = (d * o.v - v * o.d) / (o.v * o.v);
    v /= o.v;
    return *this;
  }
};

inline Dual operator+(Dual a, const Dual& b) { return a += b; }
inline Dual operator-(Dual a, const Dual& b) { return a -= b; }
inline Dual operator*(Dual a, const Dual& b) { return a *= b; }
inline Dual operator/(Dual a, const Dual& b) { return a /= b; }
inline Dual operator-(const Dual& a) { return {-a.v, -a.d}; }

inline Dual exp(const Dual& a) {
  const double e = std::exp(a.v);
  return {e, e * a.d};
}

inline Dual log(const Dual& a) { return {std::log(a.v), a.d / a.v}; }

/// base^e for a constant positive base.
inline Dual pow(double base, const Dual& e) {
  const double r = std::pow(base, e.v);
  return {r, r * std::log(base) * e.d};
}

/// x^k for a constant exponent.
inline Dual pow(const Dual& x, double k) {
  const double r = std::pow(x.v, k);
  return {r, k * std::pow(x.v, k - 1.0) * x.d};
}

inline double value_of(double x) { return x; }
inline double value_of(const Dual& x) { return x.v; }

}  // namespace divsum
