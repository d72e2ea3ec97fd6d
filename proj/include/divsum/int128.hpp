#pragma once

#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>

namespace divsum {

using i64 = std::int64_t;
using i128 = __int128;

/// Thrown when a computation would exceed a configured enumeration or memory budget.
class BudgetExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace checked {

inline i128 add(i128 a, i128 b) {
  i128 r;
  if (__builtin_add_overflow(a, b, &r)) throw std::overflow_error("128-bit integer overflow in addition");
  return r;
}

inline i128 sub(i128 a, i128 b) {
  i128 r;
  if (__builtin_sub_overflow(a, b, &r)) throw std::overflow_error("128-bit integer overflow in subtraction");
  return r;
}

inline i128 mul(i128 a, i128 b) {
  i128 r;
  if (__builtin_mul_overflow(a, b, &r)) throw std::overflow_error("128-bit integer overflow in multiplication");
  return r;
}

inline i64 narrow(i128 v) {
  if (v > std::numeric_limits<i64>::max() || v < std::numeric_limits<i64>::min()) {
    throw std::overflow_error("value does not fit in 64 bits");
  }
  return static_cast<i64>(v);
}

inline i128 pow(i128 base, int exp) {
  i128 r = 1;
  for (int k = 0; k < exp; ++k) r = mul(r, base);
  return r;
}

}  // namespace checked

inline i128 abs128(i128 v) { return v < 0 ? -v : v; }

inline std::string to_string(i128 v) {
  if (v == 0) return "0";
  const bool neg = v < 0;
  // work in the negative range so the minimum value is representable
  std::string out;
  i128 w = neg ? v : -v;
  while (w != 0) {
    out.push_back(static_cast<char>('0' - static_cast<int>(w % 10)));
    w /= 10;
  }
  if (neg) out.push_back('-');
  return {out.rbegin(), out.rend()};
}

/// Nonnegative residue of a modulo m (m > 0).
inline i128 mod_floor(i128 a, i128 m) {
  i128 r = a % m;
  return r < 0 ? r + m : r;
}

/// p-adic valuation of a nonzero integer; returns `cap` for zero.
inline int valuation(i128 a, i64 p, int cap = std::numeric_limits<int>::max()) {
  if (a == 0) return cap;
  int v = 0;
  while (a % p == 0 && v < cap) {
    a /= p;
    ++v;
  }
  return v;
}

}  // namespace divsum
