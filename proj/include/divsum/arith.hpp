#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "divsum/dual.hpp"
#include "divsum/int128.hpp"

namespace divsum {

/// Default cap on the number of entries a divisor sieve may allocate.
inline constexpr i64 kDefaultSieveBudget = 100'000'000;

struct FactoredInteger {
  i64 value = 1;
  std::vector<std::pair<i64, int>> factors;  // (prime, exponent), primes ascending

  i64 product() const {
    i64 r = 1;
    for (auto [p, e] : factors)
      for (int k = 0; k < e; ++k) r *= p;
    return r;
  }
};

/// Primes up to and including `limit`, ascending.
inline std::vector<i64> prime_sieve(i64 limit) {
  if (limit < 2) throw std::invalid_argument("prime_sieve: limit must be at least 2");
  std::vector<bool> composite(static_cast<std::size_t>(limit) + 1, false);
  std::vector<i64> primes;
  for (i64 i = 2; i <= limit; ++i) {
    if (composite[i]) continue;
    primes.push_back(i);
    for (i64 j = i * i; j <= limit; j += i) composite[j] = true;
  }
  return primes;
}

inline bool is_prime(i64 n) {
  if (n < 2) return false;
  if (n < 4) return true;
  if (n % 2 == 0 || n % 3 == 0) return false;
  for (i64 d = 5; d * d <= n; d += 6) {
    if (n % d == 0 || n % (d + 2) == 0) return false;
  }
  return true;
}

/// Trial-division factorization. Inputs in this library stay far below 10^12.
inline FactoredInteger factorize(i64 n) {
  if (n < 1) throw std::invalid_argument("factorize: n must be positive");
  FactoredInteger f;
  f.value = n;
  for (i64 p = 2; p * p <= n; p += (p == 2 ? 1 : 2)) {
    if (n % p != 0) continue;
    int e = 0;
    while (n % p == 0) {
      n /= p;
      ++e;
    }
    f.factors.emplace_back(p, e);
  }
  if (n > 1) f.factors.emplace_back(n, 1);
  return f;
}

/// Distinct prime divisors of |n|; empty for n in {-1, 0, 1}.
inline std::vector<i64> prime_divisors(i128 n) {
  std::vector<i64> out;
  n = abs128(n);
  if (n < 2) return out;
  for (i128 p = 2; p * p <= n; p += (p == 2 ? 1 : 2)) {
    if (n % p != 0) continue;
    out.push_back(static_cast<i64>(p));
    while (n % p == 0) n /= p;
  }
  if (n > 1) out.push_back(checked::narrow(n));
  return out;
}

inline i64 mul_mod(i64 a, i64 b, i64 m) { return static_cast<i64>(static_cast<i128>(a) * b % m); }

inline i64 pow_mod(i64 base, i64 exp, i64 m) {
  i64 r = 1 % m;
  base %= m;
  if (base < 0) base += m;
  while (exp > 0) {
    if (exp & 1) r = mul_mod(r, base, m);
    base = mul_mod(base, base, m);
    exp >>= 1;
  }
  return r;
}

inline i64 ipow(i64 base, int exp) { return checked::narrow(checked::pow(base, exp)); }

namespace detail {

// Euler's criterion; p is assumed to be an odd prime.
inline int legendre_odd_prime(i128 a, i64 p) {
  const i64 r = static_cast<i64>(mod_floor(a, p));
  if (r == 0) return 0;
  return pow_mod(r, (p - 1) / 2, p) == 1 ? 1 : -1;
}

}  // namespace detail

/// Legendre symbol (a/p) for an odd prime p.
inline int legendre_symbol(i128 a, i64 p) {
  if (p == 2 || !is_prime(p)) {
    throw std::invalid_argument("legendre_symbol: modulus " + std::to_string(p) + " is not an odd prime");
  }
  return detail::legendre_odd_prime(a, p);
}

inline int mobius(i64 n) {
  const auto f = factorize(n);
  for (auto [p, e] : f.factors)
    if (e > 1) return 0;
  return f.factors.size() % 2 == 0 ? 1 : -1;
}

inline i64 euler_phi(i64 n) {
  const auto f = factorize(n);
  i64 phi = n;
  for (auto [p, e] : f.factors) phi = phi / p * (p - 1);
  return phi;
}

/// c_q(m): sum of e(am/q) over units a mod q, by the Moebius/totient closed form.
inline i64 ramanujan_sum(i64 q, i128 m) {
  if (q < 1) throw std::invalid_argument("ramanujan_sum: q must be positive");
  const i64 g = static_cast<i64>(std::gcd(static_cast<i64>(mod_floor(m, q)), q));  // gcd(q, 0) = q
  const i64 k = q / g;
  return mobius(k) * euler_phi(q) / euler_phi(k);
}

/// tau(n) for 0 <= n <= limit (tau(0) is left at 0), by incrementing multiples.
inline std::vector<std::uint16_t> tau_sieve(i64 limit, i64 budget = kDefaultSieveBudget) {
  if (limit < 1) throw std::invalid_argument("tau_sieve: limit must be at least 1");
  if (limit > budget) {
    throw BudgetExceeded("tau_sieve: limit " + std::to_string(limit) + " exceeds the sieve budget of " +
                         std::to_string(budget) + " entries");
  }
  std::vector<std::uint16_t> tau(static_cast<std::size_t>(limit) + 1, 0);
  for (i64 d = 1; d <= limit; ++d)
    for (i64 m = d; m <= limit; m += d) ++tau[m];
  return tau;
}

inline double euler_gamma() { return 0.57721566490153286060651209008240243; }

namespace detail {

inline double npow(double base, double e) { return std::pow(base, e); }
inline Dual npow(double base, const Dual& e) { return pow(base, e); }

// Euler-Maclaurin with N explicit terms and Bernoulli corrections through B_20.
// Instantiated with Dual, every term is differentiated exactly in s.
template <class T>
T zeta_euler_maclaurin(const T& s) {
  constexpr int kTerms = 20;
  constexpr double kBernoulliOverFactorial[] = {
      1.0 / 6.0 / 2.0,
      -1.0 / 30.0 / 24.0,
      1.0 / 42.0 / 720.0,
      -1.0 / 30.0 / 40320.0,
      5.0 / 66.0 / 3628800.0,
      -691.0 / 2730.0 / 479001600.0,
      7.0 / 6.0 / 87178291200.0,
      -3617.0 / 510.0 / 20922789888000.0,
      43867.0 / 798.0 / 6402373705728000.0,
      -174611.0 / 330.0 / 2432902008176640000.0,
  };
  T sum(0.0);
  for (int n = 1; n < kTerms; ++n) sum += npow(static_cast<double>(n), -s);
  const double N = kTerms;
  sum += npow(N, T(1.0) - s) / (s - T(1.0));
  sum += T(0.5) * npow(N, -s);
  T rising = s;  // s (s+1) ... (s+2k-2)
  for (int k = 1; k <= 10; ++k) {
    sum += T(kBernoulliOverFactorial[k - 1]) * rising * npow(N, -s - T(2.0 * k - 1.0));
    rising = rising * (s + T(2.0 * k - 1.0)) * (s + T(2.0 * k));
  }
  return sum;
}

}  // namespace detail

inline double zeta(double s) {
  if (!(s > 1.0)) throw std::domain_error("zeta: requires s > 1");
  return detail::zeta_euler_maclaurin(s);
}

inline double zeta_prime(double s) {
  if (!(s > 1.0)) throw std::domain_error("zeta_prime: requires s > 1");
  return detail::zeta_euler_maclaurin(Dual::variable(s)).d;
}

/// zeta along a dual argument: value and derivative (chain rule applied to the argument's derivative).
inline Dual zeta(const Dual& s) {
  if (!(s.v > 1.0)) throw std::domain_error("zeta: requires s > 1");
  return detail::zeta_euler_maclaurin(s);
}

}  // namespace divsum
