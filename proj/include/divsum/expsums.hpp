#pragma once

#include <complex>
#include <map>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "divsum/arith.hpp"
#include "divsum/forms.hpp"

namespace divsum {

using BigInt = boost::multiprecision::cpp_int;

/// Exact narrowing; boost's own conversion to __int128 is not reliable.
inline i128 to_i128(const BigInt& v) {
  if (boost::multiprecision::msb(v == 0 ? BigInt(1) : BigInt(abs(v))) >= 126) {
    throw std::overflow_error("integer does not fit in 128 bits");
  }
  const BigInt mag = abs(v);
  const BigInt mask = (BigInt(1) << 64) - 1;
  const auto lo = static_cast<unsigned long long>(mag & mask);
  const auto hi = static_cast<unsigned long long>(mag >> 64);
  const i128 r = (static_cast<i128>(hi) << 64) | static_cast<i128>(lo);
  return v < 0 ? -r : r;
}

/// Default cap on lattice evaluations for a single brute-force enumeration.
inline constexpr i64 kDefaultEnumerationBudget = 100'000'000;

struct LocalSumTable {
  i64 prime = 0;
  int max_exponent = 0;
  std::vector<BigInt> rho_values;  // rho(p^0 .. p^M)
  std::vector<BigInt> s_values;    // S(p^0 .. p^M)
};

namespace detail {

inline i64 checked_power_count(i64 q, int ell, i64 budget, const char* what) {
  i128 points = 1;
  for (int i = 0; i < ell; ++i) {
    points *= q;
    if (points > budget) {
      throw BudgetExceeded(std::string(what) + ": " + std::to_string(q) + "^" + std::to_string(ell) +
                           " lattice points exceed the enumeration budget of " + std::to_string(budget));
    }
  }
  return static_cast<i64>(points);
}

inline i64 inverse_mod(i64 a, i64 m) {
  i64 g = m, x = 0, x1 = 1, a1 = static_cast<i64>(mod_floor(a, m));
  while (a1 != 0) {
    const i64 t = g / a1;
    g -= t * a1;
    std::swap(g, a1);
    x -= t * x1;
    std::swap(x, x1);
  }
  if (g != 1) throw std::invalid_argument("inverse_mod: " + std::to_string(a) + " is not invertible mod " + std::to_string(m));
  return static_cast<i64>(mod_floor(x, m));
}

// Histogram of F(x) mod q over x in (Z/q)^ell by direct enumeration.
// The last coordinate is swept incrementally: F = C0 + x (L + a x).
inline std::vector<i64> histogram_brute(const QuadraticPolynomial& f, i64 q, i64 budget) {
  const int ell = f.dim;
  checked_power_count(q, ell, budget, "value histogram");
  std::vector<i64> hist(q, 0);
  const int last = ell - 1;
  auto md = [q](i128 v) { return static_cast<i64>(mod_floor(v, q)); };
  const i64 a = md(f.q(last, last));
  std::vector<i64> x(last, 0);
  while (true) {
    i128 c0 = f.c_const;
    i128 lin = f.b(last);
    for (int i = 0; i < last; ++i) {
      i128 row = f.b(i);
      for (int j = i; j < last; ++j) row += static_cast<i128>(f.monomial(i, j)) * x[j];
      c0 += row * x[i];
      lin += static_cast<i128>(f.monomial(i, last)) * x[i];
    }
    i64 v = md(c0);
    const i64 l = md(lin);
    // v(y+1) - v(y) = L + a (2y + 1)
    i64 step = md(static_cast<i128>(l) + a);
    const i64 two_a = md(2 * static_cast<i128>(a));
    for (i64 y = 0; y < q; ++y) {
      ++hist[v];
      v += step;
      if (v >= q) v -= q;
      step += two_a;
      if (step >= q) step -= q;
    }
    int k = 0;
    while (k < last && ++x[k] == q) x[k++] = 0;
    if (k == last) break;
  }
  return hist;
}



inline int rational_valuation(const Rational& r, i64 p) {
  BigInt num = boost::multiprecision::numerator(r);
  if (num == 0) return std::numeric_limits<int>::max();
  int v = 0;
  while (num % p == 0) {
    num /= p;
    ++v;
  }
  BigInt den = boost::multiprecision::denominator(r);
  while (den % p == 0) {
    den /= p;
    --v;
  }
  return v;
}

inline i64 rational_mod(const Rational& r, i64 q) {
  const BigInt num = boost::multiprecision::numerator(r);
  const BigInt den = boost::multiprecision::denominator(r);
  BigInt nm = num % q;
  if (nm < 0) nm += q;
  BigInt dm = den % q;
  if (dm < 0) dm += q;
  const i64 inv = inverse_mod(static_cast<i64>(dm), q);
  return mul_mod(static_cast<i64>(nm), inv, q);
}

// Polynomial a y1^2 + h y1 y2 + d y2^2 + u y1 + w y2 (single-variable when `pair` is false).
struct DiagonalBlock {
  bool pair = false;
  Rational a, h, d, u, w;
};

// Splits F(Ux) into 1x1 and 2x2 blocks by p-adically unimodular congruence transforms:
// each step pivots on an entry of minimal valuation, so every multiplier stays p-integral.
inline std::vector<DiagonalBlock> padic_blocks(const QuadraticPolynomial& f, i64 p) {
  const int n = f.dim;
  const IntMatrix s = symmetrize(f);
  RatMatrix a(n, std::vector<Rational>(n));
  std::vector<Rational> b(n);
  for (int i = 0; i < n; ++i) {
    b[i] = Rational(f.b(i));
    for (int j = 0; j < n; ++j) a[i][j] = Rational(checked::narrow(s[i][j]));
  }
  std::vector<int> active(n);
  for (int i = 0; i < n; ++i) active[i] = i;
  std::vector<DiagonalBlock> blocks;

  // x_m -> x_m - z x_piv on both sides, applied as column then row update
  auto eliminate = [&](int piv, int m, const Rational& z) {
    for (int r = 0; r < n; ++r) a[r][m] -= z * a[r][piv];
    for (int c = 0; c < n; ++c) a[m][c] -= z * a[piv][c];
    b[m] -= z * b[piv];
  };

  while (!active.empty()) {
    int best = std::numeric_limits<int>::max();
    for (int i : active)
      for (int j : active) best = std::min(best, rational_valuation(a[i][j], p));
    if (best == std::numeric_limits<int>::max()) throw std::logic_error("padic_blocks: singular remainder");
    int diag = -1;
    for (int i : active)
      if (rational_valuation(a[i][i], p) == best) {
        diag = i;
        break;
      }
    if (diag >= 0) {
      for (int m : active) {
        if (m == diag || a[m][diag] == 0) continue;
        eliminate(diag, m, a[diag][m] / a[diag][diag]);
      }
      blocks.push_back({false, a[diag][diag] / 2, 0, 0, b[diag], 0});
      std::erase(active, diag);
      continue;
    }
    int bi = -1, bj = -1;
    for (int i : active)
      for (int j : active)
        if (bi < 0 && i < j && rational_valuation(a[i][j], p) == best) {
          bi = i;
          bj = j;
        }
    const Rational det = a[bi][bi] * a[bj][bj] - a[bi][bj] * a[bi][bj];
    for (int m : active) {
      if (m == bi || m == bj) continue;
      // z = B^{-1} (A_{bi,m}, A_{bj,m})
      const Rational z1 = (a[bj][bj] * a[bi][m] - a[bi][bj] * a[bj][m]) / det;
      const Rational z2 = (a[bi][bi] * a[bj][m] - a[bi][bj] * a[bi][m]) / det;
      for (int r = 0; r < n; ++r) a[r][m] -= z1 * a[r][bi] + z2 * a[r][bj];
      for (int c = 0; c < n; ++c) a[m][c] -= z1 * a[bi][c] + z2 * a[bj][c];
      b[m] -= z1 * b[bi] + z2 * b[bj];
    }
    blocks.push_back({true, a[bi][bi] / 2, a[bi][bj], a[bj][bj] / 2, b[bi], b[bj]});
    std::erase(active, bi);
    std::erase(active, bj);
  }
  return blocks;
}

inline std::vector<i64> block_histogram(const DiagonalBlock& blk, i64 q) {
  std::vector<i64> hist(q, 0);
  const i64 a = rational_mod(blk.a, q), u = rational_mod(blk.u, q);
  if (!blk.pair) {
    for (i64 y = 0; y < q; ++y) ++hist[static_cast<i64>(mod_floor(static_cast<i128>(a) * y * y + static_cast<i128>(u) * y, q))];
    return hist;
  }
  const i64 h = rational_mod(blk.h, q), d = rational_mod(blk.d, q), w = rational_mod(blk.w, q);
  for (i64 y1 = 0; y1 < q; ++y1) {
    // sweep y2 with v(y2+1) - v(y2) = h y1 + w + d (2 y2 + 1)
    i64 v = static_cast<i64>(mod_floor(static_cast<i128>(a) * y1 * y1 + static_cast<i128>(u) * y1, q));
    i64 step = static_cast<i64>(mod_floor(static_cast<i128>(h) * y1 + w + d, q));
    const i64 two_d = static_cast<i64>(mod_floor(2 * static_cast<i128>(d), q));
    for (i64 y2 = 0; y2 < q; ++y2) {
      ++hist[v];
      v += step;
      if (v >= q) v -= q;
      step += two_d;
      if (step >= q) step -= q;
    }
  }
  return hist;
}

inline std::vector<i64> cyclic_convolve(const std::vector<i64>& x, const std::vector<i64>& y) {
  const std::size_t q = x.size();
  std::vector<i64> out(q, 0);
  for (std::size_t i = 0; i < q; ++i) {
    if (x[i] == 0) continue;
    for (std::size_t j = 0; j < q; ++j) {
      if (y[j] == 0) continue;
      std::size_t k = i + j;
      if (k >= q) k -= q;
      out[k] += x[i] * y[j];
    }
  }
  return out;
}

inline std::vector<i64> histogram_prime_power(const QuadraticPolynomial& f, i64 p, i64 q, i64 budget) {
  if (static_cast<i128>(q) * q > budget) {
    throw BudgetExceeded("value histogram: modulus " + std::to_string(q) + " squared exceeds the enumeration budget of " +
                         std::to_string(budget));
  }
  std::vector<i64> hist(q, 0);
  hist[static_cast<i64>(mod_floor(f.c_const, q))] = 1;
  for (const auto& blk : padic_blocks(f, p)) hist = cyclic_convolve(hist, block_histogram(blk, q));
  return hist;
}

}  // namespace detail

/// N(n) = #{x mod q : F(x) = n mod q}, by direct enumeration of all q^ell points.
inline std::vector<i64> value_histogram_brute(const QuadraticPolynomial& f, i64 q, i64 budget = kDefaultEnumerationBudget) {
  if (q < 1) throw std::invalid_argument("value_histogram_brute: modulus must be positive");
  return detail::histogram_brute(f, q, budget);
}

/// N(n) = #{x mod q : F(x) = n mod q}. Prime-power parts come from a p-adic block splitting of F,
/// composite moduli from the Chinese remainder product of those parts.
inline std::vector<i64> value_histogram(const QuadraticPolynomial& f, i64 q, i64 budget = kDefaultEnumerationBudget) {
  if (q < 1) throw std::invalid_argument("value_histogram: modulus must be positive");
  if (q == 1) return {1};
  const auto fq = factorize(q);
  std::vector<i64> hist(q, 1);
  for (auto [p, e] : fq.factors) {
    const i64 pe = ipow(p, e);
    const auto part = detail::histogram_prime_power(f, p, pe, budget);
    for (i64 n = 0; n < q; ++n) hist[n] = checked::narrow(checked::mul(hist[n], part[n % pe]));
  }
  return hist;
}

/// Number of x mod n with F(x) = 0 mod n, by enumeration over each prime-power part.
inline i64 rho(const QuadraticPolynomial& f, i64 n, i64 budget = kDefaultEnumerationBudget) {
  if (n < 1) throw std::invalid_argument("rho: modulus must be positive");
  i64 total = 1;
  for (auto [p, e] : factorize(n).factors) {
    const i64 pe = ipow(p, e);
    total = checked::narrow(checked::mul(total, detail::histogram_brute(f, pe, budget)[0]));
  }
  return total;
}

/// S_F(q) = q^{-1} sum_n N(n) c_q(n), exact.
inline i128 sf_exact(const QuadraticPolynomial& f, i64 q, i64 budget = kDefaultEnumerationBudget) {
  if (q < 1) throw std::invalid_argument("sf_exact: modulus must be positive");
  const auto hist = value_histogram(f, q, budget);
  std::map<i64, i64> by_gcd;  // c_q(n) depends only on gcd(n, q)
  i128 total = 0;
  for (i64 n = 0; n < q; ++n) {
    if (hist[n] == 0) continue;
    const i64 g = std::gcd(n, q);
    auto it = by_gcd.find(g);
    if (it == by_gcd.end()) it = by_gcd.emplace(g, ramanujan_sum(q, g)).first;
    total = checked::add(total, checked::mul(hist[n], it->second));
  }
  if (total % q != 0) {
    throw std::logic_error("sf_exact: numerator " + to_string(total) + " is not divisible by " + std::to_string(q));
  }
  return total / q;
}

namespace detail {

// Zero counts of a quadratic polynomial modulo p^n by walking the Hensel tree of roots mod p.
class HenselCounter {
 public:
  HenselCounter(const QuadraticPolynomial& f, i64 p) : ell_(f.dim), p_(p) {
    for (int i = 0; i < ell_; ++i)
      for (int j = i; j < ell_; ++j) base_.push_back(f.monomial(i, j));
    for (int i = 0; i < ell_; ++i) base_.push_back(f.b(i));
    base_.push_back(f.c_const);
    // coefficients live below p^n, and products of two of them must fit in 128 bits
    max_depth_ = 0;
    for (i128 pw = p; pw < (i128(1) << 62); pw *= p) ++max_depth_;
  }

  int max_depth() const { return max_depth_; }

  BigInt count(int n) {
    if (n < 0) throw std::invalid_argument("HenselCounter: negative exponent");
    if (n > max_depth_) {
      throw BudgetExceeded("exact local density: p^" + std::to_string(n) + " exceeds 62-bit coefficient arithmetic");
    }
    return count_node(reduce(base_, n), n);
  }

 private:
  int ell_;
  i64 p_;
  int max_depth_;
  std::vector<i128> base_;  // upper-triangular monomials, then linear, then constant
  std::map<std::pair<int, std::vector<i128>>, BigInt> memo_;

  i128 pw(int e) const { return checked::pow(p_, e); }

  std::vector<i128> reduce(std::vector<i128> c, int n) const {
    const i128 m = pw(n);
    for (auto& v : c) v = mod_floor(v, m);
    return c;
  }

  BigInt ppow(int e) const { return boost::multiprecision::pow(BigInt(p_), e); }

  int content(const std::vector<i128>& c, int cap) const {
    int v = cap;
    for (auto x : c) v = std::min(v, valuation(x, p_, cap));
    return v;
  }

  std::vector<i128> divide(std::vector<i128> c, int v, int n) const {
    const i128 d = pw(v);
    for (auto& x : c) x /= d;
    return reduce(std::move(c), n);
  }

  BigInt count_node(const std::vector<i128>& c, int n) {
    if (n == 0) return 1;
    const int v = content(c, n);
    if (v >= n) return ppow(ell_ * n);
    if (v > 0) return ppow(ell_ * v) * count_node(divide(c, v, n - v), n - v);

    const auto key = std::make_pair(n, c);
    if (auto it = memo_.find(key); it != memo_.end()) return it->second;

    const int nq = ell_ * (ell_ + 1) / 2;
    const i128 mod_n = pw(n);
    BigInt total = 0;
    std::vector<i64> r(ell_, 0);
    std::vector<i128> grad(ell_);
    while (true) {
      // value and gradient at r, exact modulo p^n
      i128 value = c[nq + ell_];
      int idx = 0;
      for (int i = 0; i < ell_; ++i) {
        grad[i] = c[nq + i];
        value += c[nq + i] * r[i];
      }
      for (int i = 0; i < ell_; ++i)
        for (int j = i; j < ell_; ++j, ++idx) {
          value += c[idx] * r[i] * r[j];
          if (i == j) {
            grad[i] += 2 * c[idx] * r[i];
          } else {
            grad[i] += c[idx] * r[j];
            grad[j] += c[idx] * r[i];
          }
        }
      value = mod_floor(value, mod_n);
      if (value % p_ == 0) {
        if (n == 1) {
          total += 1;
        } else {
          bool singular = true;
          for (int i = 0; i < ell_; ++i) singular = singular && grad[i] % p_ == 0;
          if (!singular) {
            total += ppow((n - 1) * (ell_ - 1));
          } else {
            // K(z) = F(r + p z) = F(r) + p grad.z + p^2 quad(z)
            std::vector<i128> k(c.size());
            for (int t = 0; t < nq; ++t) k[t] = mod_floor(c[t] * p_ * p_, mod_n);
            for (int i = 0; i < ell_; ++i) k[nq + i] = mod_floor(mod_floor(grad[i], mod_n) * p_, mod_n);
            k[nq + ell_] = value;
            const int w = content(k, n);
            if (w >= n) {
              total += ppow(ell_ * (n - 1));
            } else {
              total += ppow(ell_ * (w - 1)) * count_node(divide(k, w, n - w), n - w);
            }
          }
        }
      }
      int pos = 0;
      while (pos < ell_ && ++r[pos] == p_) r[pos++] = 0;
      if (pos == ell_) break;
    }
    memo_.emplace(key, total);
    return total;
  }
};

}  // namespace detail

/// rho(p^m) for m = 0..max_m from the exact Hensel-tree counter.
inline std::vector<BigInt> rho_lifted_series(const QuadraticPolynomial& f, i64 p, int max_m) {
  if (!is_prime(p)) throw std::invalid_argument("rho_lifted: " + std::to_string(p) + " is not prime");
  detail::HenselCounter counter(f, p);
  std::vector<BigInt> out;
  for (int m = 0; m <= max_m; ++m) out.push_back(counter.count(m));
  return out;
}

inline BigInt rho_lifted(const QuadraticPolynomial& f, i64 p, int m) {
  if (!is_prime(p)) throw std::invalid_argument("rho_lifted: " + std::to_string(p) + " is not prime");
  return detail::HenselCounter(f, p).count(m);
}

/// Depth limit of the exact lifted counter for this prime.
inline int rho_lifted_max_depth(i64 p) {
  int d = 0;
  for (i128 pw = p; pw < (i128(1) << 62); pw *= p) ++d;
  return d;
}

/// S_F(p^m) = rho(p^m) - p^{ell-1} rho(p^{m-1}).
inline i128 sf_via_rho(const QuadraticPolynomial& f, i64 p, int m) {
  if (m < 1) throw std::invalid_argument("sf_via_rho: exponent must be at least 1");
  const auto r = rho_lifted_series(f, p, m);
  return to_i128(r[m] - boost::multiprecision::pow(BigInt(p), f.dim - 1) * r[m - 1]);
}

inline LocalSumTable local_sum_table(const QuadraticPolynomial& f, i64 p, int max_m) {
  LocalSumTable t;
  t.prime = p;
  t.max_exponent = max_m;
  t.rho_values = rho_lifted_series(f, p, max_m);
  t.s_values.push_back(1);
  const BigInt scale = boost::multiprecision::pow(BigInt(p), f.dim - 1);
  for (int m = 1; m <= max_m; ++m) t.s_values.push_back(t.rho_values[m] - scale * t.rho_values[m - 1]);
  return t;
}

/// S_F(p^t) for an odd prime p not dividing the discriminant.
inline i128 sf_closed_form(const QuadraticPolynomial& f, i64 p, int t, const FormInvariants& inv) {
  if (p == 2 || !is_prime(p)) throw std::invalid_argument("sf_closed_form: " + std::to_string(p) + " is not an odd prime");
  if (inv.delta % p == 0) {
    throw std::invalid_argument("sf_closed_form: " + std::to_string(p) + " divides the discriminant " + to_string(inv.delta));
  }
  if (t < 1) throw std::invalid_argument("sf_closed_form: exponent must be at least 1");
  const int ell = f.dim;
  const int vr = valuation(inv.rroot, p);
  const bool ell_even = ell % 2 == 0, t_even = t % 2 == 0;
  const i128 pp = p;
  // H is only defined (nonzero) for even ell; it equals (-1)^{ell/2} Delta
  auto hsym = [&] { return detail::legendre_odd_prime(inv.hdisc, p); };
  if (vr >= t) {
    if (t_even) return (pp - 1) * checked::pow(p, ell * t / 2 - 1);
    if (!ell_even) return 0;
    return (pp - 1) * checked::pow(p, ell * t / 2 - 1) * hsym();
  }
  if (vr == t - 1) {
    if (t_even) return -checked::pow(p, (ell * t - 2) / 2);
    if (ell_even) return -checked::pow(p, (ell * t - 2) / 2) * hsym();
    const i128 reduced = inv.oroot / checked::pow(p, t - 1);
    return checked::pow(p, (ell * t - 1) / 2) * detail::legendre_odd_prime(reduced, p);
  }
  return 0;
}

inline i128 sf_closed_form(const QuadraticPolynomial& f, i64 p, int t) { return sf_closed_form(f, p, t, invariants(f)); }

/// (re + im i) * sqrt(radicand), exact.
struct GaussValue {
  i64 re = 0;
  i64 im = 0;
  i64 radicand = 1;

  std::complex<double> to_complex() const {
    const double r = std::sqrt(static_cast<double>(radicand));
    return {static_cast<double>(re) * r, static_cast<double>(im) * r};
  }
  bool operator==(const GaussValue&) const = default;
};

/// G(p^t, c) = sum_{r mod p^t} e(c r^2 / p^t) for odd p and p not dividing c.
inline GaussValue gauss_sum_odd(i64 p, int t, i64 c) {
  if (p == 2 || !is_prime(p)) throw std::invalid_argument("gauss_sum_odd: " + std::to_string(p) + " is not an odd prime");
  if (t < 1) throw std::invalid_argument("gauss_sum_odd: exponent must be at least 1");
  if (c % p == 0) throw std::invalid_argument("gauss_sum_odd: p divides c");
  if (t % 2 == 0) return {ipow(p, t / 2), 0, 1};
  const i64 scale = ipow(p, (t - 1) / 2) * detail::legendre_odd_prime(c, p);
  if (p % 4 == 1) return {scale, 0, p};
  return {0, scale, p};
}

/// G(2^t, b) for odd b.
inline GaussValue gauss_sum_two(int t, i64 b) {
  if (b % 2 == 0) throw std::invalid_argument("gauss_sum_two: b must be odd");
  if (t < 1) throw std::invalid_argument("gauss_sum_two: exponent must be at least 1");
  if (t == 1) return {0, 0, 1};
  if (t % 2 == 0) {
    const i64 s = ipow(2, t / 2);
    const bool b1 = mod_floor(b, 4) == 1;  // i^b = i or -i
    return {s, b1 ? s : -s, 1};
  }
  // 2^{(t+1)/2} e(b/8) = 2^{(t-1)/2} (+-1 +- i) sqrt(2)
  const i64 s = ipow(2, (t - 1) / 2);
  const i64 r = static_cast<i64>(mod_floor(b, 8));
  const i64 re = (r == 1 || r == 7) ? s : -s;
  const i64 im = (r == 1 || r == 3) ? s : -s;
  return {re, im, 2};
}

inline std::complex<double> gauss_sum_brute(i64 q, i64 c) {
  if (q < 1) throw std::invalid_argument("gauss_sum_brute: modulus must be positive");
  std::complex<double> s = 0;
  for (i64 r = 0; r < q; ++r) {
    const i64 k = static_cast<i64>(mod_floor(static_cast<i128>(c) * r * r, q));
    s += std::polar(1.0, 2 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(q));
  }
  return s;
}

/// 2^{-t} sum over odd b mod 2^t of G(2^t, b)^ell, in closed form.
inline double two_adic_power_identity(int t, int ell) {
  if (t < 1 || ell < 1) throw std::invalid_argument("two_adic_power_identity: t and ell must be positive");
  if (t == 1 || (t % 2 == 1 && ell % 4 != 0)) return 0.0;
  if (ell % 4 == 2) return 0.0;
  return std::cos(std::numbers::pi * ell / 4.0) * std::pow(2.0, 0.5 * ell * t + 0.5 * ell - 1.0);
}

}  // namespace divsum
