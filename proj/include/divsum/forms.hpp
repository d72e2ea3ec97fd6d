#pragma once

#include <algorithm>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "divsum/int128.hpp"

namespace divsum {

using IntMatrix = std::vector<std::vector<i128>>;

/// F(x) = x^t Q x + b^t x + c with integer data. Q is stored row-major and need not be symmetric.
struct QuadraticPolynomial {
  int dim = 0;
  std::vector<i64> q_matrix;  // dim*dim, row-major
  std::vector<i64> b_vector;
  i64 c_const = 0;

  QuadraticPolynomial() = default;
  QuadraticPolynomial(int ell, std::vector<i64> q, std::vector<i64> b, i64 c)
      : dim(ell), q_matrix(std::move(q)), b_vector(std::move(b)), c_const(c) {
    if (dim < 3) throw std::invalid_argument("quadratic polynomial needs dimension at least 3, got " + std::to_string(dim));
    if (q_matrix.size() != static_cast<std::size_t>(dim) * dim) {
      throw std::invalid_argument("Q must have " + std::to_string(dim * dim) + " entries, got " +
                                  std::to_string(q_matrix.size()));
    }
    if (b_vector.size() != static_cast<std::size_t>(dim)) {
      throw std::invalid_argument("b must have " + std::to_string(dim) + " entries, got " +
                                  std::to_string(b_vector.size()));
    }
  }

  i64 q(int i, int j) const { return q_matrix[static_cast<std::size_t>(i) * dim + j]; }
  i64 b(int i) const { return b_vector[i]; }

  /// Coefficient of x_i x_j in the expanded polynomial (i == j gives the square term).
  i64 monomial(int i, int j) const { return i == j ? q(i, i) : q(i, j) + q(j, i); }

  bool operator==(const QuadraticPolynomial&) const = default;
};

struct FormInvariants {
  i128 delta = 0;
  i128 hdisc = 0;
  i128 rroot = 0;
  i128 oroot = 0;
};

/// Q^t + Q.
inline IntMatrix symmetrize(const QuadraticPolynomial& f) {
  IntMatrix m(f.dim, std::vector<i128>(f.dim));
  for (int i = 0; i < f.dim; ++i)
    for (int j = 0; j < f.dim; ++j) m[i][j] = static_cast<i128>(f.q(i, j)) + f.q(j, i);
  return m;
}

/// Fraction-free Bareiss elimination with row pivoting; every step is overflow checked.
inline i128 determinant(IntMatrix m) {
  const int n = static_cast<int>(m.size());
  if (n == 0) return 1;
  int sign = 1;
  i128 prev = 1;
  for (int k = 0; k < n - 1; ++k) {
    if (m[k][k] == 0) {
      int piv = -1;
      for (int i = k + 1; i < n; ++i)
        if (m[i][k] != 0) {
          piv = i;
          break;
        }
      if (piv < 0) return 0;
      std::swap(m[k], m[piv]);
      sign = -sign;
    }
    for (int i = k + 1; i < n; ++i) {
      for (int j = k + 1; j < n; ++j) {
        const i128 num = checked::sub(checked::mul(m[i][j], m[k][k]), checked::mul(m[i][k], m[k][j]));
        m[i][j] = num / prev;  // exact by Sylvester's identity
      }
      m[i][k] = 0;
    }
    prev = m[k][k];
  }
  return sign > 0 ? m[n - 1][n - 1] : -m[n - 1][n - 1];
}

/// Classical adjugate by cofactors, checked against M adj(M) = det(M) I.
inline IntMatrix adjugate(const IntMatrix& m) {
  const int n = static_cast<int>(m.size());
  if (n < 1) throw std::invalid_argument("adjugate: empty matrix");
  IntMatrix adj(n, std::vector<i128>(n, 0));
  if (n == 1) {
    adj[0][0] = 1;
  } else {
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        IntMatrix minor;
        minor.reserve(n - 1);
        for (int r = 0; r < n; ++r) {
          if (r == i) continue;
          std::vector<i128> row;
          row.reserve(n - 1);
          for (int c = 0; c < n; ++c)
            if (c != j) row.push_back(m[r][c]);
          minor.push_back(std::move(row));
        }
        const i128 cof = determinant(std::move(minor));
        adj[j][i] = ((i + j) % 2 == 0) ? cof : -cof;
      }
    }
  }
  const i128 det = determinant(m);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      i128 s = 0;
      for (int k = 0; k < n; ++k) s = checked::add(s, checked::mul(m[i][k], adj[k][j]));
      if (s != (i == j ? det : 0)) throw std::logic_error("adjugate: M adj(M) != det(M) I");
    }
  }
  return adj;
}

inline FormInvariants invariants(const QuadraticPolynomial& f) {
  const IntMatrix qs = symmetrize(f);
  FormInvariants inv;
  inv.delta = determinant(qs);
  if (inv.delta == 0) {
    throw std::invalid_argument("det(Q^t + Q) = 0: the quadratic part is degenerate, which the asymptotic formula excludes");
  }
  const int ell = f.dim;
  if (ell % 2 == 0) inv.hdisc = (ell / 2) % 2 == 0 ? inv.delta : -inv.delta;

  const IntMatrix adj = adjugate(qs);
  i128 quad = 0;
  for (int i = 0; i < ell; ++i)
    for (int j = 0; j < ell; ++j) quad = checked::add(quad, checked::mul(checked::mul(f.b(i), adj[i][j]), f.b(j)));
  inv.rroot = checked::sub(checked::mul(checked::mul(2, f.c_const), inv.delta), quad);
  if (ell % 2 == 1) inv.oroot = ((ell + 1) / 2) % 2 == 0 ? inv.rroot : -inv.rroot;
  return inv;
}

template <class Vec>
i128 evaluate(const QuadraticPolynomial& f, const Vec& x) {
  if (static_cast<int>(x.size()) != f.dim) {
    throw std::invalid_argument("evaluate: point has " + std::to_string(x.size()) + " coordinates, form has " +
                                std::to_string(f.dim));
  }
  i128 v = f.c_const;
  for (int i = 0; i < f.dim; ++i) {
    const i128 xi = x[i];
    i128 row = f.b(i);
    for (int j = i; j < f.dim; ++j) row = checked::add(row, checked::mul(f.monomial(i, j), x[j]));
    v = checked::add(v, checked::mul(xi, row));
  }
  return v;
}

namespace detail {

using Rational = boost::multiprecision::cpp_rational;
using RatMatrix = std::vector<std::vector<Rational>>;

// Solves the (possibly overdetermined) system a x = rhs. Returns the solution when it exists and is unique.
inline std::optional<std::vector<Rational>> solve_unique(RatMatrix a, std::vector<Rational> rhs) {
  const int rows = static_cast<int>(a.size());
  const int cols = rows ? static_cast<int>(a[0].size()) : 0;
  for (int i = 0; i < rows; ++i) a[i].push_back(rhs[i]);
  int r = 0;
  std::vector<int> pivot_col;
  for (int c = 0; c < cols && r < rows; ++c) {
    int piv = -1;
    for (int i = r; i < rows; ++i)
      if (a[i][c] != 0) {
        piv = i;
        break;
      }
    if (piv < 0) continue;
    std::swap(a[r], a[piv]);
    for (int i = 0; i < rows; ++i) {
      if (i == r || a[i][c] == 0) continue;
      const Rational factor = a[i][c] / a[r][c];
      for (int j = c; j <= cols; ++j) a[i][j] -= factor * a[r][j];
    }
    pivot_col.push_back(c);
    ++r;
  }
  for (int i = r; i < rows; ++i)
    if (a[i][cols] != 0) return std::nullopt;  // inconsistent
  if (r < cols) return std::nullopt;           // not unique
  std::vector<Rational> x(cols);
  for (int i = 0; i < r; ++i) x[pivot_col[i]] = a[i][cols] / a[i][pivot_col[i]];
  return x;
}

inline std::vector<std::vector<int>> nonempty_subsets(int n) {
  std::vector<std::vector<int>> out;
  for (unsigned mask = 1; mask < (1u << n); ++mask) {
    std::vector<int> s;
    for (int i = 0; i < n; ++i)
      if (mask & (1u << i)) s.push_back(i);
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace detail

/// Decides F > 0 on the closed orthant x >= 1 exactly, over the rationals.
///
/// With y = x - 1 the problem is G(y) = y^t A y / 2 + g^t y + G0 > 0 on y >= 0, A = Q^t + Q.
/// G is bounded below there iff A is copositive and g.d >= 0 on every ray d >= 0 with d^t A d = 0;
/// a bounded-below quadratic attains its infimum, at a stationary point of some face.
inline bool positivity_check(const QuadraticPolynomial& f) {
  using detail::Rational;
  const int n = f.dim;
  const IntMatrix a = symmetrize(f);
  std::vector<Rational> g(n);
  for (int i = 0; i < n; ++i) {
    i128 s = f.b(i);
    for (int j = 0; j < n; ++j) s += a[i][j];
    g[i] = Rational(checked::narrow(s));
  }
  const Rational g0(checked::narrow(evaluate(f, std::vector<i64>(n, 1))));
  const auto subsets = detail::nonempty_subsets(n);
  auto entry = [&](int i, int j) { return Rational(checked::narrow(a[i][j])); };

  // copositivity: minimum of d^t A d on each face of the simplex
  for (const auto& s : subsets) {
    const int k = static_cast<int>(s.size());
    detail::RatMatrix m(k + 1, std::vector<Rational>(k + 1));
    std::vector<Rational> rhs(k + 1, 0);
    for (int i = 0; i < k; ++i) {
      for (int j = 0; j < k; ++j) m[i][j] = entry(s[i], s[j]);
      m[i][k] = -1;
      m[k][i] = 1;
    }
    rhs[k] = 1;
    const auto sol = detail::solve_unique(std::move(m), std::move(rhs));
    if (!sol) continue;
    bool interior = true;
    for (int i = 0; i < k; ++i) interior = interior && (*sol)[i] > 0;
    if (interior && (*sol)[k] < 0) return false;
  }

  // rays with d^t A d = 0: vertices of {d_S >= 0, sum d = 1, A_SS d = 0, A_{S^c,S} d >= 0}
  for (const auto& s : subsets) {
    const int k = static_cast<int>(s.size());
    std::vector<int> rest;
    for (int i = 0; i < n; ++i)
      if (std::find(s.begin(), s.end(), i) == s.end()) rest.push_back(i);
    // inequality rows: d_i >= 0 (k of them), then (A d)_r >= 0 for r outside S
    const int ineq = k + static_cast<int>(rest.size());
    auto ineq_row = [&](int idx) {
      std::vector<Rational> row(k, 0);
      if (idx < k) {
        row[idx] = 1;
      } else {
        for (int j = 0; j < k; ++j) row[j] = entry(rest[idx - k], s[j]);
      }
      return row;
    };
    for (unsigned mask = 0; mask < (1u << ineq); ++mask) {
      detail::RatMatrix m;
      std::vector<Rational> rhs;
      for (int i = 0; i < k; ++i) {
        std::vector<Rational> row(k);
        for (int j = 0; j < k; ++j) row[j] = entry(s[i], s[j]);
        m.push_back(std::move(row));
        rhs.push_back(0);
      }
      m.emplace_back(k, Rational(1));
      rhs.push_back(1);
      for (int idx = 0; idx < ineq; ++idx) {
        if (!(mask & (1u << idx))) continue;
        m.push_back(ineq_row(idx));
        rhs.push_back(0);
      }
      const auto d = detail::solve_unique(std::move(m), std::move(rhs));
      if (!d) continue;
      bool feasible = true;
      for (int idx = 0; idx < ineq && feasible; ++idx) {
        const auto row = ineq_row(idx);
        Rational v = 0;
        for (int j = 0; j < k; ++j) v += row[j] * (*d)[j];
        feasible = v >= 0;
      }
      if (!feasible) continue;
      Rational slope = 0;
      for (int j = 0; j < k; ++j) slope += g[s[j]] * (*d)[j];
      if (slope < 0) return false;
    }
  }

  // minimum over stationary points of faces with nonsingular A_SS, plus the corner y = 0
  Rational best = g0;
  for (const auto& s : subsets) {
    const int k = static_cast<int>(s.size());
    detail::RatMatrix m(k, std::vector<Rational>(k));
    std::vector<Rational> rhs(k);
    for (int i = 0; i < k; ++i) {
      for (int j = 0; j < k; ++j) m[i][j] = entry(s[i], s[j]);
      rhs[i] = -g[s[i]];
    }
    const auto y = detail::solve_unique(std::move(m), std::move(rhs));
    if (!y) continue;
    bool inside = true;
    Rational half_gy = 0;
    for (int i = 0; i < k; ++i) {
      inside = inside && (*y)[i] > 0;
      half_gy += g[s[i]] * (*y)[i];
    }
    if (!inside) continue;
    const Rational value = g0 + half_gy / 2;
    if (value < best) best = value;
  }
  return best > 0;
}

}  // namespace divsum
