#include <catch_amalgamated.hpp>

#include <random>

#include "divsum/forms.hpp"

using namespace divsum;

namespace {

QuadraticPolynomial sum_of_squares_plus_one() { return {3, {1, 0, 0, 0, 1, 0, 0, 0, 1}, {0, 0, 0}, 1}; }
QuadraticPolynomial two_products() {
  return {4, {0, 1, 0, 0, 0, 0, 0, 0, 0, 0, 0, 1, 0, 0, 0, 0}, {0, 0, 0, 0}, 0};
}
QuadraticPolynomial symmetric_products() { return {3, {0, 1, 1, 0, 0, 1, 0, 0, 0}, {0, 0, 0}, 0}; }

IntMatrix to_matrix(std::initializer_list<std::initializer_list<int>> rows) {
  IntMatrix m;
  for (auto r : rows) {
    std::vector<i128> row;
    for (int v : r) row.push_back(v);
    m.push_back(row);
  }
  return m;
}

}  // namespace

TEST_CASE("construction validates shape", "[forms]") {
  CHECK_THROWS_AS((QuadraticPolynomial{2, {1, 0, 0, 1}, {0, 0}, 0}), std::invalid_argument);
  CHECK_THROWS_AS((QuadraticPolynomial{3, {1, 0, 0}, {0, 0, 0}, 0}), std::invalid_argument);
  CHECK_THROWS_AS((QuadraticPolynomial{3, {1, 0, 0, 0, 1, 0, 0, 0, 1}, {0, 0}, 0}), std::invalid_argument);
}

TEST_CASE("symmetrize", "[forms]") {
  const QuadraticPolynomial id{3, {1, 0, 0, 0, 1, 0, 0, 0, 1}, {0, 0, 0}, 0};
  CHECK(symmetrize(id) == to_matrix({{2, 0, 0}, {0, 2, 0}, {0, 0, 2}}));
  CHECK(symmetrize(two_products()) ==
        to_matrix({{0, 1, 0, 0}, {1, 0, 0, 0}, {0, 0, 0, 1}, {0, 0, 1, 0}}));
  CHECK(symmetrize(symmetric_products()) == to_matrix({{0, 1, 1}, {1, 0, 1}, {1, 1, 0}}));
}

TEST_CASE("adjugate", "[forms]") {
  const auto i3 = to_matrix({{1, 0, 0}, {0, 1, 0}, {0, 0, 1}});
  CHECK(adjugate(i3) == i3);
  CHECK(adjugate(to_matrix({{2, 0, 0}, {0, 2, 0}, {0, 0, 2}})) == to_matrix({{4, 0, 0}, {0, 4, 0}, {0, 0, 4}}));
  CHECK(adjugate(to_matrix({{0, 1, 1}, {1, 0, 1}, {1, 1, 0}})) == to_matrix({{-1, 1, 1}, {1, -1, 1}, {1, 1, -1}}));
  CHECK(adjugate(to_matrix({{5}})) == to_matrix({{1}}));

  SECTION("M adj(M) = det(M) I on random matrices") {
    std::mt19937 rng(7);
    std::uniform_int_distribution<int> entry(-9, 9);
    for (int trial = 0; trial < 300; ++trial) {
      const int n = 1 + trial % 6;
      IntMatrix m(n, std::vector<i128>(n));
      for (auto& row : m)
        for (auto& v : row) v = entry(rng);
      const auto adj = adjugate(m);
      const i128 det = determinant(m);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          i128 s = 0;
          for (int k = 0; k < n; ++k) s += m[i][k] * adj[k][j];
          REQUIRE(s == (i == j ? det : 0));
        }
    }
  }

  SECTION("overflow is reported, not wrapped") {
    const i128 big = i128(1) << 62;
    IntMatrix m = {{big, big - 1, 3}, {big - 5, big, 7}, {11, big - 3, big}};
    CHECK_THROWS_AS(adjugate(m), std::overflow_error);
  }
}

TEST_CASE("determinant handles zero pivots", "[forms]") {
  CHECK(determinant(to_matrix({{0, 1}, {1, 0}})) == -1);
  CHECK(determinant(to_matrix({{0, 0, 1}, {0, 1, 0}, {1, 0, 0}})) == -1);
  CHECK(determinant(to_matrix({{1, 2}, {2, 4}})) == 0);
  CHECK(determinant(to_matrix({{0, 2, 1}, {3, 0, 0}, {0, 1, 5}})) == -27);
}

TEST_CASE("invariants", "[forms]") {
  const auto a = invariants(sum_of_squares_plus_one());
  CHECK(a.delta == 8);
  CHECK(a.rroot == 16);
  CHECK(a.hdisc == 0);
  CHECK(a.oroot == 16);

  const auto b = invariants(two_products());
  CHECK(b.delta == 1);
  CHECK(b.hdisc == 1);
  CHECK(b.rroot == 0);
  CHECK(b.oroot == 0);

  const auto c = invariants(symmetric_products());
  CHECK(c.delta == 2);
  CHECK(c.rroot == 0);
  CHECK(c.hdisc == 0);

  const QuadraticPolynomial degenerate{3, {1, 0, 0, 0, 1, 0, 0, 0, 0}, {0, 0, 0}, 1};
  CHECK_THROWS_AS(invariants(degenerate), std::invalid_argument);

  SECTION("depends on Q only through Q^t + Q, and parity rules hold") {
    std::mt19937 rng(11);
    std::uniform_int_distribution<int> entry(-3, 3);
    int checked_forms = 0;
    while (checked_forms < 200) {
      const int ell = 3 + checked_forms % 3;
      std::vector<i64> q(ell * ell), b(ell);
      for (auto& v : q) v = entry(rng);
      for (auto& v : b) v = entry(rng);
      const QuadraticPolynomial f{ell, q, b, entry(rng)};
      if (determinant(symmetrize(f)) == 0) continue;
      // move weight between q_ij and q_ji without changing Q^t + Q
      auto q2 = q;
      for (int i = 0; i < ell; ++i)
        for (int j = i + 1; j < ell; ++j) {
          const i64 shift = entry(rng);
          q2[i * ell + j] += shift;
          q2[j * ell + i] -= shift;
        }
      const QuadraticPolynomial g{ell, q2, b, f.c_const};
      const auto fi = invariants(f), gi = invariants(g);
      REQUIRE(fi.delta == gi.delta);
      REQUIRE(fi.rroot == gi.rroot);
      REQUIRE(fi.hdisc == gi.hdisc);
      REQUIRE(fi.oroot == gi.oroot);
      if (ell % 2) {
        REQUIRE(fi.hdisc == 0);
      } else {
        REQUIRE(fi.oroot == 0);
      }
      ++checked_forms;
    }
  }
}

TEST_CASE("evaluate", "[forms]") {
  CHECK(evaluate(sum_of_squares_plus_one(), std::vector<i64>{1, 1, 1}) == 4);
  CHECK(evaluate(two_products(), std::vector<i64>{2, 3, 1, 5}) == 11);
  CHECK(evaluate(symmetric_products(), std::vector<i64>{1, 2, 3}) == 11);
  CHECK_THROWS_AS(evaluate(symmetric_products(), std::vector<i64>{1, 2}), std::invalid_argument);

  SECTION("equals x^t Q_S x / 2 + b^t x + c") {
    std::mt19937 rng(3);
    std::uniform_int_distribution<int> entry(-5, 5);
    for (int trial = 0; trial < 500; ++trial) {
      const int ell = 3 + trial % 3;
      std::vector<i64> q(ell * ell), b(ell), x(ell);
      for (auto& v : q) v = entry(rng);
      for (auto& v : b) v = entry(rng);
      for (auto& v : x) v = entry(rng);
      const QuadraticPolynomial f{ell, q, b, entry(rng)};
      const auto s = symmetrize(f);
      i128 quad = 0;
      for (int i = 0; i < ell; ++i)
        for (int j = 0; j < ell; ++j) quad += x[i] * s[i][j] * x[j];
      REQUIRE(quad % 2 == 0);
      i128 lin = f.c_const;
      for (int i = 0; i < ell; ++i) lin += b[i] * x[i];
      REQUIRE(evaluate(f, x) == quad / 2 + lin);
    }
  }

  SECTION("overflow is reported") {
    const i64 big = i64(1) << 62;
    const QuadraticPolynomial f{3, {big, 0, 0, 0, big, 0, 0, 0, big}, {0, 0, 0}, 0};
    CHECK_THROWS_AS(evaluate(f, std::vector<i64>{big, big, big}), std::overflow_error);
  }
}

TEST_CASE("positivity_check", "[forms]") {
  CHECK(positivity_check(sum_of_squares_plus_one()));
  CHECK(positivity_check(two_products()));
  CHECK(positivity_check(symmetric_products()));
  CHECK_FALSE(positivity_check({3, {1, -10, 0, 0, 1, 0, 0, 0, 1}, {0, 0, 0}, 0}));
  // x^2 + y^2 + z^2 - 3 vanishes at (1,1,1)
  CHECK_FALSE(positivity_check({3, {1, 0, 0, 0, 1, 0, 0, 0, 1}, {0, 0, 0}, -3}));
  CHECK(positivity_check({3, {1, 0, 0, 0, 1, 0, 0, 0, 1}, {0, 0, 0}, -2}));
  // x^2 - y^2 + z^2 is unbounded below along y
  CHECK_FALSE(positivity_check({3, {1, 0, 0, 0, -1, 0, 0, 0, 1}, {0, 0, 0}, 100}));
  // xy + yz + xz - 4x equals 1 - 2t at (t, 1, 1)
  CHECK_FALSE(positivity_check({3, {0, 1, 1, 0, 0, 1, 0, 0, 0}, {-4, 0, 0}, 0}));
  // interior minimum at (3,3,3): the constant 27 makes it exactly zero
  CHECK(positivity_check({3, {1, 0, 0, 0, 1, 0, 0, 0, 1}, {-6, -6, -6}, 28}));
  CHECK_FALSE(positivity_check({3, {1, 0, 0, 0, 1, 0, 0, 0, 1}, {-6, -6, -6}, 27}));

  SECTION("never claims positivity when a grid sample is nonpositive") {
    std::mt19937 rng(5);
    std::uniform_int_distribution<int> entry(-3, 3);
    int positive_claims = 0;
    for (int trial = 0; trial < 400; ++trial) {
      std::vector<i64> q(9), b(3);
      for (auto& v : q) v = entry(rng);
      for (auto& v : b) v = entry(rng);
      const QuadraticPolynomial f{3, q, b, entry(rng) * 3};
      const QuadraticPolynomial quad_part{3, q, {0, 0, 0}, 0};
      if (!positivity_check(f)) continue;
      ++positive_claims;
      // 4 F(x/2) on the half-integer grid of [1, 30]^3
      for (i64 i = 2; i <= 60; ++i)
        for (i64 j = 2; j <= 60; ++j)
          for (i64 k = 2; k <= 60; ++k) {
            const i128 v = evaluate(quad_part, std::vector<i64>{i, j, k}) +
                           2 * (f.b(0) * i + f.b(1) * j + f.b(2) * k) + 4 * f.c_const;
            REQUIRE(v > 0);
          }
    }
    CHECK(positive_claims > 20);
  }
}
