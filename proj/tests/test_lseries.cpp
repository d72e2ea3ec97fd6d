#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <random>

#include "divsum/lseries.hpp"

using Catch::Approx;
using namespace divsum;

namespace {

QuadraticPolynomial squares_plus_one() { return {3, {1, 0, 0, 0, 1, 0, 0, 0, 1}, {0, 0, 0}, 1}; }
QuadraticPolynomial two_products() {
  return {4, {0, 1, 0, 0, 0, 0, 0, 0, 0, 0, 0, 1, 0, 0, 0, 0}, {0, 0, 0, 0}, 0};
}
QuadraticPolynomial square_plus_product() { return {3, {1, 0, 0, 0, 0, 1, 0, 0, 0}, {0, 0, 0}, 0}; }
QuadraticPolynomial symmetric_products() { return {3, {0, 1, 1, 0, 0, 1, 0, 0, 0}, {0, 0, 0}, 0}; }
QuadraticPolynomial three_squares() { return {3, {1, 0, 0, 0, 1, 0, 0, 0, 1}, {0, 0, 0}, 0}; }
QuadraticPolynomial four_squares() {
  return {4, {1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1}, {0, 0, 0, 0}, 0};
}
QuadraticPolynomial four_squares_plus_one() {
  return {4, {1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1}, {0, 0, 0, 0}, 1};
}
QuadraticPolynomial with_linear_term() { return {3, {1, 1, 0, 0, 1, 0, 0, 0, 1}, {1, 0, 0}, 3}; }
QuadraticPolynomial squares_plus_fifteen() { return {3, {1, 0, 0, 0, 1, 0, 0, 0, 1}, {0, 0, 0}, 15}; }

std::vector<QuadraticPolynomial> regression_forms() {
  return {squares_plus_one(), two_products(),          square_plus_product(),  symmetric_products(),
          three_squares(),    four_squares(),          four_squares_plus_one(), with_linear_term(),
          squares_plus_fifteen()};
}

// 1 + sum_{m <= depth} S(p^m) p^{-ms}
double raw_euler_factor(const QuadraticPolynomial& f, i64 p, double s, int depth) {
  double sum = 1;
  for (int m = 1; m <= depth; ++m) sum += static_cast<double>(sf_via_rho(f, p, m)) * std::pow(double(p), -m * s);
  return sum;
}

double ifl_monte_carlo(const QuadraticPolynomial& f, int samples, double& std_err) {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> t(f.dim);
  double sum = 0, sum_sq = 0;
  for (int i = 0; i < samples; ++i) {
    for (auto& v : t) v = 1.0 - u(rng);
    double val = 0;
    for (int a = 0; a < f.dim; ++a)
      for (int b = 0; b < f.dim; ++b) val += f.q(a, b) * t[a] * t[b];
    const double l = std::log(val);
    sum += l;
    sum_sq += l * l;
  }
  const double mean = sum / samples;
  std_err = std::sqrt((sum_sq / samples - mean * mean) / samples);
  return mean;
}

}  // namespace

TEST_CASE("config validation", "[lseries]") {
  SingularSeriesConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.prime_bound = 99;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.bad_prime_depth = 3;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.quadrature_order = 7;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("local_factor routes and values", "[lseries]") {
  const auto e4 = squares_plus_one();

  SECTION("bad prime 2 for x^2+y^2+z^2+1") {
    // S(2) = 0, S(4) = -8, S(8) = -32, then 0: 1 - 8/64 - 32/512
    const auto v = local_factor(e4, 2, 3.0);
    CHECK(v.route == FactorRoute::rho_series_bad_prime);
    CHECK(v.stabilized);
    CHECK(v.value == Approx(0.8125).epsilon(1e-14));
  }

  SECTION("good prime, odd ell, R != 0") {
    // O = 16 is a square, so the symbol is 1
    for (i64 p : {3, 5, 7, 11, 101}) {
      const auto v = local_factor(e4, p, 3.0);
      CHECK(v.route == FactorRoute::closed_form_good_prime);
      CHECK(v.value == Approx(1 + std::pow(double(p), -2.0)).epsilon(1e-14));
    }
    const auto g = with_linear_term();  // O = 32
    for (i64 p : {5, 7, 11, 13}) {
      const int chi = legendre_symbol(32, p);
      CHECK(local_factor(g, p, 3.5).value == Approx(1 + chi * std::pow(double(p), -2.5)).epsilon(1e-14));
    }
  }

  SECTION("bad prime 2 for x1x2+x3x4 at s = 4") {
    // raw factor 1 + sum 2^{2m-1} 2^{-4m} = 7/6, divided by the zeta-ratio factor 31/30
    const auto v = local_factor(two_products(), 2, 4.0);
    CHECK(v.route == FactorRoute::rho_series_bad_prime);
    CHECK(v.value == Approx(35.0 / 31.0).epsilon(1e-14));
  }

  SECTION("p | R but p does not divide 2 Delta") {
    const auto f = squares_plus_fifteen();
    const auto v3 = local_factor(f, 3, 3.0);
    CHECK(v3.route == FactorRoute::lemma_finite_sum);
    CHECK(v3.value == Approx(raw_euler_factor(f, 3, 3.0, 12)).epsilon(1e-12));
    const auto v5 = local_factor(f, 5, 3.0);
    CHECK(v5.route == FactorRoute::lemma_finite_sum);
    CHECK(v5.value == Approx(raw_euler_factor(f, 5, 3.0, 10)).epsilon(1e-12));
  }

  SECTION("every route agrees with the truncated rho series") {
    for (const auto& f : regression_forms()) {
      const auto inv = invariants(f);
      const double s = f.dim + 0.25;
      for (i64 p : {2, 3, 5, 7}) {
        const double raw = raw_euler_factor(f, p, s, p == 2 ? 24 : 12);
        double expected = raw;
        if (inv.rroot == 0) {
          const double a = std::pow(double(p), f.dim - 2 * s);
          expected = raw * (1 - a) / (1 - a / p);
        }
        REQUIRE(local_factor(f, p, s).value == Approx(expected).epsilon(1e-10));
      }
    }
  }

  CHECK_THROWS_AS(local_factor(e4, 4, 3.0), std::invalid_argument);
  CHECK_THROWS_AS(local_factor(e4, 3, 2.0), std::domain_error);
}

TEST_CASE("l_value closed forms", "[lseries]") {
  // L(s, x1x2+x3x4) = zeta(s-2)/zeta(s-1)
  CHECK(l_value(two_products(), 4.0) == Approx(zeta(2.0) / zeta(3.0)).epsilon(1e-9));
  CHECK(l_value(two_products(), 5.0) == Approx(zeta(3.0) / zeta(4.0)).epsilon(1e-9));
  // x0^2 + x1x2 and xy+yz+xz both give zeta(3)/zeta(4) at s = 3 after the factor at 2
  CHECK(l_value(square_plus_product(), 3.0) == Approx(zeta(3.0) / zeta(4.0)).epsilon(1e-9));
  CHECK(l_value(symmetric_products(), 3.0) == Approx(zeta(3.0) / zeta(4.0)).epsilon(1e-9));
  // x^2+y^2+z^2+1: factor 13/16 at 2 times zeta(2)/zeta(4) times (1 + 1/4); 2 L = 19.5/pi^2
  CHECK(l_value(squares_plus_one(), 3.0) == Approx(9.75 / (std::numbers::pi * std::numbers::pi)).epsilon(1e-9));
}

TEST_CASE("log derivative", "[lseries]") {
  CHECK(l_log_derivative(two_products(), 4.0) ==
        Approx(zeta_prime(2.0) / zeta(2.0) - zeta_prime(3.0) / zeta(3.0)).margin(1e-9));

  SECTION("matches a Richardson difference of log L") {
    for (const auto& f : regression_forms()) {
      const double s = f.dim, h = 1e-4;
      auto log_l = [&](double x) { return std::log(l_value(f, x)); };
      const double d1 = (log_l(s + h) - log_l(s - h)) / (2 * h);
      const double d2 = (log_l(s + h / 2) - log_l(s - h / 2)) / h;
      REQUIRE(std::abs(l_log_derivative(f, s) - (4 * d2 - d1) / 3) <= 1e-6);
    }
  }
}

TEST_CASE("Euler product truncation", "[lseries]") {
  SingularSeriesConfig small;
  small.prime_bound = 10000;
  for (const auto& f : regression_forms()) {
    const auto coarse = evaluate_series(f, f.dim, small);
    const auto fine = evaluate_series(f, f.dim);
    REQUIRE(coarse.warnings.empty());
    REQUIRE(std::abs(fine.value - coarse.value) <= (10 * coarse.tail_bound + 1e-12) * coarse.value);
  }
  CHECK(evaluate_series(squares_plus_one(), 3.0).accelerated);
  CHECK_FALSE(evaluate_series(with_linear_term(), 3.0).accelerated);
}

TEST_CASE("Dirichlet partial sums approach the Euler product", "[lseries]") {
  CHECK(l_dirichlet_partial(squares_plus_one(), 3.0, 1) == 1.0);
  CHECK(l_dirichlet_partial(four_squares(), 4.0, 1) == 1.0);
  CHECK_THROWS_AS(l_dirichlet_partial(squares_plus_one(), 3.0, 0), std::invalid_argument);
  for (const auto& f : regression_forms()) {
    const double l = l_value(f, f.dim);
    const double g100 = std::abs(l_dirichlet_partial(f, f.dim, 100) - l);
    const double g400 = std::abs(l_dirichlet_partial(f, f.dim, 400) - l);
    REQUIRE(g400 < 2e-3);
    REQUIRE(g400 <= g100);
  }
}

TEST_CASE("I_FL quadrature", "[lseries]") {
  using std::numbers::pi;
  const double qfm = (pi * pi + 8 * pi - 104 + 56 * std::log(2.0)) / 36;
  CHECK(ifl_integral(square_plus_product(), 0, IflMode::limit) == Approx(qfm).epsilon(1e-8));

  SECTION("quadratic inner integral against midpoint sums") {
    for (auto [a, b, c] : {std::tuple{1.0, 0.0, 0.0}, {1.0, -1.0, 0.5}, {0.0, 2.0, 0.0}, {2.0, 3.0, 1.0},
                           {-1.0, 2.0, 0.5}, {0.0, 0.0, 3.0}}) {
      const int n = 2000000;
      long double sum = 0;
      for (int i = 0; i < n; ++i) {
        const double t = (i + 0.5) / n;
        sum += std::log(a * t * t + b * t + c);
      }
      REQUIRE(detail::log_quadratic_integral(a, b, c) == Approx(double(sum / n)).margin(2e-6));
    }
  }

  SECTION("order doubling is stable") {
    SingularSeriesConfig doubled;
    doubled.quadrature_order = 16;
    for (const auto& f : regression_forms()) {
      const double base = ifl_integral(f, 0, IflMode::limit);
      const double fine = ifl_integral(f, 0, IflMode::limit, doubled);
      REQUIRE(std::abs(base - fine) <= SingularSeriesConfig{}.target_rel_tol * std::abs(fine));
    }
  }

  SECTION("Monte-Carlo oracle for homogeneous forms") {
    for (const auto& f : {two_products(), three_squares(), symmetric_products()}) {
      double se = 0;
      const double mc = ifl_monte_carlo(f, 1000000, se);
      REQUIRE(std::abs(ifl_integral(f, 0, IflMode::limit) - mc) <= 4 * se);
    }
  }

  SECTION("finite X tends to the limit") {
    const auto f = squares_plus_one();
    const double lim = ifl_integral(three_squares(), 0, IflMode::limit);
    CHECK(ifl_integral(f, 0, IflMode::limit) == Approx(lim).epsilon(1e-14));
    CHECK(std::abs(ifl_integral(f, 1000, IflMode::at_x) - lim) <= 1e-4);
    CHECK(ifl_integral(f, 1, IflMode::at_x) > ifl_integral(f, 10, IflMode::at_x));
  }

  SECTION("nonpositive integrand is rejected") {
    const QuadraticPolynomial f{3, {1, 0, 0, 0, 1, 0, 0, 0, 1}, {0, 0, 0}, -3};
    CHECK_THROWS_AS(ifl_integral(f, 1, IflMode::at_x), std::domain_error);
    CHECK_THROWS_AS(ifl_integral(f, 0, IflMode::at_x), std::invalid_argument);
  }

  CHECK(parse_ifl_mode("at-x") == IflMode::at_x);
  CHECK(parse_ifl_mode("limit") == IflMode::limit);
  CHECK_THROWS_AS(parse_ifl_mode("infinity"), std::invalid_argument);
}

TEST_CASE("asymptotic constants", "[lseries]") {
  for (const auto& f : {squares_plus_one(), two_products(), square_plus_product()}) {
    const auto k = asymptotic_constants(f, 0, IflMode::limit);
    REQUIRE(k.c_main == 2 * k.l_value);
    REQUIRE(k.c_secondary == (k.gamma + 0.5 * k.ifl + k.l_log_deriv) * k.c_main);
    REQUIRE(k.gamma == euler_gamma());
  }
  CHECK(asymptotic_constants(two_products(), 0, IflMode::limit).c_main ==
        Approx(2 * zeta(2.0) / zeta(3.0)).epsilon(1e-9));
  CHECK(asymptotic_constants(square_plus_product(), 0, IflMode::limit).c_main ==
        Approx(2 * zeta(3.0) / zeta(4.0)).epsilon(1e-9));

  const QuadraticPolynomial indefinite{3, {1, 0, 0, 0, -1, 0, 0, 0, 1}, {0, 0, 0}, 100};
  CHECK_THROWS_AS(asymptotic_constants(indefinite, 0, IflMode::limit), std::domain_error);

  SECTION("JSON report") {
    const auto k = asymptotic_constants(squares_plus_one(), 50, IflMode::at_x);
    const auto j = to_json(k);
    CHECK(j["dim"] == 3);
    CHECK(j["branch"] == "R!=0");
    CHECK(j["ifl_mode"] == "at-x");
    CHECK(j["ifl_x"] == 50.0);
    CHECK(j["c_main"].get<double>() == k.c_main);
    CHECK(j["truncation"]["prime_bound"] == 100000);
    CHECK(j["truncation"]["accelerated"] == true);
    REQUIRE(j["truncation"]["special_primes"].size() == 1);
    CHECK(j["truncation"]["special_primes"][0]["prime"] == 2);
    CHECK(j["truncation"]["special_primes"][0]["route"] == "rho_series_bad_prime");
    CHECK(j.dump() == to_json(asymptotic_constants(squares_plus_one(), 50, IflMode::at_x)).dump());
  }
}
