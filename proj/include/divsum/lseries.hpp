#pragma once

#include <cmath>
#include <complex>
#include <map>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "divsum/arith.hpp"
#include "divsum/dual.hpp"
#include "divsum/expsums.hpp"
#include "divsum/forms.hpp"

namespace divsum {

struct SingularSeriesConfig {
  i64 prime_bound = 100000;
  int bad_prime_depth = 8;
  int quadrature_order = 8;
  double target_rel_tol = 1e-6;

  void validate() const {
    if (prime_bound < 100) throw std::invalid_argument("prime_bound must be at least 100");
    if (bad_prime_depth < 4) throw std::invalid_argument("bad_prime_depth must be at least 4");
    if (quadrature_order < 8) throw std::invalid_argument("quadrature_order must be at least 8");
    if (!(target_rel_tol > 0)) throw std::invalid_argument("target_rel_tol must be positive");
  }
};

enum class FactorRoute { closed_form_good_prime, geometric_R_zero, rho_series_bad_prime, lemma_finite_sum };

inline std::string to_string(FactorRoute r) {
  switch (r) {
    case FactorRoute::closed_form_good_prime: return "closed_form_good_prime";
    case FactorRoute::geometric_R_zero: return "geometric_R_zero";
    case FactorRoute::rho_series_bad_prime: return "rho_series_bad_prime";
    case FactorRoute::lemma_finite_sum: return "lemma_finite_sum";
  }
  return "unknown";
}

/// One Euler factor as it enters the assembled product for L(s, F).
/// For R = 0 the factors at p | 2 Delta are divided by the local factor of the zeta ratio.
struct LocalFactorValue {
  i64 prime = 0;
  double value = 1.0;
  double log_derivative = 0.0;  // d/ds log value
  FactorRoute route = FactorRoute::closed_form_good_prime;
  int truncation_depth_used = 0;
  bool stabilized = true;
  double tail_bound = 0.0;
  std::string warning;
};

enum class Branch { r_zero, r_nonzero };

inline std::string to_string(Branch b) { return b == Branch::r_zero ? "R=0" : "R!=0"; }

inline Branch branch_of(const FormInvariants& inv) { return inv.rroot == 0 ? Branch::r_zero : Branch::r_nonzero; }

struct SeriesEvaluation {
  double s = 0.0;
  double value = 0.0;
  double log_derivative = 0.0;
  Branch branch = Branch::r_zero;
  std::vector<LocalFactorValue> special_factors;  // every prime handled outside the generic product
  i64 prime_bound = 0;
  bool accelerated = false;
  double tail_bound = 0.0;  // estimated |log| error of the truncated generic product
  std::vector<std::string> warnings;
};

namespace detail {

inline bool is_positive_square(i128 a) {
  if (a <= 0) return false;
  i128 r = static_cast<i128>(std::sqrt(static_cast<long double>(a)));
  while (r * r > a) --r;
  while ((r + 1) * (r + 1) <= a) ++r;
  return r * r == a;
}

inline double big_to_double(const BigInt& v) { return v.convert_to<double>(); }

inline Dual dual_pow_p(i64 p, const Dual& e) { return pow(static_cast<double>(p), e); }

// Everything the stabilized rho series at one prime needs, computed once per (F, p).
struct BadPrimeSeries {
  std::vector<BigInt> s_values;  // S(p^0..p^m)
  bool stabilized = false;
};

inline BadPrimeSeries bad_prime_series(const QuadraticPolynomial& f, const FormInvariants& inv, i64 p, int depth) {
  const int ell = f.dim;
  const int cap = rho_lifted_max_depth(p);
  int threshold = 2 * valuation(2 * inv.delta, p) + 4;
  if (inv.rroot != 0) threshold += valuation(inv.rroot, p);
  const int wanted = std::min(cap, std::max(depth, threshold));
  HenselCounter counter(f, p);
  BadPrimeSeries out;
  const BigInt scale = boost::multiprecision::pow(BigInt(p), ell - 1);
  const BigInt period = boost::multiprecision::pow(BigInt(p), ell);
  BigInt prev = counter.count(0);
  out.s_values.push_back(1);
  for (int m = 1; m <= cap; ++m) {
    const BigInt cur = counter.count(m);
    out.s_values.push_back(cur - scale * prev);
    prev = cur;
    // S(p^{m+2}) = p^ell S(p^m) holds for all large m; require it on two consecutive levels
    if (m >= wanted && m >= 4) {
      const auto& s = out.s_values;
      if (s[m] == period * s[m - 2] && s[m - 1] == period * s[m - 3]) {
        out.stabilized = true;
        break;
      }
    }
  }
  return out;
}

// 1 + sum_m S(p^m) p^{-ms}, with the period-two geometric tail once stabilized.
inline Dual bad_prime_euler_factor(const BadPrimeSeries& series, i64 p, int ell, const Dual& s, double& tail_bound) {
  const int top = static_cast<int>(series.s_values.size()) - 1;
  Dual sum(1.0);
  for (int m = 1; m <= top; ++m) {
    if (series.s_values[m] == 0) continue;
    sum += Dual(big_to_double(series.s_values[m])) * dual_pow_p(p, -Dual(m) * s);
  }
  tail_bound = 0.0;
  if (top >= 2) {
    const Dual last_pair = Dual(big_to_double(series.s_values[top - 1])) * dual_pow_p(p, -Dual(top - 1) * s) +
                           Dual(big_to_double(series.s_values[top])) * dual_pow_p(p, -Dual(top) * s);
    const Dual y = dual_pow_p(p, Dual(ell) - Dual(2.0) * s);
    const Dual tail = last_pair * y / (Dual(1.0) - y);
    if (series.stabilized) {
      sum += tail;
    } else {
      tail_bound = std::abs(tail.v);
    }
  }
  return sum;
}

}  // namespace detail

namespace detail {

struct FactorDual {
  Dual value;
  LocalFactorValue meta;
};

// The factor at p entering the assembled product, as a dual number in s.
inline FactorDual local_factor_dual(const QuadraticPolynomial& f, const FormInvariants& inv, i64 p, const Dual& s,
                                    const SingularSeriesConfig& cfg) {
  const int ell = f.dim;
  FactorDual out;
  out.meta.prime = p;
  const bool divides_disc = (2 * inv.delta) % p == 0;
  if (divides_disc) {
    const auto series = bad_prime_series(f, inv, p, cfg.bad_prime_depth);
    double tail = 0.0;
    Dual e = bad_prime_euler_factor(series, p, ell, s, tail);
    if (inv.rroot == 0) {
      // divide out the local factor (1 - p^{ell-2s-1}) / (1 - p^{ell-2s}) of zeta(2s-ell)/zeta(2s+1-ell)
      const Dual a = dual_pow_p(p, Dual(ell) - Dual(2.0) * s);
      e = e * (Dual(1.0) - a) / (Dual(1.0) - a / Dual(static_cast<double>(p)));
    }
    out.value = e;
    out.meta.route = FactorRoute::rho_series_bad_prime;
    out.meta.truncation_depth_used = static_cast<int>(series.s_values.size()) - 1;
    out.meta.stabilized = series.stabilized;
    out.meta.tail_bound = tail;
    if (!series.stabilized) {
      std::ostringstream msg;
      msg << "rho series at p=" << p << " not stabilized by depth " << out.meta.truncation_depth_used
          << "; tail estimate " << tail;
      out.meta.warning = msg.str();
    }
  } else if (inv.rroot == 0) {
    out.meta.route = FactorRoute::geometric_R_zero;
    if (ell % 2 == 1) {
      out.value = Dual(1.0);
    } else {
      const int chi = legendre_odd_prime(inv.hdisc, p);
      const Dual x = dual_pow_p(p, Dual(ell / 2.0) - s);
      const double pinv = 1.0 / static_cast<double>(p);
      out.value = Dual(1.0) + Dual(chi * (1.0 - pinv)) * x / (Dual(1.0) - x * x * Dual(pinv));
    }
  } else if (inv.rroot % p != 0) {
    out.meta.route = FactorRoute::closed_form_good_prime;
    out.value = Dual(1.0) + Dual(static_cast<double>(sf_closed_form(f, p, 1, inv))) * dual_pow_p(p, -s);
  } else {
    // p divides R but not 2 Delta: the closed form vanishes beyond t = v_p(R) + 1
    out.meta.route = FactorRoute::lemma_finite_sum;
    const int top = valuation(inv.rroot, p) + 1;
    Dual sum(1.0);
    for (int t = 1; t <= top; ++t) {
      const i128 st = sf_closed_form(f, p, t, inv);
      if (st != 0) sum += Dual(static_cast<double>(st)) * dual_pow_p(p, -Dual(t) * s);
    }
    out.value = sum;
    out.meta.truncation_depth_used = top;
  }
  out.meta.value = out.value.v;
  out.meta.log_derivative = out.value.d / out.value.v;
  return out;
}

inline void check_convergent(int ell, double s) {
  if (!(s >= ell - 0.5)) {
    std::ostringstream msg;
    msg << "L(s, F) is only evaluated for s >= ell - 1/2 (here ell = " << ell << ", s = " << s << ")";
    throw std::domain_error(msg.str());
  }
}

}  // namespace detail

inline LocalFactorValue local_factor(const QuadraticPolynomial& f, i64 p, double s, const SingularSeriesConfig& cfg = {}) {
  if (!is_prime(p)) throw std::invalid_argument("local_factor: " + std::to_string(p) + " is not prime");
  detail::check_convergent(f.dim, s);
  return detail::local_factor_dual(f, invariants(f), p, Dual::variable(s), cfg).meta;
}

/// L(s, F) and d/ds log L(s, F) from the Euler product, truncated at cfg.prime_bound.
inline SeriesEvaluation evaluate_series(const QuadraticPolynomial& f, double s_real, const SingularSeriesConfig& cfg = {}) {
  cfg.validate();
  const int ell = f.dim;
  detail::check_convergent(ell, s_real);
  const FormInvariants inv = invariants(f);
  const Dual s = Dual::variable(s_real);
  SeriesEvaluation ev;
  ev.s = s_real;
  ev.branch = branch_of(inv);
  ev.prime_bound = cfg.prime_bound;

  // primes handled individually: p | 2 Delta, and p | R when R != 0
  std::vector<i64> special = prime_divisors(2 * inv.delta);
  if (inv.rroot != 0)
    for (i64 p : prime_divisors(inv.rroot))
      if (std::find(special.begin(), special.end(), p) == special.end()) special.push_back(p);
  std::sort(special.begin(), special.end());

  Dual log_l(0.0);
  for (i64 p : special) {
    const auto fd = detail::local_factor_dual(f, inv, p, s, cfg);
    if (!(fd.value.v > 0)) {
      throw std::domain_error("local factor at p=" + std::to_string(p) + " is not positive: " + std::to_string(fd.value.v));
    }
    log_l += log(fd.value);
    if (!fd.meta.warning.empty()) ev.warnings.push_back(fd.meta.warning);
    ev.special_factors.push_back(fd.meta);
  }

  if (ev.branch == Branch::r_zero) log_l += log(zeta(Dual(2.0) * s - Dual(ell))) - log(zeta(Dual(2.0) * s + Dual(1.0 - ell)));

  // generic product over good primes: g_p = 1 + eps chi(p) p^{-sigma} + O(p^{-sigma-1})
  const bool has_product = !(ev.branch == Branch::r_zero && ell % 2 == 1);
  if (has_product) {
    const i128 symbol = ell % 2 == 1 ? inv.oroot : inv.hdisc;
    double eps = 1.0;
    Dual sigma;
    double decay;  // residual exponent after acceleration
    if (ev.branch == Branch::r_nonzero) {
      eps = ell % 2 == 1 ? 1.0 : -1.0;
      sigma = s - Dual(ell % 2 == 1 ? (ell - 1) / 2.0 : (ell - 2) / 2.0);
      decay = 2 * sigma.v;
    } else {
      sigma = s - Dual(ell / 2.0);
      decay = sigma.v + 1;
    }
    ev.accelerated = detail::is_positive_square(symbol);
    const auto primes = prime_sieve(cfg.prime_bound);
    for (i64 p : primes) {
      if (std::binary_search(special.begin(), special.end(), p)) continue;
      Dual g = detail::local_factor_dual(f, inv, p, s, cfg).value;
      if (ev.accelerated) g = g * (Dual(1.0) - Dual(eps) * detail::dual_pow_p(p, -sigma));
      log_l += log(g);
    }
    if (ev.accelerated) {
      // multiply back prod_p (1 - eps p^{-sigma})^{-1}, minus the special primes it should not contain
      const Dual z = eps > 0 ? zeta(sigma) : zeta(Dual(2.0) * sigma) / zeta(sigma);
      log_l += log(z);
      for (i64 p : special) log_l += log(Dual(1.0) - Dual(eps) * detail::dual_pow_p(p, -sigma));
    } else {
      decay = sigma.v;
    }
    const double pb = static_cast<double>(cfg.prime_bound);
    ev.tail_bound = std::pow(pb, 1.0 - decay) / ((decay - 1.0) * std::log(pb));
  }

  const Dual l = exp(log_l);
  ev.value = l.v;
  ev.log_derivative = log_l.d;
  return ev;
}

inline double l_value(const QuadraticPolynomial& f, double s, const SingularSeriesConfig& cfg = {}) {
  return evaluate_series(f, s, cfg).value;
}

inline double l_log_derivative(const QuadraticPolynomial& f, double s, const SingularSeriesConfig& cfg = {}) {
  return evaluate_series(f, s, cfg).log_derivative;
}

/// sum_{q <= q_max} S_F(q) q^{-s}, with S_F(p^e) from sf_exact and multiplicativity.
inline double l_dirichlet_partial(const QuadraticPolynomial& f, double s, i64 q_max,
                                  i64 budget = kDefaultEnumerationBudget) {
  if (q_max < 1) throw std::invalid_argument("l_dirichlet_partial: q_max must be positive");
  std::map<i64, i128> cache;
  long double total = 0;
  for (i64 q = 1; q <= q_max; ++q) {
    long double sq = 1;
    for (auto [p, e] : factorize(q).factors) {
      const i64 pe = ipow(p, e);
      auto it = cache.find(pe);
      if (it == cache.end()) it = cache.emplace(pe, sf_exact(f, pe, budget)).first;
      sq *= static_cast<long double>(it->second);
      if (sq == 0) break;
    }
    if (sq != 0) total += sq * std::pow(static_cast<long double>(q), -static_cast<long double>(s));
  }
  return static_cast<double>(total);
}

enum class IflMode { at_x, limit };

inline std::string to_string(IflMode m) { return m == IflMode::at_x ? "at-x" : "limit"; }

inline IflMode parse_ifl_mode(const std::string& s) {
  if (s == "at-x") return IflMode::at_x;
  if (s == "limit") return IflMode::limit;
  throw std::invalid_argument("unknown I_FL mode '" + s + "' (expected at-x or limit)");
}

namespace detail {

// Gauss-Legendre nodes and weights on [-1, 1] by Newton iteration on P_n.
inline void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
  x.assign(n, 0.0);
  w.assign(n, 0.0);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1, p1 = z;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2 * k - 1) * z * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      if (n == 1) p0 = 1;
      dp = n * (z * p1 - p0) / (z * z - 1);
      const double dz = p1 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    x[i] = -z;
    x[n - 1 - i] = z;
    w[i] = w[n - 1 - i] = 2 / ((1 - z * z) * dp * dp);
  }
}

// Nodes on (0, 1], geometrically graded toward 0: [0, r^K], [r^K, r^{K-1}], ..., [r, 1].
inline void graded_nodes(int order, int levels, double ratio, std::vector<double>& nodes, std::vector<double>& weights) {
  std::vector<double> gx, gw;
  gauss_legendre(order, gx, gw);
  nodes.clear();
  weights.clear();
  double hi = 1.0;
  for (int level = 0; level <= levels; ++level) {
    const double lo = level == levels ? 0.0 : hi * ratio;
    const double mid = 0.5 * (lo + hi), half = 0.5 * (hi - lo);
    for (int i = 0; i < order; ++i) {
      nodes.push_back(mid + half * gx[i]);
      weights.push_back(half * gw[i]);
    }
    hi = lo;
  }
}

// J(r) = int_0^1 log|t - r| dt for real r.
inline double log_abs_integral(double r) {
  if (std::abs(r) > 2) {
    // log|r| + int_0^1 log|1 - t/r| dt, evaluated through log1p
    const double w = 1 / r;
    return std::log(std::abs(r)) - (1 - w) * std::log1p(-w) / w - 1;
  }
  auto xlogx = [](double v) { return v == 0 ? 0.0 : v * std::log(std::abs(v)); };
  return xlogx(1 - r) + xlogx(r) - 1;
}

// int_0^1 log(a t^2 + b t + c) dt, for a quadratic positive on (0, 1].
inline double log_quadratic_integral(double a, double b, double c) {
  if (a == 0) {
    if (b == 0) return std::log(c);
    return std::log(std::abs(b)) + log_abs_integral(-c / b);
  }
  const double disc = b * b - 4 * a * c;
  if (disc >= 0) {
    const double sq = std::sqrt(disc);
    const double q = -0.5 * (b + (b >= 0 ? sq : -sq));
    const double r1 = q / a;
    const double r2 = q != 0 ? c / q : r1;
    return std::log(std::abs(a)) + log_abs_integral(r1) + log_abs_integral(r2);
  }
  // conjugate pair: 2 Re int_0^1 log(t - r) dt; t - r never crosses the branch cut
  const std::complex<double> r(-b / (2 * a), std::sqrt(-disc) / (2 * std::abs(a)));
  const std::complex<double> one_minus = 1.0 - r;
  const std::complex<double> j = one_minus * std::log(one_minus) + r * std::log(-r) - 1.0;
  return std::log(std::abs(a)) + 2 * j.real();
}

}  // namespace detail

/// I_FL: the integral of log F(t, X) over [0, 1]^ell with F(t, X) = t^t Q t + b.t / X + c / X^2.
/// The last coordinate is integrated in closed form, the rest by graded tensor Gauss-Legendre.
inline double ifl_integral(const QuadraticPolynomial& f, double x_scale, IflMode mode, const SingularSeriesConfig& cfg = {}) {
  cfg.validate();
  const int ell = f.dim;
  const int last = ell - 1;
  const double lin_scale = mode == IflMode::limit ? 0.0 : 1.0 / x_scale;
  const double const_scale = lin_scale * lin_scale;
  if (mode == IflMode::at_x && !(x_scale > 0)) throw std::invalid_argument("ifl_integral: X must be positive");

  std::vector<double> nodes, weights;
  detail::graded_nodes(cfg.quadrature_order, cfg.quadrature_order, 0.25, nodes, weights);
  const int n = static_cast<int>(nodes.size());

  const double a = static_cast<double>(f.q(last, last));
  std::vector<int> idx(last, 0);
  std::vector<double> t(last);
  long double total = 0;
  while (true) {
    double w = 1.0;
    for (int i = 0; i < last; ++i) {
      t[i] = nodes[idx[i]];
      w *= weights[idx[i]];
    }
    // F as a quadratic in the last coordinate: a u^2 + b u + c
    double b = f.b(last) * lin_scale, c = f.c_const * const_scale;
    for (int i = 0; i < last; ++i) {
      b += f.monomial(i, last) * t[i];
      double row = f.b(i) * lin_scale;
      for (int j = i; j < last; ++j) row += f.monomial(i, j) * t[j];
      c += row * t[i];
    }
    const double at_one = a + b + c;
    const double u_vertex = a != 0 ? -b / (2 * a) : -1.0;
    const double at_vertex = (a > 0 && u_vertex > 0 && u_vertex < 1) ? c - b * b / (4 * a) : at_one;
    if (!(at_one > 0) || !(at_vertex > 0) || c < 0) {
      std::ostringstream msg;
      msg << "F(t, X) is not positive on the segment through t = (";
      for (int i = 0; i < last; ++i) msg << t[i] << ", ";
      msg << "u), u in (0, 1]";
      throw std::domain_error(msg.str());
    }
    total += w * detail::log_quadratic_integral(a, b, c);
    int k = 0;
    while (k < last && ++idx[k] == n) idx[k++] = 0;
    if (k == last) break;
  }
  return static_cast<double>(total);
}

struct AsymptoticConstants {
  double l_value = 0.0;
  double l_log_deriv = 0.0;
  double ifl = 0.0;
  double gamma = 0.0;
  double c_main = 0.0;
  double c_secondary = 0.0;

  // provenance
  int dim = 0;
  Branch branch = Branch::r_zero;
  IflMode ifl_mode = IflMode::limit;
  double ifl_x = 0.0;
  SingularSeriesConfig config;
  SeriesEvaluation series;
};

inline AsymptoticConstants assemble_constants(const SeriesEvaluation& ev, double ifl, int dim) {
  AsymptoticConstants k;
  k.dim = dim;
  k.branch = ev.branch;
  k.series = ev;
  k.l_value = ev.value;
  k.l_log_deriv = ev.log_derivative;
  k.ifl = ifl;
  k.gamma = euler_gamma();
  k.c_main = 2 * k.l_value;
  k.c_secondary = (k.gamma + 0.5 * k.ifl + k.l_log_deriv) * k.c_main;
  return k;
}

inline AsymptoticConstants asymptotic_constants(const QuadraticPolynomial& f, double x_scale, IflMode mode,
                                                const SingularSeriesConfig& cfg = {}) {
  if (!positivity_check(f)) throw std::domain_error("F is not positive on the orthant x >= 1");
  const auto ev = evaluate_series(f, f.dim, cfg);
  auto k = assemble_constants(ev, ifl_integral(f, x_scale, mode, cfg), f.dim);
  k.ifl_mode = mode;
  k.ifl_x = mode == IflMode::at_x ? x_scale : 0.0;
  k.config = cfg;
  return k;
}

inline nlohmann::ordered_json to_json(const LocalFactorValue& v) {
  nlohmann::ordered_json j;
  j["prime"] = v.prime;
  j["value"] = v.value;
  j["log_derivative"] = v.log_derivative;
  j["route"] = to_string(v.route);
  j["truncation_depth_used"] = v.truncation_depth_used;
  j["stabilized"] = v.stabilized;
  j["tail_bound"] = v.tail_bound;
  return j;
}

inline nlohmann::ordered_json to_json(const AsymptoticConstants& k) {
  nlohmann::ordered_json j;
  j["dim"] = k.dim;
  j["branch"] = to_string(k.branch);
  j["l_value"] = k.l_value;
  j["l_log_deriv"] = k.l_log_deriv;
  j["ifl"] = k.ifl;
  j["ifl_mode"] = to_string(k.ifl_mode);
  if (k.ifl_mode == IflMode::at_x) j["ifl_x"] = k.ifl_x;
  j["gamma"] = k.gamma;
  j["c_main"] = k.c_main;
  j["c_secondary"] = k.c_secondary;
  nlohmann::ordered_json t;
  t["prime_bound"] = k.config.prime_bound;
  t["bad_prime_depth"] = k.config.bad_prime_depth;
  t["quadrature_order"] = k.config.quadrature_order;
  t["accelerated"] = k.series.accelerated;
  t["tail_bound"] = k.series.tail_bound;
  t["special_primes"] = nlohmann::ordered_json::array();
  for (const auto& v : k.series.special_factors) t["special_primes"].push_back(to_json(v));
  t["warnings"] = k.series.warnings;
  j["truncation"] = t;
  return j;
}

}  // namespace divsum
