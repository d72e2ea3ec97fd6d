#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <future>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "divsum/arith.hpp"
#include "divsum/forms.hpp"
#include "divsum/int128.hpp"
#include "divsum/lseries.hpp"

namespace divsum {

struct BoxSumOptions {
  // sieve entries allowed without opt-in; DIVSUM_MEMORY_BUDGET overrides when set
  i64 sieve_budget = kDefaultSieveBudget;
  bool allow_large_sieve = false;
  int threads = 0;  // 0: hardware concurrency
};

inline i64 effective_sieve_budget(const BoxSumOptions& opt) {
  if (opt.allow_large_sieve) return std::numeric_limits<i64>::max();
  if (const char* env = std::getenv("DIVSUM_MEMORY_BUDGET"); env && *env) {
    char* end = nullptr;
    const long long v = std::strtoll(env, &end, 10);
    if (*end != '\0' || v <= 0) throw std::invalid_argument(std::string("DIVSUM_MEMORY_BUDGET is not a positive integer: ") + env);
    return v;
  }
  return opt.sieve_budget;
}

namespace detail {

// Calls visit(x) for every x in [1, X]^ell whose first coordinate lies in [lo, hi].
template <class Visit>
void for_each_box_point(int ell, i64 x_max, i64 lo, i64 hi, Visit&& visit) {
  std::vector<i64> x(ell, 1);
  x[0] = lo;
  if (lo > hi) return;
  while (true) {
    visit(x);
    int k = ell - 1;
    while (k > 0 && x[k] == x_max) x[k--] = 1;
    if (k == 0) {
      if (x[0] == hi) return;
      ++x[0];
    } else {
      ++x[k];
    }
  }
}

// F(x) for x with the last coordinate running 1..X: F = a u^2 + b u + c along the line.
struct LineCoefficients {
  i128 a = 0, b = 0, c = 0;
};

inline LineCoefficients line_through(const QuadraticPolynomial& f, const std::vector<i64>& head) {
  const int last = f.dim - 1;
  LineCoefficients lc;
  lc.a = f.q(last, last);
  lc.b = f.b(last);
  lc.c = f.c_const;
  for (int i = 0; i < last; ++i) {
    lc.b = checked::add(lc.b, checked::mul(f.monomial(i, last), head[i]));
    lc.c = checked::add(lc.c, checked::mul(f.b(i), head[i]));
    for (int j = i; j < last; ++j)
      lc.c = checked::add(lc.c, checked::mul(checked::mul(f.monomial(i, j), head[i]), head[j]));
  }
  return lc;
}

// Visits F along every line of the box with first coordinate in [lo, hi].
template <class Visit>
void for_each_box_value(const QuadraticPolynomial& f, i64 x_max, i64 lo, i64 hi, Visit&& visit) {
  if (f.dim == 1) throw std::invalid_argument("box enumeration needs ell >= 2");
  std::vector<i64> head(f.dim - 1);
  for_each_box_point(f.dim - 1, x_max, lo, hi, [&](const std::vector<i64>& h) {
    head = h;
    const auto lc = line_through(f, head);
    for (i64 u = 1; u <= x_max; ++u) visit(lc.a * u * u + lc.b * u + lc.c, head, u);
  });
}

inline std::string point_to_string(const std::vector<i64>& head, i64 u) {
  std::ostringstream os;
  os << "(";
  for (i64 v : head) os << v << ", ";
  os << u << ")";
  return os.str();
}

}  // namespace detail

/// Exact sum of tau(F(x)) over x in [1, X]^ell.
/// One pass finds the exact box maximum (and rejects nonpositive values), one sieve covers it,
/// then the box is summed in blocks of the first coordinate.
inline i128 divisor_sum_over_box(const QuadraticPolynomial& f, i64 x_max, const BoxSumOptions& opt = {}) {
  if (x_max < 1) throw std::invalid_argument("divisor_sum_over_box: X must be at least 1");
  // the cube of the box side keeps per-point arithmetic well inside i128
  if (x_max > 1'000'000) throw std::invalid_argument("divisor_sum_over_box: X too large for box enumeration");

  i128 top = 0;
  detail::for_each_box_value(f, x_max, 1, x_max, [&](i128 v, const std::vector<i64>& head, i64 u) {
    if (v <= 0) {
      throw std::domain_error("F(x) = " + to_string(v) + " is not positive at x = " + detail::point_to_string(head, u));
    }
    if (v > top) top = v;
  });

  const i64 budget = effective_sieve_budget(opt);
  if (top > budget) {
    throw BudgetExceeded("box maximum of F is " + to_string(top) + ", above the sieve budget of " + std::to_string(budget) +
                         " entries; lower X, raise DIVSUM_MEMORY_BUDGET, or opt in to a large sieve");
  }
  const auto tau = tau_sieve(static_cast<i64>(top), std::numeric_limits<i64>::max());

  const int threads = std::max<int>(1, opt.threads > 0 ? opt.threads : static_cast<int>(std::thread::hardware_concurrency()));
  const i64 blocks = std::min<i64>(x_max, threads);
  auto block_sum = [&](i64 lo, i64 hi) {
    i128 s = 0;
    detail::for_each_box_value(f, x_max, lo, hi, [&](i128 v, const std::vector<i64>&, i64) { s += tau[static_cast<std::size_t>(v)]; });
    return s;
  };
  std::vector<std::future<i128>> parts;
  for (i64 b = 0; b < blocks; ++b) {
    const i64 lo = 1 + b * x_max / blocks, hi = (b + 1) * x_max / blocks;
    parts.push_back(std::async(blocks == 1 ? std::launch::deferred : std::launch::async, block_sum, lo, hi));
  }
  i128 total = 0;
  for (auto& p : parts) total += p.get();  // fixed block order
  return total;
}

struct VerificationReport {
  int dim = 0;
  std::vector<i64> x_values;
  std::vector<i128> empirical_sums;
  std::vector<double> main_term;
  std::vector<double> two_term;
  std::vector<double> ratios;  // empirical / two_term
  std::vector<double> abs_err_main;
  std::vector<double> abs_err_two;
  std::vector<double> ifl_used;  // I_FL entering the two-term prediction at each X
  std::optional<double> fitted_error_exponent;
  std::optional<i64> x0;  // smallest tested X from which the two-term prediction always wins
  double c_main = 0.0;
  double c_secondary = 0.0;
};

namespace detail {

inline void check_x_list(const std::vector<i64>& xs) {
  if (xs.size() < 3) throw std::invalid_argument("x_list needs at least 3 values for the error-exponent fit");
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (xs[i] < 2) throw std::invalid_argument("x_list values must be at least 2");
    if (i > 0 && xs[i] <= xs[i - 1]) throw std::invalid_argument("x_list must be strictly ascending");
  }
}

// least-squares slope of log|err| against log X over the nonzero errors
inline std::optional<double> fit_exponent(const std::vector<i64>& xs, const std::vector<double>& err) {
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (err[i] == 0) continue;
    lx.push_back(std::log(static_cast<double>(xs[i])));
    ly.push_back(std::log(err[i]));
  }
  if (lx.size() < 2) return std::nullopt;
  const double n = static_cast<double>(lx.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sx += lx[i];
    sy += ly[i];
    sxx += lx[i] * lx[i];
    sxy += lx[i] * ly[i];
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace detail

/// Compares the box sums against C_m X^ell log X and C_m X^ell log X + C_s X^ell.
/// ifl_at(X) supplies I_FL per X; constants carries L, L'/L and the default I_FL.
template <class IflAt>
VerificationReport verify_with(const QuadraticPolynomial& f, const std::vector<i64>& x_list, const AsymptoticConstants& k,
                               IflAt&& ifl_at, const BoxSumOptions& opt = {}) {
  detail::check_x_list(x_list);
  VerificationReport r;
  r.dim = f.dim;
  r.x_values = x_list;
  r.c_main = k.c_main;
  r.c_secondary = k.c_secondary;
  for (i64 x : x_list) {
    const i128 emp = divisor_sum_over_box(f, x, opt);
    if (!r.empirical_sums.empty() && emp <= r.empirical_sums.back()) throw std::logic_error("box sums are not increasing in X");
    const double ifl = ifl_at(x);
    const double cs = (k.gamma + 0.5 * ifl + k.l_log_deriv) * k.c_main;
    const double xl = std::pow(static_cast<double>(x), f.dim);
    const double main = k.c_main * xl * std::log(static_cast<double>(x));
    const double two = main + cs * xl;
    const double e = static_cast<double>(emp);
    r.empirical_sums.push_back(emp);
    r.ifl_used.push_back(ifl);
    r.main_term.push_back(main);
    r.two_term.push_back(two);
    r.ratios.push_back(e / two);
    r.abs_err_main.push_back(std::abs(e - main));
    r.abs_err_two.push_back(std::abs(e - two));
  }
  r.fitted_error_exponent = detail::fit_exponent(r.x_values, r.abs_err_two);
  for (std::size_t i = r.x_values.size(); i-- > 0;) {
    if (!(r.abs_err_two[i] < r.abs_err_main[i])) break;
    r.x0 = r.x_values[i];
  }
  return r;
}

/// Uses the I_FL stored in the constants for every X.
inline VerificationReport verify(const QuadraticPolynomial& f, const std::vector<i64>& x_list, const AsymptoticConstants& k,
                                 const BoxSumOptions& opt = {}) {
  return verify_with(f, x_list, k, [&](i64) { return k.ifl; }, opt);
}

/// Full pipeline: constants from cfg; in at-x mode I_FL is recomputed at every X of the list.
inline VerificationReport verify_pipeline(const QuadraticPolynomial& f, const std::vector<i64>& x_list, IflMode mode,
                                          const SingularSeriesConfig& cfg = {}, const BoxSumOptions& opt = {}) {
  detail::check_x_list(x_list);
  const auto k = asymptotic_constants(f, static_cast<double>(x_list.back()), mode, cfg);
  if (mode == IflMode::limit) return verify(f, x_list, k, opt);
  return verify_with(f, x_list, k, [&](i64 x) { return ifl_integral(f, static_cast<double>(x), IflMode::at_x, cfg); }, opt);
}

namespace detail {

inline std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace detail

inline const std::vector<std::string>& verify_csv_columns() {
  static const std::vector<std::string> cols = {"X", "empirical", "main_term", "two_term", "ratio", "abs_err_main", "abs_err_two"};
  return cols;
}

inline std::string to_csv(const VerificationReport& r) {
  std::ostringstream os;
  const auto& cols = verify_csv_columns();
  for (std::size_t i = 0; i < cols.size(); ++i) os << (i ? "," : "") << cols[i];
  os << "\n";
  for (std::size_t i = 0; i < r.x_values.size(); ++i) {
    os << r.x_values[i] << "," << to_string(r.empirical_sums[i]) << "," << detail::fmt_double(r.main_term[i]) << ","
       << detail::fmt_double(r.two_term[i]) << "," << detail::fmt_double(r.ratios[i]) << ","
       << detail::fmt_double(r.abs_err_main[i]) << "," << detail::fmt_double(r.abs_err_two[i]) << "\n";
  }
  return os.str();
}

inline nlohmann::ordered_json to_json(const VerificationReport& r) {
  nlohmann::ordered_json j;
  j["dim"] = r.dim;
  j["c_main"] = r.c_main;
  j["c_secondary"] = r.c_secondary;
  j["x_values"] = r.x_values;
  auto sums = nlohmann::ordered_json::array();
  for (i128 v : r.empirical_sums) {
    if (v <= std::numeric_limits<i64>::max()) {
      sums.push_back(static_cast<i64>(v));
    } else {
      sums.push_back(to_string(v));
    }
  }
  j["empirical_sums"] = sums;
  j["main_term"] = r.main_term;
  j["two_term"] = r.two_term;
  j["ratios"] = r.ratios;
  j["abs_err_main"] = r.abs_err_main;
  j["abs_err_two"] = r.abs_err_two;
  j["ifl_used"] = r.ifl_used;
  j["fitted_error_exponent"] = r.fitted_error_exponent ? nlohmann::ordered_json(*r.fitted_error_exponent) : nullptr;
  j["x0"] = r.x0 ? nlohmann::ordered_json(*r.x0) : nullptr;
  return j;
}

}  // namespace divsum
