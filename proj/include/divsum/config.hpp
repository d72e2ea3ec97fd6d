#pragma once

#include <algorithm>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <yaml-cpp/yaml.h>

#include "divsum/empirical.hpp"
#include "divsum/forms.hpp"
#include "divsum/lseries.hpp"

namespace divsum {

/// Parse or validation failure, located in the source document (1-based line and column; 0 when unknown).
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& source, int line, int column, const std::string& message)
      : std::runtime_error(format(source, line, column, message)), line_(line), column_(column) {}
  int line() const { return line_; }
  int column() const { return column_; }

 private:
  static std::string format(const std::string& source, int line, int column, const std::string& message) {
    std::ostringstream os;
    os << source;
    if (line > 0) os << ":" << line << ":" << column;
    os << ": " << message;
    return os.str();
  }
  int line_;
  int column_;
};

/// One run of the command-line tool. Everything except the form has a default.
struct RunConfig {
  std::string name;
  QuadraticPolynomial form;
  SingularSeriesConfig series;
  IflMode ifl_mode = IflMode::limit;
  std::optional<double> ifl_x;  // `constants` in at-x mode; defaults to the largest x_list entry
  std::vector<i64> x_list;
  bool allow_large_sieve = false;
  double max_ratio_error = 0.05;  // verify passes when |empirical/two_term - 1| at the largest X is below this
  std::string out_dir;             // empty: no files written
  std::string format = "table";

  bool operator==(const RunConfig& o) const {
    return name == o.name && form == o.form && series.prime_bound == o.series.prime_bound &&
           series.bad_prime_depth == o.series.bad_prime_depth && series.quadrature_order == o.series.quadrature_order &&
           series.target_rel_tol == o.series.target_rel_tol && ifl_mode == o.ifl_mode && ifl_x == o.ifl_x &&
           x_list == o.x_list && allow_large_sieve == o.allow_large_sieve && max_ratio_error == o.max_ratio_error &&
           out_dir == o.out_dir && format == o.format;
  }
};

inline const std::vector<std::string>& output_formats() {
  static const std::vector<std::string> f = {"table", "json", "csv"};
  return f;
}

namespace detail {

class ConfigReader {
 public:
  explicit ConfigReader(std::string source) : source_(std::move(source)) {}

  [[noreturn]] void fail(const YAML::Node& at, const std::string& msg) const {
    const auto m = at.Mark();
    if (m.is_null()) throw ConfigError(source_, 0, 0, msg);
    throw ConfigError(source_, m.line + 1, m.column + 1, msg);
  }

  void only_keys(const YAML::Node& map, const std::string& where, const std::set<std::string>& allowed) const {
    if (!map.IsMap()) fail(map, where + " must be a mapping");
    for (const auto& kv : map) {
      const auto key = kv.first.as<std::string>();
      if (!allowed.count(key)) {
        std::string list;
        for (const auto& a : allowed) list += (list.empty() ? "" : ", ") + a;
        fail(kv.first, "unknown key '" + key + "' in " + where + " (allowed: " + list + ")");
      }
    }
  }

  template <class T>
  T scalar(const YAML::Node& n, const std::string& what, const char* type) const {
    if (!n.IsScalar()) fail(n, what + " must be " + type);
    try {
      return n.as<T>();
    } catch (const YAML::Exception&) {
      fail(n, what + " must be " + type + ", got '" + n.Scalar() + "'");
    }
  }

  i64 integer(const YAML::Node& n, const std::string& what) const { return scalar<i64>(n, what, "an integer"); }
  double real(const YAML::Node& n, const std::string& what) const { return scalar<double>(n, what, "a number"); }
  bool boolean(const YAML::Node& n, const std::string& what) const { return scalar<bool>(n, what, "true or false"); }
  std::string text(const YAML::Node& n, const std::string& what) const { return scalar<std::string>(n, what, "a string"); }

  std::vector<i64> int_list(const YAML::Node& n, const std::string& what) const {
    if (!n.IsSequence()) fail(n, what + " must be a list of integers");
    std::vector<i64> out;
    for (std::size_t i = 0; i < n.size(); ++i) out.push_back(integer(n[i], what + "[" + std::to_string(i) + "]"));
    return out;
  }

  RunConfig read(const YAML::Node& root) const {
    if (!root.IsDefined() || root.IsNull()) throw ConfigError(source_, 0, 0, "empty configuration");
    only_keys(root, "the top level", {"name", "form", "series", "ifl", "verify", "output"});
    RunConfig cfg;
    if (root["name"]) cfg.name = text(root["name"], "name");

    const YAML::Node form = root["form"];
    if (!form) fail(root, "missing required key 'form'");
    only_keys(form, "form", {"dim", "q", "b", "c"});
    for (const char* k : {"dim", "q", "b", "c"})
      if (!form[k]) fail(form, std::string("form is missing '") + k + "'");
    const i64 dim = integer(form["dim"], "form.dim");
    if (dim < 3 || dim > 8) fail(form["dim"], "form.dim must be between 3 and 8, got " + std::to_string(dim));
    const YAML::Node q = form["q"];
    if (!q.IsSequence() || q.size() != static_cast<std::size_t>(dim))
      fail(q, "form.q must be a list of " + std::to_string(dim) + " rows");
    std::vector<i64> qm;
    for (std::size_t i = 0; i < q.size(); ++i) {
      const auto row = int_list(q[i], "form.q[" + std::to_string(i) + "]");
      if (row.size() != static_cast<std::size_t>(dim))
        fail(q[i], "form.q[" + std::to_string(i) + "] must have " + std::to_string(dim) + " entries");
      qm.insert(qm.end(), row.begin(), row.end());
    }
    const auto b = int_list(form["b"], "form.b");
    if (b.size() != static_cast<std::size_t>(dim)) fail(form["b"], "form.b must have " + std::to_string(dim) + " entries");
    cfg.form = QuadraticPolynomial(static_cast<int>(dim), qm, b, integer(form["c"], "form.c"));

    if (const auto s = root["series"]) {
      only_keys(s, "series", {"prime_bound", "bad_prime_depth", "quadrature_order", "target_rel_tol"});
      if (s["prime_bound"]) cfg.series.prime_bound = integer(s["prime_bound"], "series.prime_bound");
      if (s["bad_prime_depth"]) cfg.series.bad_prime_depth = static_cast<int>(integer(s["bad_prime_depth"], "series.bad_prime_depth"));
      if (s["quadrature_order"]) cfg.series.quadrature_order = static_cast<int>(integer(s["quadrature_order"], "series.quadrature_order"));
      if (s["target_rel_tol"]) cfg.series.target_rel_tol = real(s["target_rel_tol"], "series.target_rel_tol");
      try {
        cfg.series.validate();
      } catch (const std::invalid_argument& e) {
        fail(s, std::string("series: ") + e.what());
      }
    }

    if (const auto i = root["ifl"]) {
      only_keys(i, "ifl", {"mode", "x"});
      if (i["mode"]) {
        try {
          cfg.ifl_mode = parse_ifl_mode(text(i["mode"], "ifl.mode"));
        } catch (const std::invalid_argument& e) {
          fail(i["mode"], e.what());
        }
      }
      if (i["x"]) {
        cfg.ifl_x = real(i["x"], "ifl.x");
        if (!(*cfg.ifl_x > 0)) fail(i["x"], "ifl.x must be positive");
      }
    }

    if (const auto v = root["verify"]) {
      only_keys(v, "verify", {"x_list", "allow_large_sieve", "max_ratio_error"});
      if (v["x_list"]) {
        cfg.x_list = int_list(v["x_list"], "verify.x_list");
        for (std::size_t k = 0; k < cfg.x_list.size(); ++k) {
          if (cfg.x_list[k] < 2) fail(v["x_list"][k], "verify.x_list entries must be at least 2");
          if (k > 0 && cfg.x_list[k] <= cfg.x_list[k - 1]) fail(v["x_list"][k], "verify.x_list must be strictly ascending");
        }
      }
      if (v["allow_large_sieve"]) cfg.allow_large_sieve = boolean(v["allow_large_sieve"], "verify.allow_large_sieve");
      if (v["max_ratio_error"]) {
        cfg.max_ratio_error = real(v["max_ratio_error"], "verify.max_ratio_error");
        if (!(cfg.max_ratio_error > 0)) fail(v["max_ratio_error"], "verify.max_ratio_error must be positive");
      }
    }

    if (const auto o = root["output"]) {
      only_keys(o, "output", {"dir", "format"});
      if (o["dir"]) cfg.out_dir = text(o["dir"], "output.dir");
      if (o["format"]) {
        cfg.format = text(o["format"], "output.format");
        const auto& f = output_formats();
        if (std::find(f.begin(), f.end(), cfg.format) == f.end())
          fail(o["format"], "output.format must be table, json or csv, got '" + cfg.format + "'");
      }
    }
    return cfg;
  }

 private:
  std::string source_;
};

}  // namespace detail

inline RunConfig parse_run_config(const std::string& text, const std::string& source = "<config>") {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ConfigError(source, e.mark.line + 1, e.mark.column + 1, e.msg);
  }
  return detail::ConfigReader(source).read(root);
}

inline RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path, 0, 0, "cannot open configuration file");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_run_config(ss.str(), path);
}

/// Emits every field, defaults included; parse_run_config(to_yaml(c)) == c.
inline std::string to_yaml(const RunConfig& c) {
  YAML::Emitter out;
  out.SetDoublePrecision(17);
  out << YAML::BeginMap;
  if (!c.name.empty()) out << YAML::Key << "name" << YAML::Value << c.name;
  out << YAML::Key << "form" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "dim" << YAML::Value << c.form.dim;
  out << YAML::Key << "q" << YAML::Value << YAML::BeginSeq;
  for (int i = 0; i < c.form.dim; ++i) {
    out << YAML::Flow << YAML::BeginSeq;
    for (int j = 0; j < c.form.dim; ++j) out << c.form.q(i, j);
    out << YAML::EndSeq;
  }
  out << YAML::EndSeq;
  out << YAML::Key << "b" << YAML::Value << YAML::Flow << c.form.b_vector;
  out << YAML::Key << "c" << YAML::Value << c.form.c_const;
  out << YAML::EndMap;

  out << YAML::Key << "series" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "prime_bound" << YAML::Value << c.series.prime_bound;
  out << YAML::Key << "bad_prime_depth" << YAML::Value << c.series.bad_prime_depth;
  out << YAML::Key << "quadrature_order" << YAML::Value << c.series.quadrature_order;
  out << YAML::Key << "target_rel_tol" << YAML::Value << c.series.target_rel_tol;
  out << YAML::EndMap;

  out << YAML::Key << "ifl" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "mode" << YAML::Value << to_string(c.ifl_mode);
  if (c.ifl_x) out << YAML::Key << "x" << YAML::Value << *c.ifl_x;
  out << YAML::EndMap;

  out << YAML::Key << "verify" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "x_list" << YAML::Value << YAML::Flow << c.x_list;
  out << YAML::Key << "allow_large_sieve" << YAML::Value << c.allow_large_sieve;
  out << YAML::Key << "max_ratio_error" << YAML::Value << c.max_ratio_error;
  out << YAML::EndMap;

  out << YAML::Key << "output" << YAML::Value << YAML::BeginMap;
  if (!c.out_dir.empty()) out << YAML::Key << "dir" << YAML::Value << c.out_dir;
  out << YAML::Key << "format" << YAML::Value << c.format;
  out << YAML::EndMap;
  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

}  // namespace divsum
