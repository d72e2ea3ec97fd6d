#include <catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>
#include <sys/wait.h>

#include "divsum/config.hpp"

using namespace divsum;
namespace fs = std::filesystem;

namespace {

const char* kMinimal = R"(form:
  dim: 3
  q: [[1, 0, 0], [0, 1, 0], [0, 0, 1]]
  b: [0, 0, 0]
  c: 1
)";

// line and column of the error raised by an invalid document
std::pair<int, int> error_position(const std::string& text) {
  try {
    parse_run_config(text, "test.yaml");
  } catch (const ConfigError& e) {
    return {e.line(), e.column()};
  }
  FAIL("document was accepted: " << text);
  return {0, 0};
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("divsum_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

int run_cli(const std::string& args, const std::string& env = "") {
  const std::string cmd = env + (env.empty() ? "" : " ") + std::string(DIVSUM_CLI) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string config_path(const std::string& name) { return (fs::path(DIVSUM_CONFIG_DIR) / name).string(); }

}  // namespace

TEST_CASE("minimal config gets the documented defaults", "[config]") {
  const auto c = parse_run_config(kMinimal);
  CHECK(c.form == QuadraticPolynomial{3, {1, 0, 0, 0, 1, 0, 0, 0, 1}, {0, 0, 0}, 1});
  CHECK(c.series.prime_bound == 100000);
  CHECK(c.series.bad_prime_depth == 8);
  CHECK(c.series.quadrature_order == 8);
  CHECK(c.series.target_rel_tol == 1e-6);
  CHECK(c.ifl_mode == IflMode::limit);
  CHECK_FALSE(c.ifl_x.has_value());
  CHECK(c.x_list.empty());
  CHECK(c.format == "table");
  CHECK(c.out_dir.empty());
  CHECK(c.max_ratio_error == 0.05);
}

TEST_CASE("JSON documents are accepted", "[config]") {
  const auto c = parse_run_config(R"({"form": {"dim": 3, "q": [[0,1,1],[0,0,1],[0,0,0]], "b": [0,0,0], "c": 0},
                                      "verify": {"x_list": [20, 40, 60]}, "ifl": {"mode": "at-x", "x": 50}})");
  CHECK(c.form.monomial(0, 1) == 1);
  CHECK(c.x_list == std::vector<i64>{20, 40, 60});
  CHECK(c.ifl_mode == IflMode::at_x);
  CHECK(c.ifl_x == 50.0);
}

TEST_CASE("round trip through YAML", "[config]") {
  for (const auto& entry : fs::directory_iterator(DIVSUM_CONFIG_DIR)) {
    const auto c = load_run_config(entry.path().string());
    const auto text = to_yaml(c);
    INFO(entry.path().string() << "\n" << text);
    REQUIRE(parse_run_config(text) == c);
    REQUIRE(to_yaml(parse_run_config(text)) == text);
  }
  auto c = parse_run_config(kMinimal);
  c.name = "odd values";
  c.series.target_rel_tol = 1.0 / 3e7;
  c.ifl_x = 0.1;
  c.max_ratio_error = 0.1234567890123;
  c.x_list = {7, 11, 13};
  c.out_dir = "some dir/out";
  c.format = "csv";
  c.allow_large_sieve = true;
  REQUIRE(parse_run_config(to_yaml(c)) == c);
}

TEST_CASE("diagnostics carry line and column", "[config]") {
  // unknown key on line 6
  CHECK(error_position(std::string(kMinimal) + "colour: blue\n") == std::pair{6, 1});
  // wrong row length: the offending row is on line 3, column 18
  CHECK(error_position("form:\n  dim: 3\n  q: [[1, 0, 0], [0, 1], [0, 0, 1]]\n  b: [0, 0, 0]\n  c: 1\n") == std::pair{3, 18});
  // non-integer entry
  CHECK(error_position("form:\n  dim: 3\n  q: [[1, 0, 0], [0, 1, 0], [0, 0, x]]\n  b: [0, 0, 0]\n  c: 1\n").first == 3);
  CHECK(error_position("form:\n  dim: 3\n  q: [[1, 0, 0], [0, 1, 0], [0, 0, 1]]\n  b: [0, 0, 0]\n  c: 1.5\n") == std::pair{5, 6});
  // malformed YAML
  CHECK(error_position("form:\n  dim: 3\n  q: [[1, 0, 0]\n").first >= 3);
  // semantic checks
  CHECK(error_position(std::string(kMinimal) + "series:\n  prime_bound: 10\n").first == 7);
  CHECK(error_position(std::string(kMinimal) + "verify:\n  x_list: [20, 10, 30]\n") == std::pair{7, 16});
  CHECK(error_position(std::string(kMinimal) + "ifl:\n  mode: infinity\n") == std::pair{7, 9});
  CHECK(error_position(std::string(kMinimal) + "output:\n  format: xml\n") == std::pair{7, 11});
  CHECK(error_position("form:\n  dim: 2\n  q: [[1, 0], [0, 1]]\n  b: [0, 0]\n  c: 1\n") == std::pair{2, 8});

  try {
    parse_run_config(std::string(kMinimal) + "colour: blue\n", "cfg.yaml");
    FAIL("accepted");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).rfind("cfg.yaml:6:1: unknown key 'colour'", 0) == 0);
  }
  CHECK_THROWS_AS(parse_run_config(""), ConfigError);
  CHECK_THROWS_AS(load_run_config("/nonexistent/config.yaml"), ConfigError);
}

TEST_CASE("command-line exit codes", "[config][cli]") {
  const auto dir = scratch_dir("exit");
  const auto degenerate = dir / "degenerate.yaml";
  std::ofstream(degenerate) << "form:\n  dim: 3\n  q: [[1, 0, 0], [0, 1, 0], [0, 0, 0]]\n  b: [0, 0, 0]\n  c: 1\n";
  const auto bad = dir / "bad.yaml";
  std::ofstream(bad) << std::string(kMinimal) << "colour: blue\n";

  CHECK(run_cli("invariants --config " + config_path("squares_plus_one.yaml")) == 0);
  CHECK(run_cli("invariants --config " + degenerate.string()) == 1);
  CHECK(run_cli("invariants --config " + bad.string()) == 1);
  CHECK(run_cli("invariants") == 1);
  CHECK(run_cli("local --config " + config_path("squares_plus_one.yaml") + " --prime 4") == 1);
  CHECK(run_cli("local --config " + config_path("squares_plus_one.yaml") + " --prime 3 --max-t 3") == 0);
  CHECK(run_cli("verify --config " + config_path("qft.yaml") + " --x-list 10,20") == 1);
  CHECK(run_cli("verify --config " + config_path("qft.yaml"), "DIVSUM_MEMORY_BUDGET=1000") == 3);
  CHECK(run_cli("verify --config " + config_path("qft.yaml")) == 0);
  // the two-term prediction cannot be within 1e-6 of box sums this small
  const auto strict = dir / "strict.yaml";
  std::ofstream(strict) << std::string(kMinimal) << "verify:\n  x_list: [10, 20, 30]\n  max_ratio_error: 1.0e-6\n";
  CHECK(run_cli("verify --config " + strict.string()) == 2);
  CHECK(run_cli("examples --name qsym") == 0);
  CHECK(run_cli("examples --name nope") == 1);
  CHECK(run_cli("constants --config " + config_path("qfm.yaml") + " --format xml") == 1);
}

TEST_CASE("output files are byte-deterministic", "[config][cli]") {
  const auto a = scratch_dir("det_a"), b = scratch_dir("det_b");
  for (const auto& d : {a, b}) {
    REQUIRE(run_cli("constants --config " + config_path("squares_plus_one.yaml") + " --out " + d.string()) == 0);
    REQUIRE(run_cli("verify --config " + config_path("squares_plus_one.yaml") + " --out " + d.string()) == 0);
  }
  for (const char* name : {"constants.json", "verify.csv", "verify.json"}) {
    INFO(name);
    REQUIRE(fs::exists(a / name));
    CHECK(read_file(a / name) == read_file(b / name));
  }
  const auto csv = read_file(a / "verify.csv");
  CHECK(csv.rfind("X,empirical,main_term,two_term,ratio,abs_err_main,abs_err_two\n", 0) == 0);
  const auto j = nlohmann::json::parse(read_file(a / "constants.json"));
  CHECK(j["c_main"].get<double>() == Catch::Approx(19.5 / (std::numbers::pi * std::numbers::pi)).epsilon(1e-9));
  CHECK(j["truncation"]["special_primes"][0]["prime"] == 2);
}
