#include <doctest.h>

#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "semilin/config.hpp"
#include "semilin/errors.hpp"
#include "semilin/expression.hpp"
#include "semilin/harness.hpp"
#include "support.hpp"

using namespace semilin;
using namespace testing;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("semilin_unit_" + name);
  fs::remove_all(dir);
  return dir;
}

int parse_error_column(std::string_view text, const VariableTable& vars) {
  try {
    Expression::parse(text, vars);
  } catch (const ParseError& e) {
    return e.column();
  }
  return -1;
}

RunConfig quick(double tol = 1e-4) {
  RunConfig rc;
  rc.tol = tol;
  rc.sup_tol = 10 * tol;
  rc.mc.n_paths = 2000;
  rc.mc.dt = 0.01;
  return rc;
}

}  // namespace

TEST_CASE("expression precedence and functions") {
  VariableTable v;
  const int x = v.add("x"), y = v.add("y");
  std::array<double, 2> s{};
  s[static_cast<std::size_t>(x)] = 2.0;
  s[static_cast<std::size_t>(y)] = -3.0;
  auto eval = [&](std::string_view t) { return Expression::parse(t, v)(s); };
  CHECK(eval("1 + 2 * 3") == 7.0);
  CHECK(eval("(1 + 2) * 3") == 9.0);
  CHECK(eval("2 ^ 3 ^ 2") == 512.0);
  CHECK(eval("-x^2") == -4.0);
  CHECK(eval("x - y - 1") == 4.0);
  CHECK(eval("x / 4 / 2") == 0.25);
  CHECK(eval("max(x, y) + min(x, y)") == -1.0);
  CHECK(eval("abs(y) * cutoff(x, 1)") == 0.0);
  CHECK(eval("cutoff(1.5, 1)") == 0.5);
  CHECK(eval("exp(0) + log(1) + sqrt(16) + tanh(0) + sin(0) + cos(0)") == 6.0);
  CHECK(eval("2 * pi") == doctest::Approx(6.283185307179586));
  CHECK(eval("1e-3 * 1E3") == 1.0);
  const Expression c = Expression::parse("3 * 2", v);
  CHECK(c.is_constant());
  CHECK_FALSE(Expression::parse("x + 1", v).depends_on(y));
  CHECK(Expression::parse("x + y", v).depends_on(y));
}

TEST_CASE("expression errors carry positions") {
  VariableTable v;
  v.add("x1");
  CHECK(parse_error_column("x1 + foo(2)", v) == 6);
  CHECK(parse_error_column("x1 + ", v) >= 5);
  CHECK(parse_error_column("(x1", v) >= 4);
  CHECK(parse_error_column("max(x1)", v) > 0);
  try {
    Expression::parse("x1 * x2", v, 4, 9);
    FAIL("undeclared coordinate accepted");
  } catch (const ParseError& e) {
    CHECK(e.line() == 4);
    CHECK(e.column() == 14);
    CHECK(std::string(e.what()).find("does not exist") != std::string::npos);
  }
  try {
    Expression::parse("sinh(x1)", v);
    FAIL("unknown function accepted");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("unknown function 'sinh'") != std::string::npos);
  }
}

TEST_CASE("config for the linear heat problem") {
  const ConfigFile cfg = ConfigFile::parse(
      "# constant source\n"
      "[problem]\n"
      "name = heat\n"
      "dim = 1\n"
      "horizon = 1\n"
      "terminal = 0.5\n"
      "suite = A\n"
      "[diffusion]\n"
      "sigma = 1\n"
      "[hamiltonian]\n"
      "H = 1\n"
      "[run]\n"
      "kappa = 8\n"
      "tol = 1e-4\n"
      "sup_tol = inf\n"
      "ladder = 2, 4, 8\n"
      "points = (0, 0.5), (0.5, -1)\n");
  const Problem p = parse_problem(cfg);
  CHECK(p.name == "heat");
  CHECK(p.horizon == 1.0);
  CHECK(p.terminal(vec1(3.0)) == 0.5);
  CHECK(p.hamiltonian(vec1(2.0), 7.0, vec1(-1.0), 0.3) == 1.0);
  CHECK(p.diffusion.sigma(vec1(1.0), 0.0)(0, 0) == 1.0);
  const RunConfig rc = parse_run_config(cfg, p);
  CHECK(rc.tol == 1e-4);
  CHECK(std::isinf(rc.sup_tol));
  CHECK(rc.ladder == std::vector<double>{2, 4, 8});
  REQUIRE(rc.crosscheck_points.size() == 2);
  CHECK(rc.crosscheck_points[1].t == 0.5);
  CHECK(rc.crosscheck_points[1].x[0] == -1.0);
}

TEST_CASE("config rejects bad input") {
  try {
    parse_problem(ConfigFile::parse("[problem]\nhorizon = -1\nterminal = 0\n[hamiltonian]\nH = 0\n"));
    FAIL("negative horizon accepted");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Validation);
    CHECK(std::string(e.what()) == "horizon must be positive");
  }
  try {
    ConfigFile::parse("[problem]\nhorizon = 1\n[probem]\n");
    FAIL("unknown section accepted");
  } catch (const ParseError& e) {
    CHECK(e.line() == 3);
  }
  try {
    ConfigFile::parse("[problem]\nhorizon = 1\nhorizn = 2\n");
    FAIL("unknown key accepted");
  } catch (const ParseError& e) {
    CHECK(e.line() == 3);
    CHECK(e.column() == 1);
  }
  CHECK_THROWS_AS(ConfigFile::parse("horizon = 1\n"), ParseError);
  CHECK_THROWS_AS(ConfigFile::parse("[problem]\nhorizon = 1\nhorizon = 2\n"), ParseError);
  CHECK_THROWS_AS(parse_problem(ConfigFile::parse("[problem]\nhorizon = 1\nterminal = t\n[hamiltonian]\nH = 0\n")),
                  ParseError);
  try {
    parse_problem(ConfigFile::parse("[problem]\nhorizon = 1\nterminal = 0\n[hamiltonian]\nH = u * p2\n"));
    FAIL("p2 accepted in one dimension");
  } catch (const ParseError& e) {
    CHECK(e.line() == 5);
    CHECK(e.column() == 9);
  }
  CHECK_THROWS_AS(parse_problem(ConfigFile::parse("[problem]\nbuiltin = burgers\n[hamiltonian]\nH = 0\n")),
                  ParseError);
}

TEST_CASE("isaacs config with vector controls") {
  const Problem p = parse_problem(ConfigFile::parse(
      "[problem]\n"
      "horizon = 1\n"
      "terminal = cutoff(x, 2)\n"
      "suite = C\n"
      "[controls]\n"
      "D = (0, 1), (1, 0)\n"
      "Gamma = (1, 1), (-1, 0)\n"
      "drift = d1 * e1 + d2 * e2\n"
      "potential = -0.5\n"
      "source = d1 - e2\n"
      "h_upper = -0.5\n"
      "f_bound = 2\n"));
  REQUIRE(p.is_isaacs());
  const IsaacsSpec& s = *p.hamiltonian.isaacs;
  CHECK(s.D_points.size() == 2);
  CHECK(s.Gamma_points.size() == 2);
  for (const ControlVec& d : s.D_points) {
    for (const ControlVec& e : s.Gamma_points) {
      CHECK(s.drift(vec1(0.3), 0.1, d, e)[0] == d.dot(e));
      CHECK(s.source(vec1(0.3), 0.1, d, e) == d[0] - e[1]);
    }
  }
  CHECK(s.bounds.h_upper == -0.5);
}

TEST_CASE("builtins") {
  for (const std::string& name : builtin_names()) {
    const Problem p = builtin(name);
    CHECK(p.name == name);
    CHECK_NOTHROW(p.validate());
  }
  try {
    builtin("kdv");
    FAIL("unknown builtin accepted");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Precondition);
  }
}

TEST_CASE("run config validation") {
  RunConfig rc;
  rc.tol = 0.0;
  CHECK_THROWS_AS(rc.validate(), Error);
  rc = RunConfig{};
  rc.ladder = {4, 2};
  CHECK_THROWS_AS(rc.validate(), Error);
  rc = RunConfig{};
  rc.mc.n_paths = 0;
  CHECK_THROWS_AS(rc.validate(), Error);
  CHECK(RunConfig{}.ladder_for(builtin("burgers")) == std::vector<double>{2, 4, 8});
}

TEST_CASE("solve and export the linear heat problem") {
  const fs::path dir = scratch("heat");
  RunConfig rc = quick();
  rc.out_dir = dir;
  rc.source_text = "[problem]\nbuiltin = linear_heat\n";
  const RunResult r = solve(builtin("linear_heat"), rc);
  REQUIRE_FALSE(r.error.has_value());
  CHECK(r.route == Route::Direct);
  CHECK(r.converged());
  CHECK(r.trace.iterations <= 2);
  CHECK(r.residual <= 1e-4);
  CHECK(r.crosscheck.passed());
  CHECK(r.exit_code() == 0);

  for (const char* f : {"input.cfg", "solution.csv", "trace.csv", "validation.csv", "crosscheck.csv", "manifest.cfg"}) {
    CHECK_MESSAGE(fs::exists(dir / f), f);
  }
  CHECK_FALSE(fs::exists(dir / "saddle.csv"));
  CHECK(slurp(dir / "input.cfg") == rc.source_text);

  const GridField back = read_solution_csv(dir / "solution.csv", r.solution.grid);
  double err = 0.0, diff = 0.0;
  for (int l = 0; l < back.grid.levels; ++l) {
    for (std::size_t i = 0; i < back.grid.space.size(); ++i) {
      err = std::max(err, std::abs(back.value(l, i) - (0.5 + (1.0 - back.grid.time(l)))));
      diff = std::max(diff, std::abs(back.value(l, i) - r.solution.value(l, i)));
    }
  }
  CHECK(err <= 1e-4);
  CHECK(diff == 0.0);

  const auto m = read_manifest(dir / "manifest.cfg");
  CHECK(m.at("problem.name") == "linear_heat");
  CHECK(m.at("result.route") == "direct");
  CHECK(m.at("files.solution.csv") == sha256_hex(slurp(dir / "solution.csv")));
  CHECK(slurp(dir / "manifest.cfg").find("time") == std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("exports are byte-identical and digests track content") {
  const fs::path a = scratch("det_a"), b = scratch("det_b");
  RunConfig rc = quick();
  Problem p = builtin("linear_heat");
  p.grid = GridSpec{8.0, 65, 17};
  rc.out_dir = a;
  const RunResult ra = solve(p, rc);
  rc.out_dir = b;
  const RunResult rb = solve(p, rc);
  REQUIRE_FALSE(ra.error.has_value());
  for (const auto& entry : fs::directory_iterator(a)) {
    const fs::path name = entry.path().filename();
    CHECK_MESSAGE(slurp(a / name) == slurp(b / name), name.string());
  }
  std::string sol = slurp(a / "solution.csv");
  const std::string before = sha256_hex(sol);
  CHECK(before == sha256_hex(slurp(b / "solution.csv")));
  sol[sol.size() / 2] = sol[sol.size() / 2] == '1' ? '2' : '1';
  CHECK(sha256_hex(sol) != before);
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST_CASE("a problem failing its suite-A validation is never iterated directly") {
  Problem p = builtin("burgers");
  p.suite = Suite::A;
  p.grid = GridSpec{8.0, 65, 17};
  RunConfig rc = quick(1e-5);
  rc.mc.n_paths = 500;
  const RunResult r = solve(p, rc);
  CHECK_FALSE(r.validation.passed());
  CHECK(r.route == Route::Localized);
  REQUIRE(r.cutoffs.has_value());
  CHECK(r.stability.has_value());
  CHECK(r.solved.suite == Suite::A);
}

TEST_CASE("isaacs runs record valid saddle selections") {
  Problem p = builtin("robust_game");
  p.grid = GridSpec{8.0, 33, 9};
  RunConfig rc = quick(1e-4);
  rc.mc.n_paths = 500;
  rc.ladder = {4, 8};
  const RunResult r = solve(p, rc);
  REQUIRE_FALSE(r.error.has_value());
  REQUIRE(r.saddle.has_value());
  const IsaacsSpec& s = *r.solved.hamiltonian.isaacs;
  REQUIRE(r.saddle->delta_star.size() == r.solution.grid.nodes());
  for (std::size_t n = 0; n < r.saddle->delta_star.size(); ++n) {
    CHECK(r.saddle->delta_star[n] < s.D_points.size());
    CHECK(r.saddle->eta_star[n] < s.Gamma_points.size());
  }
}

TEST_CASE("points files") {
  const fs::path dir = scratch("points");
  fs::create_directories(dir);
  std::ofstream(dir / "pts.txt") << "# t, x\n0, 1.5\n\n0.25, -2\n";
  const auto pts = read_points(dir / "pts.txt", 1);
  REQUIRE(pts.size() == 2);
  CHECK(pts[1].t == 0.25);
  CHECK(pts[1].x[0] == -2.0);
  std::ofstream(dir / "bad.txt") << "0, 1, 2\n";
  CHECK_THROWS_AS(read_points(dir / "bad.txt", 1), Error);
  fs::remove_all(dir);
}
