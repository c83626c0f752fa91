#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "semilin/config.hpp"
#include "semilin/errors.hpp"
#include "semilin/harness.hpp"

using namespace semilin;

namespace {

struct RunOverrides {
  std::string out;
  std::optional<double> kappa;
  bool kappa_adaptive = false;
  std::optional<double> tol;
  std::optional<int> max_iter;
  std::optional<std::uint64_t> seed;
  std::optional<int> mc_paths;
  std::optional<double> mc_dt;
  std::vector<double> ladder;

  void attach(CLI::App* cmd) {
    cmd->add_option("--out", out, "Run directory");
    auto* k = cmd->add_option("--kappa", kappa, "Fixed weight of the kappa-norm");
    auto* ka = cmd->add_flag("--kappa-adaptive", kappa_adaptive, "Choose kappa from a contraction estimate");
    k->excludes(ka);
    cmd->add_option("--tol", tol, "Stopping tolerance on the kappa-norm increment");
    cmd->add_option("--max-iter", max_iter, "Iteration cap");
    cmd->add_option("--seed", seed, "Monte Carlo seed");
    cmd->add_option("--mc-paths", mc_paths, "Monte Carlo paths per crosscheck point");
    cmd->add_option("--mc-dt", mc_dt, "Euler-Maruyama step");
    cmd->add_option("--ladder", ladder, "Localization radii, comma separated")->delimiter(',');
  }

  void apply(RunConfig& rc) const {
    if (kappa) {
      rc.kappa = *kappa;
      rc.kappa_adaptive = false;
    }
    if (kappa_adaptive) rc.kappa_adaptive = true;
    if (tol) rc.tol = *tol;
    if (max_iter) rc.max_iter = *max_iter;
    if (seed) rc.mc.seed = *seed;
    if (mc_paths) rc.mc.n_paths = *mc_paths;
    if (mc_dt) rc.mc.dt = *mc_dt;
    if (!ladder.empty()) rc.ladder = ladder;
    rc.out_dir = out;
    rc.validate();
  }
};

void print_result(const RunResult& r) {
  std::printf("problem    %s (suite %s, route %s)\n", r.problem.name.c_str(), to_string(r.problem.suite),
              to_string(r.route));
  if (r.cutoffs) std::printf("cutoffs    k_x=%g k_u=%g k_p=%g\n", r.cutoffs->k_x, r.cutoffs->k_u, r.cutoffs->k_p);
  std::printf("kappa      %g\n", r.kappa);
  std::printf("iterations %d  converged=%s\n", r.trace.iterations, r.converged() ? "yes" : "no");
  if (!r.trace.deltas.empty()) std::printf("last delta %.3e\n", r.trace.deltas.back());
  std::printf("residual   %.3e\n", r.residual);
  if (r.stability) {
    std::printf("ladder    ");
    for (double g : r.stability->gaps) std::printf(" %.3e", g);
    std::printf("  monotone=%s\n", r.stability->monotone ? "yes" : "no");
  }
  for (const auto& p : r.crosscheck.points) {
    if (p.skipped) {
      std::printf("mc         t=%g x0=%g skipped: %s\n", p.t, p.x[0], p.note.c_str());
      continue;
    }
    std::printf("mc         t=%g x0=%g u=%.6f mean=%.6f se=%.2e %s\n", p.t, p.x[0], p.u_pde, p.mc_mean,
                p.mc_stderr, p.passed ? "pass" : "FAIL");
  }
  for (const auto& w : r.warnings) std::printf("warning    %s\n", w.c_str());
  if (r.error) std::printf("error      [%s] %s\n", r.error->stage.c_str(), r.error->message.c_str());
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int cmd_solve(const std::string& path, const RunOverrides& ov) {
  const std::string text = slurp(path);
  const ConfigFile cfg = ConfigFile::parse(text);
  const Problem problem = parse_problem(cfg);
  RunConfig rc = parse_run_config(cfg, problem);
  rc.source_text = text;
  ov.apply(rc);
  const RunResult r = solve(problem, rc);
  print_result(r);
  return r.exit_code();
}

int cmd_builtin(const std::string& name, const RunOverrides& ov) {
  const Problem problem = builtin(name);
  RunConfig rc;
  rc.source_text = "[problem]\nbuiltin = " + name + "\n";
  ov.apply(rc);
  const RunResult r = solve(problem, rc);
  print_result(r);
  return r.exit_code();
}

int cmd_validate(const std::string& path, const std::string& suite) {
  const Problem problem = load_problem(path);
  const ValidationReport report =
      validate_assumptions(problem, parse_suite(suite), SampleLattice::for_problem(problem));
  std::fputs(report.summary().c_str(), stdout);
  return report.passed() ? 0 : 1;
}

int cmd_crosscheck(const std::filesystem::path& dir, const std::string& points_file, const RunOverrides& ov,
                   const std::string& out) {
  const auto manifest = read_manifest(dir / "manifest.cfg");
  const Problem problem = parse_problem(ConfigFile::read(dir / "input.cfg"));
  Problem solved = problem;
  const auto route = manifest.find("result.route");
  if (route != manifest.end() && route->second != "direct") {
    CutoffFamily family;
    family.k_x = std::stod(manifest.at("result.k_x"));
    family.k_u = std::stod(manifest.at("result.k_u"));
    family.k_p = std::stod(manifest.at("result.k_p"));
    solved = localize_problem(problem, family).problem;
  }
  const GridField field = read_solution_csv(dir / "solution.csv", solved.space_time_grid());
  McSettings mc;
  if (const auto s = manifest.find("run.seed"); s != manifest.end()) mc.seed = std::stoull(s->second);
  if (const auto s = manifest.find("run.mc_paths"); s != manifest.end()) mc.n_paths = std::stoi(s->second);
  if (const auto s = manifest.find("run.mc_dt"); s != manifest.end()) mc.dt = std::stod(s->second);
  if (ov.seed) mc.seed = *ov.seed;
  if (ov.mc_paths) mc.n_paths = *ov.mc_paths;
  if (ov.mc_dt) mc.dt = *ov.mc_dt;
  const CrossCheckReport report =
      crosscheck_solution(field, solved, read_points(points_file, problem.dim), mc);
  for (const auto& p : report.points) {
    std::printf("t=%g x0=%g u=%.6f mean=%.6f se=%.2e %s\n", p.t, p.x[0], p.u_pde, p.mc_mean, p.mc_stderr,
                p.skipped ? "skipped" : (p.passed ? "pass" : "FAIL"));
  }
  for (const auto& w : report.warnings) std::printf("warning %s\n", w.c_str());
  if (!out.empty()) write_crosscheck_csv(report, problem.dim, out);
  if (!report.passed()) return 1;
  return report.warnings.empty() ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fixed-point solver for semilinear parabolic terminal-value problems"};
  app.require_subcommand(1);

  std::string config_path;
  RunOverrides solve_ov;
  auto* solve_cmd = app.add_subcommand("solve", "Solve a problem described by a config file");
  solve_cmd->add_option("config", config_path, "Problem config")->required()->check(CLI::ExistingFile);
  solve_ov.attach(solve_cmd);

  std::string validate_path;
  std::string suite = "A";
  auto* validate_cmd = app.add_subcommand("validate", "Check the structural assumptions of a suite");
  validate_cmd->add_option("config", validate_path, "Problem config")->required()->check(CLI::ExistingFile);
  validate_cmd->add_option("--suite", suite, "A, B, C or D")->check(CLI::IsMember({"A", "B", "C", "D"}));

  std::string builtin_name;
  RunOverrides builtin_ov;
  auto* builtin_cmd = app.add_subcommand("builtin", "Solve one of the built-in problems");
  builtin_cmd->add_option("name", builtin_name, "Problem name")->required()->check(CLI::IsMember(builtin_names()));
  builtin_ov.attach(builtin_cmd);

  std::string result_dir;
  std::string points_file;
  std::string cc_out;
  RunOverrides cc_ov;
  auto* cc_cmd = app.add_subcommand("crosscheck", "Monte Carlo check of a stored solution");
  cc_cmd->add_option("result-dir", result_dir, "Run directory written by solve")->required()->check(CLI::ExistingDirectory);
  cc_cmd->add_option("--points", points_file, "Lines of t, x1, ..., xN")->required()->check(CLI::ExistingFile);
  cc_cmd->add_option("--seed", cc_ov.seed, "Monte Carlo seed");
  cc_cmd->add_option("--mc-paths", cc_ov.mc_paths, "Paths per point");
  cc_cmd->add_option("--mc-dt", cc_ov.mc_dt, "Euler-Maruyama step");
  cc_cmd->add_option("--out", cc_out, "Write the table to this file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (*solve_cmd) return cmd_solve(config_path, solve_ov);
    if (*validate_cmd) return cmd_validate(validate_path, suite);
    if (*builtin_cmd) return cmd_builtin(builtin_name, builtin_ov);
    if (*cc_cmd) return cmd_crosscheck(result_dir, points_file, cc_ov, cc_out);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 1;
}
