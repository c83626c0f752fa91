#include "semilin/harness.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "semilin/errors.hpp"

namespace semilin {

void RunConfig::validate() const {
  if (!(tol > 0.0)) throw Error(ErrorKind::Validation, "tol must be positive");
  if (!(sup_tol > 0.0)) throw Error(ErrorKind::Validation, "sup_tol must be positive");
  if (max_iter < 1) throw Error(ErrorKind::Validation, "max_iter must be at least 1");
  if (!kappa_adaptive && !(kappa > 0.0)) throw Error(ErrorKind::Validation, "kappa must be positive");
  for (std::size_t j = 0; j < ladder.size(); ++j) {
    if (!(ladder[j] > 0.0)) throw Error(ErrorKind::Validation, "ladder radii must be positive");
    if (j > 0 && !(ladder[j] > ladder[j - 1])) {
      throw Error(ErrorKind::Validation, "ladder radii must be strictly increasing");
    }
  }
  if (mc.n_paths < 2) throw Error(ErrorKind::Validation, "mc_paths must be at least 2");
  if (!(mc.dt > 0.0)) throw Error(ErrorKind::Validation, "mc_dt must be positive");
  if (!(mc.bias_allowance >= 0.0)) throw Error(ErrorKind::Validation, "bias_allowance must be non-negative");
}

std::vector<double> RunConfig::ladder_for(const Problem& problem) const {
  if (!ladder.empty()) return ladder;
  const double r = problem.grid.radius;
  return {0.25 * r, 0.5 * r, r};
}

const char* to_string(Route route) {
  switch (route) {
    case Route::Direct: return "direct";
    case Route::Localized: return "localized";
    case Route::Ladder: return "ladder";
  }
  return "?";
}

bool RunResult::converged() const {
  if (error || !trace.converged) return false;
  if (route == Route::Ladder) return ladder_agreed && stability && stability->monotone && stability->conclusive;
  return true;
}

int RunResult::exit_code() const {
  if (!converged()) return 1;
  return warnings.empty() ? 0 : 2;
}

namespace {

// Shortest text that reads back to the same double.
std::string num(double v) {
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

class StageFailure : public std::runtime_error {
 public:
  StageFailure(std::string stage, const std::string& what) : std::runtime_error(what), stage(std::move(stage)) {}
  std::string stage;
};

template <class F>
auto stage(const char* name, F&& fn) {
  try {
    return fn();
  } catch (const StageFailure&) {
    throw;
  } catch (const std::exception& e) {
    throw StageFailure(name, e.what());
  }
}

SolverSettings settings_for(const Problem& problem, const RunConfig& cfg, double kappa) {
  SolverSettings s;
  s.kappa = kappa;
  s.tol = cfg.tol;
  s.sup_tol = cfg.sup_tol;
  s.max_iter = cfg.max_iter;
  s.params = problem.kernel_params();
  s.params.quad_nodes_per_dim = cfg.quad_nodes_per_dim;
  s.params.tail_cut_sigmas = cfg.tail_cut_sigmas;
  return s;
}

IterateOptions options_for(const RunConfig& cfg) {
  IterateOptions o;
  o.sup_tol = cfg.sup_tol;
  return o;
}

double choose_kappa(const Problem& solved, const RunConfig& cfg, RunResult& out) {
  if (!cfg.kappa_adaptive) return cfg.kappa;
  const SolverSettings s = settings_for(solved, cfg, cfg.kappa);
  const KappaSelection sel = select_kappa(solved, s.params, cfg.mc.seed);
  if (sel.capped) {
    out.warnings.push_back("adaptive kappa hit the cap " + num(sel.kappa) + " with estimate " + num(sel.estimate));
  }
  return sel.kappa;
}

CutoffFamily base_cutoffs(const Problem& problem, const RunConfig& cfg, double radius) {
  CutoffFamily family = calibrate_cutoffs(problem, settings_for(problem, cfg, cfg.kappa_adaptive ? 8.0 : cfg.kappa));
  family.k_x = radius;
  return family;
}

void run_direct(RunResult& out, const RunConfig& cfg) {
  out.route = Route::Direct;
  out.solved = out.problem;
  out.kappa = stage("kappa", [&] { return choose_kappa(out.solved, cfg, out); });
  const SolverSettings s = settings_for(out.solved, cfg, out.kappa);
  IterateResult run = stage("iterate", [&] {
    return iterate(out.solved, s.kappa, s.tol, s.max_iter, s.params, options_for(cfg));
  });
  out.solution = std::move(run.field);
  out.trace = std::move(run.trace);
}

void run_localized(RunResult& out, const RunConfig& cfg) {
  out.route = Route::Localized;
  const std::vector<double> radii = cfg.ladder_for(out.problem);
  const CutoffFamily family = stage("localize", [&] { return base_cutoffs(out.problem, cfg, radii.back()); });
  out.cutoffs = family;
  out.solved = stage("localize", [&] { return localize_problem(out.problem, family).problem; });
  out.kappa = stage("kappa", [&] { return choose_kappa(out.solved, cfg, out); });
  const SolverSettings s = settings_for(out.solved, cfg, out.kappa);
  IterateResult run = stage("iterate", [&] {
    return iterate(out.solved, s.kappa, s.tol, s.max_iter, s.params, options_for(cfg));
  });
  out.solution = std::move(run.field);
  out.trace = std::move(run.trace);
  if (radii.size() >= 2) {
    out.stability = stage("ladder", [&] { return stability_check(out.problem, radii, family, s); });
    if (!out.stability->conclusive) out.warnings.push_back("a ladder rung did not converge");
    if (!out.stability->monotone) out.warnings.push_back("ladder gaps are not decreasing");
  }
}

// Rungs are solved in order until two consecutive ones agree on the half-radius ball.
void run_ladder(RunResult& out, const RunConfig& cfg) {
  out.route = Route::Ladder;
  const std::vector<double> radii = cfg.ladder_for(out.problem);
  const double agree = 5.0 * cfg.tol;
  CutoffFamily family = out.problem.is_isaacs()
                            ? CutoffFamily::uniform(radii.front())
                            : stage("localize", [&] { return base_cutoffs(out.problem, cfg, radii.front()); });
  StabilityReport report;
  report.conclusive = true;
  for (std::size_t j = 0; j < radii.size(); ++j) {
    family.k_x = radii[j];
    const Problem loc = stage("localize", [&] { return localize_problem(out.problem, family).problem; });
    if (j == 0) out.kappa = stage("kappa", [&] { return choose_kappa(loc, cfg, out); });
    const SolverSettings s = settings_for(loc, cfg, out.kappa);
    IterateResult run = stage("ladder", [&] {
      return iterate(loc, s.kappa, s.tol, s.max_iter, s.params, options_for(cfg));
    });
    RungResult rung;
    rung.radius = radii[j];
    rung.converged = run.trace.converged;
    rung.iterations = run.trace.iterations;
    rung.solution = run.field;
    rung.trace = run.trace;
    report.radii.push_back(radii[j]);
    report.conclusive = report.conclusive && rung.converged;
    if (j > 0) report.gaps.push_back(ball_gap(report.rungs.back().solution, rung.solution, 0.5 * radii[j - 1]));
    report.rungs.push_back(std::move(rung));
    out.solved = loc;
    out.cutoffs = family;
    out.solution = std::move(run.field);
    out.trace = std::move(run.trace);
    if (j > 0 && report.gaps.back() <= agree) {
      out.ladder_agreed = true;
      break;
    }
  }
  report.monotone = true;
  for (std::size_t j = 1; j < report.gaps.size(); ++j) {
    report.monotone = report.monotone && report.gaps[j] < report.gaps[j - 1];
  }
  if (!out.ladder_agreed) {
    out.warnings.push_back("ladder rungs never agreed within " + num(agree) + "; no solution is selected");
  }
  if (!report.monotone) out.warnings.push_back("ladder gaps are not decreasing");
  out.stability = std::move(report);
}

std::string failing_checks(const ValidationReport& report) {
  std::string names;
  for (const auto& c : report.checks) {
    if (c.passed) continue;
    if (!names.empty()) names += ", ";
    names += c.name;
  }
  return names;
}

}  // namespace

RunResult solve(const Problem& problem, const RunConfig& config) {
  RunResult out;
  out.problem = problem;
  out.solved = problem;
  out.config = config;
  try {
    stage("validate", [&] {
      config.validate();
      problem.validate();
      out.validation = validate_assumptions(problem, problem.suite, SampleLattice::for_problem(problem));
      return 0;
    });
    if (!out.validation.passed()) {
      out.warnings.push_back(std::string("suite ") + to_string(problem.suite) +
                             " validation failed: " + failing_checks(out.validation));
    }
    if (problem.suite == Suite::D) {
      run_ladder(out, config);
    } else if (problem.suite == Suite::A && out.validation.passed()) {
      run_direct(out, config);
    } else {
      run_localized(out, config);
    }
    if (!out.trace.converged) {
      out.warnings.push_back(out.trace.diverged ? "iteration diverged" : "iteration hit max_iter");
    }
    out.residual = stage("residual", [&] { return pde_residual(out.solution, out.solved); });
    if (!(out.residual <= config.residual_warn)) {
      out.warnings.push_back("PDE residual " + num(out.residual) + " exceeds " + num(config.residual_warn));
    }
    if (out.solved.is_isaacs()) {
      out.saddle = stage("saddle", [&] { return saddle_field(*out.solved.hamiltonian.isaacs, out.solution); });
    }
    const std::vector<PathStart> points =
        config.crosscheck_points.empty() ? default_crosscheck_points(problem.dim) : config.crosscheck_points;
    out.crosscheck = stage("crosscheck", [&] { return crosscheck_solution(out.solution, out.solved, points, config.mc); });
    if (!out.crosscheck.passed()) out.warnings.push_back("Monte Carlo crosscheck failed");
    for (const auto& w : out.crosscheck.warnings) out.warnings.push_back(w);
  } catch (const StageFailure& f) {
    out.error = StageError{f.stage, f.what()};
  }
  if (!config.out_dir.empty()) {
    try {
      export_result(out, config.out_dir);
    } catch (const std::exception& e) {
      if (!out.error) out.error = StageError{"export", e.what()};
    }
  }
  return out;
}

std::string sha256_hex(std::string_view data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1) {
    throw Error(ErrorKind::Io, "SHA-256 digest failed");
  }
  static const char* hex = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[md[i] >> 4]);
    out.push_back(hex[md[i] & 15]);
  }
  return out;
}

namespace {

std::string x_header(int dim) {
  std::string h;
  for (int i = 0; i < dim; ++i) h += ",x" + std::to_string(i + 1);
  return h;
}

std::string solution_csv(const GridField& f) {
  const int dim = f.dim();
  std::string out = "t" + x_header(dim) + ",u";
  for (int i = 0; i < dim; ++i) out += ",du_" + std::to_string(i + 1);
  out += "\n";
  for (int l = 0; l < f.grid.levels; ++l) {
    const std::string t = num(f.grid.time(l));
    for (std::size_t i = 0; i < f.grid.space.size(); ++i) {
      out += t;
      const Vec x = f.grid.space.node(i);
      for (int d = 0; d < dim; ++d) out += "," + num(x[d]);
      out += "," + num(f.value(l, i));
      const Vec g = f.gradient(l, i);
      for (int d = 0; d < dim; ++d) out += "," + num(g[d]);
      out += "\n";
    }
  }
  return out;
}

std::string trace_csv(const IterationTrace& tr) {
  std::string out = "iteration,delta,ratio,residual\n";
  for (std::size_t k = 0; k < tr.deltas.size(); ++k) {
    out += std::to_string(k + 1) + "," + num(tr.deltas[k]) + ",";
    if (k >= 1 && k - 1 < tr.ratios.size()) out += num(tr.ratios[k - 1]);
    out += ",";
    if (k < tr.residuals.size()) out += num(tr.residuals[k]);
    out += "\n";
  }
  return out;
}

std::string crosscheck_csv(const CrossCheckReport& r, int dim) {
  std::string out = "t" + x_header(dim) + ",u_pde,mc_mean,mc_stderr,abs_error,discrepancy,passed,skipped\n";
  for (const auto& p : r.points) {
    out += num(p.t);
    for (int d = 0; d < dim; ++d) out += "," + num(p.x[d]);
    out += "," + num(p.u_pde) + "," + num(p.mc_mean) + "," + num(p.mc_stderr) + "," + num(p.abs_error) + "," +
           num(p.discrepancy) + "," + (p.passed ? "1" : "0") + "," + (p.skipped ? "1" : "0") + "\n";
  }
  return out;
}

std::string validation_csv(const ValidationReport& r) {
  std::string out = "check,passed,worst_margin,measured\n";
  for (const auto& c : r.checks) {
    out += c.name + "," + (c.passed ? "1" : "0") + "," + num(c.worst_margin) + "," + num(c.measured) + "\n";
  }
  return out;
}

std::string stability_csv(const StabilityReport& r) {
  std::string out = "radius,converged,iterations,gap_to_next\n";
  for (std::size_t j = 0; j < r.rungs.size(); ++j) {
    const RungResult& rung = r.rungs[j];
    out += num(rung.radius) + "," + (rung.converged ? "1" : "0") + "," + std::to_string(rung.iterations) + ",";
    if (j < r.gaps.size()) out += num(r.gaps[j]);
    out += "\n";
  }
  return out;
}

std::string saddle_csv(const SaddleField& s) {
  const int dim = s.grid.space.dim;
  std::string out = "t" + x_header(dim) + ",delta_star,eta_star\n";
  for (int l = 0; l < s.grid.levels; ++l) {
    const std::string t = num(s.grid.time(l));
    for (std::size_t i = 0; i < s.grid.space.size(); ++i) {
      const std::size_t k = static_cast<std::size_t>(l) * s.grid.space.size() + i;
      out += t;
      const Vec x = s.grid.space.node(i);
      for (int d = 0; d < dim; ++d) out += "," + num(x[d]);
      out += "," + std::to_string(s.delta_star[k]) + "," + std::to_string(s.eta_star[k]) + "\n";
    }
  }
  return out;
}

void write_file(const std::filesystem::path& path, std::string_view content) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw Error(ErrorKind::Io, "cannot write " + path.string());
  os.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!os) throw Error(ErrorKind::Io, "write failed for " + path.string());
}

std::string join(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? ", " : "") + num(v[i]);
  return out;
}

}  // namespace

void write_crosscheck_csv(const CrossCheckReport& report, int dim, const std::filesystem::path& file) {
  write_file(file, crosscheck_csv(report, dim));
}

Manifest export_result(const RunResult& r, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::Io, "cannot create " + dir.string() + ": " + ec.message());

  std::vector<std::pair<std::string, std::string>> files;
  if (!r.config.source_text.empty()) files.emplace_back("input.cfg", r.config.source_text);
  files.emplace_back("validation.csv", validation_csv(r.validation));
  if (!r.solution.u.empty()) {
    files.emplace_back("solution.csv", solution_csv(r.solution));
    files.emplace_back("trace.csv", trace_csv(r.trace));
  }
  if (r.saddle) files.emplace_back("saddle.csv", saddle_csv(*r.saddle));
  if (r.stability) files.emplace_back("stability.csv", stability_csv(*r.stability));
  if (!r.crosscheck.points.empty()) files.emplace_back("crosscheck.csv", crosscheck_csv(r.crosscheck, r.problem.dim));

  Manifest m;
  for (const auto& [name, content] : files) {
    write_file(dir / name, content);
    m.files.push_back({name, sha256_hex(content)});
  }

  const RunConfig& c = r.config;
  std::ostringstream os;
  os << "[problem]\n"
     << "name = " << r.problem.name << "\n"
     << "dim = " << r.problem.dim << "\n"
     << "horizon = " << num(r.problem.horizon) << "\n"
     << "suite = " << to_string(r.problem.suite) << "\n\n"
     << "[grid]\n"
     << "radius = " << num(r.problem.grid.radius) << "\n"
     << "nodes = " << r.problem.grid.nodes_per_dim << "\n"
     << "levels = " << r.problem.grid.levels << "\n\n"
     << "[run]\n"
     << "kappa = " << (c.kappa_adaptive ? std::string("adaptive") : num(c.kappa)) << "\n"
     << "tol = " << num(c.tol) << "\n"
     << "sup_tol = " << num(c.sup_tol) << "\n"
     << "max_iter = " << c.max_iter << "\n"
     << "quad_nodes = " << c.quad_nodes_per_dim << "\n"
     << "tail_cut = " << num(c.tail_cut_sigmas) << "\n"
     << "ladder = " << join(c.ladder_for(r.problem)) << "\n"
     << "seed = " << c.mc.seed << "\n"
     << "mc_paths = " << c.mc.n_paths << "\n"
     << "mc_dt = " << num(c.mc.dt) << "\n"
     << "bias_allowance = " << num(c.mc.bias_allowance) << "\n\n"
     << "[result]\n"
     << "route = " << to_string(r.route) << "\n"
     << "kappa_used = " << num(r.kappa) << "\n";
  if (r.cutoffs) {
    os << "k_x = " << num(r.cutoffs->k_x) << "\n"
       << "k_u = " << num(r.cutoffs->k_u) << "\n"
       << "k_p = " << num(r.cutoffs->k_p) << "\n";
  }
  os << "iterations = " << r.trace.iterations << "\n"
     << "converged = " << (r.converged() ? "true" : "false") << "\n"
     << "residual = " << num(r.residual) << "\n"
     << "validation = " << (r.validation.passed() ? "pass" : "fail") << "\n"
     << "crosscheck = " << (r.crosscheck.passed() ? "pass" : "fail") << "\n"
     << "exit_code = " << r.exit_code() << "\n";
  if (r.error) os << "error_stage = " << r.error->stage << "\nerror = " << r.error->message << "\n";
  for (std::size_t i = 0; i < r.warnings.size(); ++i) os << "warning_" << i + 1 << " = " << r.warnings[i] << "\n";
  os << "\n[files]\n";
  for (const auto& f : m.files) os << f.file << " = " << f.sha256 << "\n";
  m.text = os.str();
  write_file(dir / "manifest.cfg", m.text);
  return m;
}

namespace {

std::vector<double> parse_row(const std::string& line, std::size_t line_no, const std::filesystem::path& file) {
  std::vector<double> row;
  std::istringstream is(line);
  std::string cell;
  while (std::getline(is, cell, ',')) {
    try {
      std::size_t used = 0;
      row.push_back(std::stod(cell, &used));
      if (cell.find_first_not_of(" \t\r", used) != std::string::npos) throw std::invalid_argument(cell);
    } catch (const std::exception&) {
      throw ParseError(static_cast<int>(line_no), 1, file.string() + ": bad number '" + cell + "'");
    }
  }
  return row;
}

}  // namespace

GridField read_solution_csv(const std::filesystem::path& file, const SpaceTimeGrid& grid) {
  std::ifstream in(file);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + file.string());
  const int dim = grid.space.dim;
  const std::size_t width = 2 + 2 * static_cast<std::size_t>(dim);
  GridField f = GridField::zeros(grid);
  std::string line;
  std::getline(in, line);
  std::size_t line_no = 1;
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::vector<double> row = parse_row(line, line_no, file);
    if (row.size() != width) throw ParseError(static_cast<int>(line_no), 1, "expected " + std::to_string(width) + " columns");
    if (rows >= grid.nodes()) throw Error(ErrorKind::Data, "solution file has more rows than the grid");
    const int l = static_cast<int>(rows / grid.space.size());
    const std::size_t i = rows % grid.space.size();
    f.value(l, i) = row[1 + static_cast<std::size_t>(dim)];
    Vec g(dim);
    for (int d = 0; d < dim; ++d) g[d] = row[2 + static_cast<std::size_t>(dim + d)];
    f.set_gradient(l, i, g);
    ++rows;
  }
  if (rows != grid.nodes()) throw Error(ErrorKind::Data, "solution file does not match the grid");
  f.kind = FieldKind::Iterate;
  return f;
}

std::vector<PathStart> read_points(const std::filesystem::path& file, int dim) {
  std::ifstream in(file);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + file.string());
  std::vector<PathStart> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::vector<double> row = parse_row(line, line_no, file);
    if (static_cast<int>(row.size()) != dim + 1) {
      throw ParseError(static_cast<int>(line_no), 1, "expected t and " + std::to_string(dim) + " coordinate(s)");
    }
    PathStart p;
    p.t = row[0];
    p.x = Vec(dim);
    for (int d = 0; d < dim; ++d) p.x[d] = row[static_cast<std::size_t>(d + 1)];
    out.push_back(p);
  }
  return out;
}

std::map<std::string, std::string> read_manifest(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + file.string());
  std::map<std::string, std::string> out;
  std::string section;
  std::string line;
  int line_no = 0;
  auto trim = [](std::string s) {
    const auto a = s.find_first_not_of(" \t\r");
    const auto b = s.find_last_not_of(" \t\r");
    return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
  };
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty() || line.front() == '#') continue;
    if (line.front() == '[') {
      section = trim(line.substr(1, line.find(']') - 1));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError(line_no, 1, "expected 'key = value'");
    out[section + "." + trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return out;
}

}  // namespace semilin
