#include "semilin/localization.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "semilin/errors.hpp"
#include "semilin/validation.hpp"

namespace semilin {

double cutoff(double z, double k) {
  if (!(k > 0.0)) throw Error(ErrorKind::Precondition, "cutoff radius must be positive");
  const double r = std::abs(z);
  if (r <= k) return 1.0;
  if (r >= 2.0 * k) return 0.0;
  return 2.0 - r / k;
}

double cutoff(const Vec& z, double k) { return cutoff(norm(z), k); }

double cutoff_product_lipschitz(double L, double phi_at_zero, double l) {
  if (!(l > 0.0)) throw Error(ErrorKind::Precondition, "cutoff radius must be positive");
  return (2.0 * l * L + std::abs(phi_at_zero)) / l + L;
}

DiffusionSpec truncate_sigma(const DiffusionSpec& diff, double k) {
  if (!(k > 0.0)) throw Error(ErrorKind::Precondition, "cutoff radius must be positive");
  if (diff.constant) return diff;
  DiffusionSpec out = diff;
  out.sigma = [sigma = diff.sigma, k](const Vec& x, double t) -> Mat {
    const double r = norm(x);
    if (r <= k) return sigma(x, t);
    return sigma(x * (k / r), t);
  };
  return out;
}

void CutoffFamily::validate() const {
  if (!(k_x > 0.0) || !(k_p > 0.0) || !(k_u > 0.0)) {
    throw Error(ErrorKind::Validation, "cutoff radii must be positive");
  }
}

namespace {

// sup |sigma| over the closed ball of radius k, sampled on the grid lattice pulled into the ball.
double sigma_sup_on_ball(const DiffusionSpec& diff, const Problem& problem, double k) {
  const SampleLattice lattice = SampleLattice::for_problem(problem, problem.dim == 1 ? 65 : 17, 5);
  double sup = 0.0;
  for (const Vec& x : lattice.xs) {
    const double r = norm(x);
    const Vec y = r > k ? Vec(x * (k / r)) : x;
    for (double t : lattice.ts) sup = std::max(sup, diff.sigma(y, t).norm());
  }
  return sup;
}

void measure_constants(LocalizedProblem& loc, double u_range, double p_range) {
  const Problem& p = loc.problem;
  const bool one_d = p.dim == 1;
  SampleLattice lattice =
      SampleLattice::for_problem(p, one_d ? 33 : 9, 5, u_range, p_range, one_d ? 41 : 11);
  const double h = lattice.fd_step;
  double growth = 0.0;
  double lip = 0.0;
  for (const Vec& x : lattice.xs) {
    for (double t : lattice.ts) {
      for (double u : lattice.us) {
        for (const Vec& q : lattice.ps) {
          const double v = p.hamiltonian(q, u, x, t);
          growth = std::max(growth, std::abs(v) / (1.0 + std::abs(u) + norm(q)));
          lip = std::max(lip, std::abs(p.hamiltonian(q, u + h, x, t) - v) / h);
          for (int d = 0; d < p.dim; ++d) {
            Vec q1 = q;
            q1[d] += h;
            lip = std::max(lip, std::abs(p.hamiltonian(q1, u, x, t) - v) / h);
          }
        }
      }
    }
  }
  loc.growth_measured = growth;
  loc.lipschitz_measured = lip;
  // Sampling can miss the exact supremum; the declared constant keeps a margin.
  loc.problem.hamiltonian.growth_K = 1.25 * std::max({growth, lip, 1e-12});
}

IterateOptions quiet_options(const SolverSettings& settings) {
  IterateOptions opts;
  opts.sup_tol = settings.sup_tol;
  opts.record_residuals = false;
  return opts;
}

}  // namespace

LocalizedProblem localize_problem(const Problem& problem, const CutoffFamily& cutoffs) {
  cutoffs.validate();
  LocalizedProblem loc;
  loc.base = problem;
  loc.cutoffs = cutoffs;
  Problem& out = loc.problem;
  out = problem;
  std::ostringstream name;
  name << problem.name << "@" << cutoffs.k_x;
  out.name = name.str();
  out.suite = Suite::A;

  const double kx = cutoffs.k_x;
  out.diffusion = truncate_sigma(problem.diffusion, kx);
  out.diffusion.sigma_bound = problem.diffusion.constant
                                  ? problem.diffusion.sigma_bound
                                  : sigma_sup_on_ball(problem.diffusion, problem, kx);
  out.terminal = [beta = problem.terminal, kx](const Vec& x) { return cutoff(x, kx) * beta(x); };

  if (problem.is_isaacs()) {
    IsaacsSpec spec = *problem.hamiltonian.isaacs;
    spec.drift = [f = spec.drift, kx](const Vec& x, double t, const ControlVec& d, const ControlVec& e) -> Vec {
      return cutoff(x, kx) * f(x, t, d, e);
    };
    spec.source = [f = spec.source, kx](const Vec& x, double t, const ControlVec& d, const ControlVec& e) {
      return cutoff(x, kx) * f(x, t, d, e);
    };
    if (!spec.bounds.h_upper) {
      spec.potential = [f = spec.potential, kx](const Vec& x, double t, const ControlVec& d,
                                                const ControlVec& e) { return cutoff(x, kx) * f(x, t, d, e); };
    }
    out.hamiltonian = HamiltonianSpec::from_isaacs(std::move(spec), problem.hamiltonian.growth_K);
    measure_constants(loc, 10.0, 10.0);
  } else {
    const double ku = cutoffs.k_u;
    const double kp = cutoffs.k_p;
    out.hamiltonian = HamiltonianSpec::generic(
        [h = problem.hamiltonian.generic_eval, kx, ku, kp](const Vec& p, double u, const Vec& x, double t) {
          const double w = cutoff(x, kx) * cutoff(u, ku) * cutoff(p, kp);
          return w == 0.0 ? 0.0 : w * h(p, u, x, t);
        },
        problem.hamiltonian.growth_K);
    measure_constants(loc, 2.2 * ku, 2.2 * kp);
  }
  out.hamiltonian.lipschitz_table.clear();
  return loc;
}

CutoffFamily calibrate_cutoffs(const Problem& problem, const SolverSettings& settings, double generous) {
  CutoffFamily family{0.5 * problem.grid.radius, generous, generous};
  if (problem.is_isaacs()) return family;
  const LocalizedProblem pilot = localize_problem(problem, family);
  const IterateResult run = iterate(pilot.problem, settings.kappa, settings.tol, settings.max_iter,
                                    settings.params, quiet_options(settings));
  double sup_u = 0.0;
  double sup_p = 0.0;
  const GridField& f = run.field;
  for (int l = 0; l < f.grid.levels; ++l) {
    for (std::size_t i = 0; i < f.grid.space.size(); ++i) {
      sup_u = std::max(sup_u, std::abs(f.value(l, i)));
      sup_p = std::max(sup_p, norm(f.gradient(l, i)));
    }
  }
  family.k_u = std::max(1.5 * sup_u, 1e-3);
  family.k_p = std::max(1.5 * sup_p, 1e-3);
  return family;
}

double ball_gap(const GridField& a, const GridField& b, double radius) {
  if (a.u.size() != b.u.size()) throw Error(ErrorKind::Precondition, "fields live on different grids");
  const SpatialGrid& sg = a.grid.space;
  double gap = 0.0;
  for (std::size_t i = 0; i < sg.size(); ++i) {
    if (norm(sg.node(i)) > radius + 1e-12) continue;
    for (int l = 0; l < a.grid.levels; ++l) gap = std::max(gap, std::abs(a.value(l, i) - b.value(l, i)));
  }
  return gap;
}

StabilityReport stability_check(const Problem& problem, const std::vector<double>& radii,
                                const CutoffFamily& base, const SolverSettings& settings) {
  if (radii.size() < 2) throw Error(ErrorKind::Precondition, "stability check needs at least two radii");
  for (std::size_t j = 1; j < radii.size(); ++j) {
    if (!(radii[j] > radii[j - 1])) throw Error(ErrorKind::Precondition, "ladder radii must increase");
  }
  StabilityReport report;
  report.radii = radii;
  report.conclusive = true;
  for (double r : radii) {
    RungResult rung;
    rung.radius = r;
    try {
      CutoffFamily family = base;
      family.k_x = r;
      const LocalizedProblem loc = localize_problem(problem, family);
      IterateResult run = iterate(loc.problem, settings.kappa, settings.tol, settings.max_iter,
                                  settings.params, quiet_options(settings));
      rung.converged = run.trace.converged;
      rung.iterations = run.trace.iterations;
      rung.solution = std::move(run.field);
      rung.trace = std::move(run.trace);
    } catch (const std::exception& e) {
      rung.error = e.what();
    }
    report.conclusive = report.conclusive && rung.converged;
    report.rungs.push_back(std::move(rung));
  }
  for (std::size_t j = 0; j + 1 < report.rungs.size(); ++j) {
    const RungResult& lo = report.rungs[j];
    const RungResult& hi = report.rungs[j + 1];
    report.gaps.push_back(lo.error.empty() && hi.error.empty()
                              ? ball_gap(lo.solution, hi.solution, 0.5 * radii[j])
                              : std::numeric_limits<double>::infinity());
  }
  report.monotone = true;
  for (std::size_t j = 1; j < report.gaps.size(); ++j) {
    report.monotone = report.monotone && report.gaps[j] < report.gaps[j - 1];
  }
  return report;
}

}  // namespace semilin
