#pragma once

#include <string>
#include <vector>

#include "semilin/grid.hpp"
#include "semilin/kernel.hpp"
#include "semilin/picard.hpp"
#include "semilin/problem.hpp"

namespace semilin {

/// Piecewise-linear bump: 1 on |z| <= k, 2 - |z|/k on k <= |z| <= 2k, 0 beyond. Lipschitz 1/k.
double cutoff(double z, double k);
double cutoff(const Vec& z, double k);

/// Lipschitz bound for xi_l * phi when phi is L-Lipschitz on the support of xi_l:  (2lL + |phi(0)|)/l + L.
double cutoff_product_lipschitz(double L, double phi_at_zero, double l);

/// sigma(x) for |x| <= k, sigma(k x/|x|) outside.
DiffusionSpec truncate_sigma(const DiffusionSpec& diff, double k);

struct CutoffFamily {
  double k_x = 4.0;
  double k_p = 4.0;
  double k_u = 4.0;

  void validate() const;
  static CutoffFamily uniform(double k) { return {k, k, k}; }
};

/// A problem rewritten with bounded, globally Lipschitz data; `problem` is declared under suite A
/// and carries lattice-measured constants.
struct LocalizedProblem {
  Problem base;
  CutoffFamily cutoffs;
  Problem problem;
  double growth_measured = 0.0;     // sup |H_loc| / (1 + |u| + |p|) on the lattice
  double lipschitz_measured = 0.0;  // sup of difference quotients in (u, p)
};

/// Generic H: H xi(x) xi(u) xi(p). Isaacs: drift and source scaled by xi(x), potential too unless an
/// upper bound is declared; k_u and k_p do not apply. beta is scaled by xi(x) and sigma truncated at k_x.
LocalizedProblem localize_problem(const Problem& problem, const CutoffFamily& cutoffs);

struct SolverSettings {
  double kappa = 8.0;
  double tol = 1e-6;
  double sup_tol = 1e-5;
  int max_iter = 60;
  KernelParams params;
};

/// Pilot solve with generous value/gradient radii; returns k_u = 1.5 sup|u|, k_p = 1.5 sup|D u| and
/// k_x = half the box radius.
CutoffFamily calibrate_cutoffs(const Problem& problem, const SolverSettings& settings,
                               double generous = 1e3);

struct RungResult {
  double radius = 0.0;
  bool converged = false;
  int iterations = 0;
  std::string error;
  GridField solution;
  IterationTrace trace;
};

struct StabilityReport {
  std::vector<double> radii;
  std::vector<double> gaps;  // gaps[j]: sup |u_{j+1} - u_j| over |x| <= radii[j]/2, all levels
  std::vector<RungResult> rungs;
  bool monotone = false;
  bool conclusive = false;  // every rung converged

  double final_gap() const { return gaps.empty() ? 0.0 : gaps.back(); }
};

/// Solves the problem localized at each radius (k_x = radius; k_u, k_p from `base`).
StabilityReport stability_check(const Problem& problem, const std::vector<double>& radii,
                                const CutoffFamily& base, const SolverSettings& settings);

/// sup |a - b| over nodes with |x| <= radius, every level.
double ball_gap(const GridField& a, const GridField& b, double radius);

}  // namespace semilin
