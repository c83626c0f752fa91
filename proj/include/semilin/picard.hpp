#pragma once

#include <cstdint>
#include <limits>
#include <utility>
#include <vector>

#include "semilin/grid.hpp"
#include "semilin/kernel.hpp"
#include "semilin/problem.hpp"

namespace semilin {

/// sup e^{-kappa(T-t)} |u|  +  sup e^{-kappa(T-t)} |D_x u|.
double kappa_norm(const GridField& field, double kappa);
/// kappa_norm of the difference, without materialising it. Both fields must share a grid.
double kappa_distance(const GridField& a, const GridField& b, double kappa);

GridField difference(const GridField& a, const GridField& b);

/// Largest |grad - central difference of u| over interior nodes.
double gradient_consistency(const GridField& field);

/// u = beta at every level, gradient of beta by central differences.
GridField initial_iterate(const Problem& problem);

struct ApplyStats {
  std::size_t convolutions = 0;
  std::size_t empty_regions = 0;
};

/// One application of the integral operator on the problem's space-time grid.
GridField apply_T(const GridField& field, const Problem& problem, const KernelParams& params,
                  ApplyStats* stats = nullptr);

struct ResidualOptions {
  // Negative values select the defaults: a quarter of the box radius, and a quarter of the horizon.
  double margin = -1.0;
  double terminal_band = -1.0;
};

/// sup |u_t + 1/2 Tr(a D^2 u) + H(D u, u, x, t)| over interior nodes, all derivatives by central
/// differences. Nodes within `margin` of the box faces or `terminal_band` of T are skipped.
double pde_residual(const GridField& field, const Problem& problem, const ResidualOptions& options = {});

struct IterationTrace {
  double kappa = 0.0;
  std::vector<double> deltas;      // kappa-norm of successive differences
  std::vector<double> sup_deltas;  // same with kappa = 0
  std::vector<double> ratios;
  std::vector<double> residuals;
  int iterations = 0;
  bool converged = false;
  bool diverged = false;  // deltas grew on 5 consecutive iterations
  std::size_t empty_regions = 0;
};

struct IterateOptions {
  // Also require the unweighted distance to fall below this (the kappa weight is lax near t = 0).
  double sup_tol = std::numeric_limits<double>::infinity();
  bool record_residuals = true;
  ResidualOptions residual;
  int divergence_run = 5;
};

struct IterateResult {
  GridField field;
  IterationTrace trace;
};

/// u_1 = beta extended constantly in time, u_{n+1} = T u_n until the distance drops below tol.
IterateResult iterate(const Problem& problem, double kappa, double tol, int max_iter,
                      const KernelParams& params, const IterateOptions& options = {});
/// Same, from a caller-supplied starting field.
IterateResult iterate_from(GridField start, const Problem& problem, double kappa, double tol,
                           int max_iter, const KernelParams& params, const IterateOptions& options = {});

/// Smooth random field with |u| <= 1 and its analytic gradient.
GridField random_bump_field(const SpaceTimeGrid& grid, std::uint64_t seed, std::uint64_t stream);

/// max over random pairs of |Tu - Tv|_kappa / |u - v|_kappa, one value per kappa.
/// The operator is applied once per pair and reused across kappas.
std::vector<double> contraction_profile(const Problem& problem, const std::vector<double>& kappas,
                                        int n_pairs, const KernelParams& params, std::uint64_t seed);
double estimate_contraction(const Problem& problem, double kappa, int n_pairs,
                            const KernelParams& params, std::uint64_t seed);

struct KappaSelection {
  double kappa = 0.0;
  double estimate = 0.0;
  bool capped = false;  // hit the cap without reaching the target
  std::vector<std::pair<double, double>> history;
};

/// Doubles kappa from `start` until the contraction estimate is below `target` (capped).
KappaSelection select_kappa(const Problem& problem, const KernelParams& params, std::uint64_t seed,
                            double start = 8.0, double target = 0.5, double cap = 1024.0,
                            int n_pairs = 4);

/// Least-squares slope of log(y) against log(x).
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace semilin
