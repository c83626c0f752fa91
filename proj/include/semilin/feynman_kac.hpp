#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "semilin/grid.hpp"
#include "semilin/linalg.hpp"
#include "semilin/problem.hpp"

namespace semilin {

/// dX = b(X, t) dt + sigma(X, t) dW with |b| <= K(1+|x|) and |sigma| <= M.
struct SDESpec {
  int dim = 1;
  std::function<Vec(const Vec& x, double t)> drift;
  std::function<Mat(const Vec& x, double t)> diffusion;
  double K = 1.0;
  double M = 1.0;

  /// Checks both growth bounds on a tensor lattice over [-radius, radius]^dim x [0, horizon].
  /// Throws Validation naming the first violation.
  void validate(double radius = 8.0, double horizon = 1.0) const;

  /// Builds and validates in one step.
  static SDESpec checked(int dim, std::function<Vec(const Vec&, double)> drift,
                         std::function<Mat(const Vec&, double)> diffusion, double K, double M,
                         double radius = 8.0, double horizon = 1.0);
  static SDESpec brownian(int dim, double scale = 1.0);
};

struct PathStart {
  Vec x;
  double t = 0.0;
};

/// Euler-Maruyama paths stored in full: states[path][step] for steps 0..n_steps.
struct PathEnsemble {
  int dim = 1;
  int n_paths = 0;
  int n_steps = 0;
  double dt = 0.0;  // effective step (T - t) / n_steps
  PathStart start;
  std::uint64_t seed = 0;
  std::vector<double> states;         // path-major, step, then coordinate
  std::vector<unsigned char> excluded;  // non-finite state encountered
  std::size_t excluded_count = 0;

  Vec state(int path, int step) const;
  double time(int step) const { return start.t + step * dt; }
};

/// Steps = ceil((T - t)/dt). Path p, step j uses standard normals j*N .. j*N+N-1 of stream p.
PathEnsemble simulate_paths(const SDESpec& sde, const PathStart& start, double horizon, int n_paths,
                            double dt, std::uint64_t seed);

using PathScalarFn = std::function<double(const Vec& x, double t)>;
using TerminalFn = std::function<double(const Vec& x)>;

struct McEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t used = 0;
  std::size_t excluded = 0;
  std::vector<double> discount_integrals;  // per used path, int_t^T h(X_s, s) ds
};

/// E[ int_t^T e^{int_t^s h} f(X_s) ds + e^{int_t^T h} beta(X_T) ], left-endpoint rule in time.
McEstimate mc_estimate(const PathEnsemble& ensemble, const PathScalarFn& h, const PathScalarFn& f,
                       const TerminalFn& beta);

/// Same estimator without storing the paths; agrees bit-for-bit with
/// mc_estimate(simulate_paths(...)) for identical inputs.
McEstimate mc_estimate_streaming(const SDESpec& sde, const PathStart& start, double horizon,
                                 int n_paths, double dt, std::uint64_t seed, const PathScalarFn& h,
                                 const PathScalarFn& f, const TerminalFn& beta);

/// E sup_j e^{A |X_j|} over the Euler grid.
McEstimate exp_moment_probe(const SDESpec& sde, const PathStart& start, double horizon, double A,
                            int n_paths, double dt, std::uint64_t seed);

struct McSettings {
  int n_paths = 10000;
  double dt = 1e-3;
  std::uint64_t seed = 1;
  double bias_allowance = 0.01;
};

struct CrossCheckPoint {
  Vec x;
  double t = 0.0;
  double u_pde = 0.0;
  double mc_mean = 0.0;
  double mc_stderr = 0.0;
  double abs_error = 0.0;
  double discrepancy = 0.0;  // abs_error / stderr (0 when both vanish)
  bool passed = false;
  bool skipped = false;
  std::string note;
};

struct CrossCheckReport {
  std::vector<CrossCheckPoint> points;
  McSettings settings;
  std::vector<std::string> warnings;

  bool passed() const;
};

/// Linearizes H along the field, simulates the matching SDE from each point and compares the
/// stochastic representation with the field. Passes when |u - mean| <= 3 stderr + bias allowance.
CrossCheckReport crosscheck_solution(const GridField& field, const Problem& problem,
                                     const std::vector<PathStart>& points, const McSettings& settings);

/// Default probe set: t = 0, x on the first axis at -2, -1, 0, 1, 2.
std::vector<PathStart> default_crosscheck_points(int dim);

/// Order-independent-of-threads summation.
double pairwise_sum(std::span<const double> values);

}  // namespace semilin
