#include "semilin/picard.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "parallel.hpp"
#include "semilin/errors.hpp"
#include "semilin/rng.hpp"

namespace semilin {

namespace {

void require_same_grid(const GridField& a, const GridField& b) {
  if (a.u.size() != b.u.size() || a.grad.size() != b.grad.size() ||
      a.grid.levels != b.grid.levels || a.grid.space.nodes_per_dim != b.grid.space.nodes_per_dim ||
      a.grid.space.dim != b.grid.space.dim) {
    throw Error(ErrorKind::Precondition, "fields live on different grids");
  }
}

double level_weight(const SpaceTimeGrid& grid, int level, double kappa) {
  return std::exp(-kappa * (grid.horizon - grid.time(level)));
}

template <typename ValueAt, typename GradAt>
double weighted_sup(const SpaceTimeGrid& grid, double kappa, ValueAt value_at, GradAt grad_at) {
  const std::size_t n = grid.space.size();
  const int dim = grid.space.dim;
  double sup_u = 0.0;
  double sup_g = 0.0;
  for (int l = 0; l < grid.levels; ++l) {
    const double w = level_weight(grid, l, kappa);
    double lu = 0.0;
    double lg = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t k = static_cast<std::size_t>(l) * n + i;
      lu = std::max(lu, std::abs(value_at(k)));
      double g2 = 0.0;
      for (int d = 0; d < dim; ++d) {
        const double g = grad_at(k * dim + d);
        g2 += g * g;
      }
      lg = std::max(lg, g2);
    }
    sup_u = std::max(sup_u, w * lu);
    sup_g = std::max(sup_g, w * std::sqrt(lg));
  }
  return sup_u + sup_g;
}

// Central difference of node data along axis d, one-sided at the faces.
double node_difference(const SpatialGrid& grid, std::span<const double> values, std::size_t flat, int d) {
  auto idx = grid.multi_index(flat);
  const int i = idx[d];
  const int n = grid.nodes_per_dim;
  const int lo = std::max(i - 1, 0);
  const int hi = std::min(i + 1, n - 1);
  idx[d] = hi;
  const double vh = values[grid.flat_index(idx)];
  idx[d] = lo;
  const double vl = values[grid.flat_index(idx)];
  return (vh - vl) / ((hi - lo) * grid.spacing());
}

// Terminal data is a callable, often with kinks. A fixed lattice finer than the grid keeps the
// kink quadrature error small and smooth in (x, t), which the residual check differentiates.
double terminal_spacing(const SpatialGrid& grid) {
  switch (grid.dim) {
    case 1: return grid.spacing() / 8.0;
    case 2: return grid.spacing() / 2.0;
    default: return grid.spacing();
  }
}

}  // namespace

double kappa_norm(const GridField& field, double kappa) {
  return weighted_sup(
      field.grid, kappa, [&](std::size_t k) { return field.u[k]; },
      [&](std::size_t k) { return field.grad[k]; });
}

double kappa_distance(const GridField& a, const GridField& b, double kappa) {
  require_same_grid(a, b);
  return weighted_sup(
      a.grid, kappa, [&](std::size_t k) { return a.u[k] - b.u[k]; },
      [&](std::size_t k) { return a.grad[k] - b.grad[k]; });
}

GridField difference(const GridField& a, const GridField& b) {
  require_same_grid(a, b);
  GridField out = a;
  for (std::size_t k = 0; k < out.u.size(); ++k) out.u[k] -= b.u[k];
  for (std::size_t k = 0; k < out.grad.size(); ++k) out.grad[k] -= b.grad[k];
  return out;
}

double gradient_consistency(const GridField& field) {
  const SpatialGrid& sg = field.grid.space;
  const int dim = sg.dim;
  double worst = 0.0;
  for (int l = 0; l < field.grid.levels; ++l) {
    const auto values = field.level_values(l);
    for (std::size_t i = 0; i < sg.size(); ++i) {
      const auto idx = sg.multi_index(i);
      bool interior = true;
      for (int d = 0; d < dim; ++d) interior = interior && idx[d] > 0 && idx[d] < sg.nodes_per_dim - 1;
      if (!interior) continue;
      const Vec g = field.gradient(l, i);
      for (int d = 0; d < dim; ++d) {
        worst = std::max(worst, std::abs(g[d] - node_difference(sg, values, i, d)));
      }
    }
  }
  return worst;
}

GridField initial_iterate(const Problem& problem) {
  const SpaceTimeGrid grid = problem.space_time_grid();
  GridField field = GridField::zeros(grid);
  const Integrand beta = Integrand::function(problem.terminal, grid.space.box());
  const std::size_t n = grid.space.size();
  std::vector<double> b(n);
  std::vector<Vec> gb(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Vec x = grid.space.node(i);
    b[i] = problem.terminal(x);
    gb[i] = beta.gradient(x);
  }
  for (int l = 0; l < grid.levels; ++l) {
    for (std::size_t i = 0; i < n; ++i) {
      field.value(l, i) = b[i];
      field.set_gradient(l, i, gb[i]);
    }
  }
  field.check_finite();
  return field;
}

GridField apply_T(const GridField& field, const Problem& problem, const KernelParams& params,
                  ApplyStats* stats) {
  params.validate();
  const SpaceTimeGrid grid = problem.space_time_grid();
  if (field.u.size() != grid.nodes() || field.grid.levels != grid.levels ||
      field.grid.space.nodes_per_dim != grid.space.nodes_per_dim || field.dim() != problem.dim) {
    throw Error(ErrorKind::Precondition, "field is not defined on the problem grid");
  }
  const SpatialGrid& sg = grid.space;
  const std::size_t n = sg.size();
  const int levels = grid.levels;
  const int last = levels - 1;
  const int dim = problem.dim;
  const double dt = grid.dt();

  // H along the current iterate, one slice per level.
  std::vector<double> hslice(grid.nodes());
  for (int l = 0; l < levels; ++l) {
    const double t = grid.time(l);
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t k = field.index(l, i);
      hslice[k] = problem.hamiltonian(field.gradient(l, i), field.u[k], sg.node(i), t);
    }
  }
  std::vector<Integrand> slices;
  slices.reserve(levels);
  for (int l = 0; l < levels; ++l) {
    slices.push_back(Integrand::sampled(sg, std::span<const double>(hslice).subspan(l * n, n)));
  }
  const Integrand beta = Integrand::function(problem.terminal, sg.box());
  KernelParams terminal_params = params;
  terminal_params.align_spacing = terminal_spacing(sg);

  GridField out = GridField::zeros(grid);
  std::vector<std::size_t> empty(static_cast<std::size_t>(n) * last, 0);

  std::optional<Covariance> shared;
  if (problem.diffusion.constant) shared.emplace(problem.diffusion.a(sg.node(0), 0.0));

  detail::parallel_for(n * static_cast<std::size_t>(last), [&](std::size_t job) {
    const int l = static_cast<int>(job / n);
    const std::size_t i = job % n;
    const Vec x = sg.node(i);
    const double t = grid.time(l);
    const Covariance cov = shared ? *shared : Covariance(problem.diffusion.a(params.frozen_point.value_or(x), t));

    const Convolution term = convolve_with(beta, x, GaussianKernel(cov, grid.horizon - t), terminal_params, true, true);
    double u = term.value;
    Vec g = term.gradient;
    std::size_t misses = term.empty_region ? 1 : 0;

    // s = t endpoint: the kernel collapses to a point mass.
    const std::span<const double> here = std::span<const double>(hslice).subspan(l * n, n);
    u += 0.5 * dt * here[i];
    for (int d = 0; d < dim; ++d) g[d] += 0.5 * dt * node_difference(sg, here, i, d);

    for (int s = l + 1; s <= last; ++s) {
      const double w = s == last ? 0.5 * dt : dt;
      const Convolution c = convolve_with(slices[s], x, GaussianKernel(cov, grid.time(s) - t), params, true, true);
      if (c.empty_region) ++misses;
      u += w * c.value;
      g += w * c.gradient;
    }
    out.value(l, i) = u;
    out.set_gradient(l, i, g);
    empty[job] = misses;
  });

  const Integrand terminal = Integrand::function(problem.terminal, sg.box());
  for (std::size_t i = 0; i < n; ++i) {
    const Vec x = sg.node(i);
    out.value(last, i) = problem.terminal(x);
    out.set_gradient(last, i, terminal.gradient(x));
  }

  if (stats) {
    std::size_t total = 0;
    for (std::size_t e : empty) total += e;
    stats->empty_regions += total;
    stats->convolutions += n * static_cast<std::size_t>(last) * (static_cast<std::size_t>(last) + 3) / 2;
  }
  out.check_finite();
  return out;
}

double pde_residual(const GridField& field, const Problem& problem, const ResidualOptions& options) {
  const SpaceTimeGrid& grid = field.grid;
  const SpatialGrid& sg = grid.space;
  const int dim = sg.dim;
  if (grid.levels < 3 || sg.nodes_per_dim < 3) {
    throw Error(ErrorKind::Precondition, "residual needs at least 3 time levels and 3 nodes per axis");
  }
  const double margin = options.margin >= 0.0 ? options.margin : 0.25 * sg.radius;
  const double band = options.terminal_band >= 0.0 ? options.terminal_band : 0.25 * grid.horizon;
  const double h = sg.spacing();
  const double dt = grid.dt();
  const std::size_t n = sg.size();

  double worst = 0.0;
  for (int l = 1; l < grid.levels - 1; ++l) {
    const double t = grid.time(l);
    if (t > grid.horizon - band + 1e-12) continue;
    const auto now = field.level_values(l);
    for (std::size_t i = 0; i < n; ++i) {
      const auto idx = sg.multi_index(i);
      const Vec x = sg.node(i);
      bool inside = true;
      for (int d = 0; d < dim; ++d) {
        inside = inside && idx[d] > 0 && idx[d] < sg.nodes_per_dim - 1 &&
                 std::abs(x[d]) <= sg.radius - margin + 1e-12;
      }
      if (!inside) continue;

      auto at = [&](int d1, int s1, int d2, int s2) {
        auto j = idx;
        j[d1] += s1;
        j[d2] += s2;
        return now[sg.flat_index(j)];
      };
      const double u = now[i];
      const double ut = (field.value(l + 1, i) - field.value(l - 1, i)) / (2.0 * dt);
      Vec p(dim);
      Mat hess(dim, dim);
      for (int d = 0; d < dim; ++d) {
        p[d] = (at(d, 1, d, 0) - at(d, -1, d, 0)) / (2.0 * h);
        hess(d, d) = (at(d, 1, d, 0) - 2.0 * u + at(d, -1, d, 0)) / (h * h);
        for (int e = 0; e < d; ++e) {
          const double m = (at(d, 1, e, 1) - at(d, 1, e, -1) - at(d, -1, e, 1) + at(d, -1, e, -1)) / (4.0 * h * h);
          hess(d, e) = m;
          hess(e, d) = m;
        }
      }
      const Mat a = problem.diffusion.a(x, t);
      const double r = ut + 0.5 * (a.cwiseProduct(hess)).sum() + problem.hamiltonian(p, u, x, t);
      worst = std::max(worst, std::abs(r));
    }
  }
  return worst;
}

IterateResult iterate(const Problem& problem, double kappa, double tol, int max_iter,
                      const KernelParams& params, const IterateOptions& options) {
  return iterate_from(initial_iterate(problem), problem, kappa, tol, max_iter, params, options);
}

IterateResult iterate_from(GridField start, const Problem& problem, double kappa, double tol,
                           int max_iter, const KernelParams& params, const IterateOptions& options) {
  if (!(kappa >= 0.0)) throw Error(ErrorKind::Precondition, "kappa must be nonnegative");
  if (!(tol > 0.0)) throw Error(ErrorKind::Precondition, "tolerance must be positive");
  if (max_iter < 1) throw Error(ErrorKind::Precondition, "max_iter must be at least 1");

  IterateResult result{std::move(start), {}};
  IterationTrace& trace = result.trace;
  trace.kappa = kappa;
  int growth_run = 0;
  for (int it = 0; it < max_iter; ++it) {
    ApplyStats stats;
    GridField next = apply_T(result.field, problem, params, &stats);
    trace.empty_regions += stats.empty_regions;
    const double delta = kappa_distance(next, result.field, kappa);
    const double sup_delta = kappa_distance(next, result.field, 0.0);
    if (!trace.deltas.empty() && trace.deltas.back() > 0.0) {
      trace.ratios.push_back(delta / trace.deltas.back());
      growth_run = delta > trace.deltas.back() ? growth_run + 1 : 0;
    }
    trace.deltas.push_back(delta);
    trace.sup_deltas.push_back(sup_delta);
    result.field = std::move(next);
    trace.iterations = it + 1;
    if (options.record_residuals) {
      trace.residuals.push_back(pde_residual(result.field, problem, options.residual));
    }
    if (delta < tol && sup_delta < options.sup_tol) {
      trace.converged = true;
      break;
    }
    if (growth_run >= options.divergence_run) {
      trace.diverged = true;
      break;
    }
  }
  result.field.kind = trace.converged ? FieldKind::Solution : FieldKind::Iterate;
  return result;
}

GridField random_bump_field(const SpaceTimeGrid& grid, std::uint64_t seed, std::uint64_t stream) {
  constexpr int kBumps = 3;
  const CounterStream rng(seed, stream, 0xB0B);
  const SpatialGrid& sg = grid.space;
  const int dim = sg.dim;
  struct Bump {
    Vec centre;
    double width;
    double amp;
    double omega;
    double phase;
  };
  std::vector<Bump> bumps;
  std::uint64_t k = 0;
  for (int b = 0; b < kBumps; ++b) {
    Bump bump;
    bump.centre = Vec(dim);
    for (int d = 0; d < dim; ++d) bump.centre[d] = (rng.uniform(k++) - 0.5) * sg.radius;
    bump.width = 0.5 + 1.5 * rng.uniform(k++);
    bump.amp = (2.0 * rng.uniform(k++) - 1.0) / kBumps;
    bump.omega = 3.0 * rng.uniform(k++);
    bump.phase = 2.0 * std::numbers::pi * rng.uniform(k++);
    bumps.push_back(bump);
  }
  GridField field = GridField::zeros(grid);
  for (int l = 0; l < grid.levels; ++l) {
    const double t = grid.time(l);
    for (std::size_t i = 0; i < sg.size(); ++i) {
      const Vec x = sg.node(i);
      double u = 0.0;
      Vec g = zeros(dim);
      for (const Bump& b : bumps) {
        const Vec off = x - b.centre;
        const double time_factor = (1.0 + 0.3 * std::sin(b.omega * t + b.phase)) / 1.3;
        const double e = b.amp * time_factor * std::exp(-0.5 * off.squaredNorm() / (b.width * b.width));
        u += e;
        g -= e / (b.width * b.width) * off;
      }
      field.value(l, i) = u;
      field.set_gradient(l, i, g);
    }
  }
  return field;
}

std::vector<double> contraction_profile(const Problem& problem, const std::vector<double>& kappas,
                                        int n_pairs, const KernelParams& params, std::uint64_t seed) {
  if (n_pairs < 1) throw Error(ErrorKind::Precondition, "n_pairs must be at least 1");
  const SpaceTimeGrid grid = problem.space_time_grid();
  std::vector<double> best(kappas.size(), 0.0);
  std::uint64_t stream = 0;
  for (int pair = 0; pair < n_pairs; ++pair) {
    GridField u;
    GridField v;
    bool distinct = false;
    for (int attempt = 0; attempt < 16 && !distinct; ++attempt) {
      u = random_bump_field(grid, seed, stream++);
      v = random_bump_field(grid, seed, stream++);
      distinct = kappa_distance(u, v, 0.0) > 0.0;
    }
    if (!distinct) throw Error(ErrorKind::Data, "could not sample a distinct field pair");
    const GridField tu = apply_T(u, problem, params);
    const GridField tv = apply_T(v, problem, params);
    for (std::size_t k = 0; k < kappas.size(); ++k) {
      const double den = kappa_distance(u, v, kappas[k]);
      if (den > 0.0) best[k] = std::max(best[k], kappa_distance(tu, tv, kappas[k]) / den);

      // Flat-in-time differences are far from extremal once weighted. Also probe a difference whose
      // weighted size is constant on [t0, T]; t0 keeps it above e^-20 so T u - T w does not cancel.
      GridField w = u;
      const std::size_t per_level = grid.space.size();
      const std::size_t dim = static_cast<std::size_t>(grid.space.dim);
      const double t0 = std::max(0.0, grid.horizon - 20.0 / kappas[k]);
      for (int l = 0; l < grid.levels; ++l) {
        const double damp = std::exp(-kappas[k] * std::max(grid.time(l) - t0, 0.0));
        const std::size_t base = static_cast<std::size_t>(l) * per_level;
        for (std::size_t i = base; i < base + per_level; ++i) {
          w.u[i] += damp * (v.u[i] - u.u[i]);
          for (std::size_t d = 0; d < dim; ++d) w.grad[i * dim + d] += damp * (v.grad[i * dim + d] - u.grad[i * dim + d]);
        }
      }
      const double wden = kappa_distance(u, w, kappas[k]);
      if (wden > 0.0) {
        best[k] = std::max(best[k], kappa_distance(tu, apply_T(w, problem, params), kappas[k]) / wden);
      }
    }
  }
  return best;
}

double estimate_contraction(const Problem& problem, double kappa, int n_pairs,
                            const KernelParams& params, std::uint64_t seed) {
  return contraction_profile(problem, {kappa}, n_pairs, params, seed).front();
}

KappaSelection select_kappa(const Problem& problem, const KernelParams& params, std::uint64_t seed,
                            double start, double target, double cap, int n_pairs) {
  if (!(start > 0.0) || !(cap >= start)) throw Error(ErrorKind::Precondition, "invalid kappa range");
  std::vector<double> kappas;
  for (double k = start; k <= cap * (1.0 + 1e-12); k *= 2.0) kappas.push_back(k);
  // One set of operator applications serves every candidate.
  const std::vector<double> est = contraction_profile(problem, kappas, n_pairs, params, seed);
  KappaSelection sel;
  for (std::size_t k = 0; k < kappas.size(); ++k) {
    sel.history.emplace_back(kappas[k], est[k]);
    sel.kappa = kappas[k];
    sel.estimate = est[k];
    if (est[k] < target) return sel;
  }
  sel.capped = true;
  return sel;
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw Error(ErrorKind::Precondition, "slope needs at least two paired samples");
  }
  double mx = 0.0;
  double my = 0.0;
  const double n = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= n;
  my /= n;
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = std::log(x[i]) - mx;
    sxy += dx * (std::log(y[i]) - my);
    sxx += dx * dx;
  }
  return sxy / sxx;
}

}  // namespace semilin
