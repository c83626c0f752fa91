#include "semilin/feynman_kac.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "parallel.hpp"
#include "semilin/errors.hpp"
#include "semilin/hamiltonian.hpp"
#include "semilin/rng.hpp"

namespace semilin {

namespace {

constexpr std::uint64_t kPathTag = 0x5DE;
constexpr double kMaxExcludedFraction = 0.01;

std::vector<Vec> lattice_points(int dim, double radius, int per_dim) {
  std::vector<Vec> out;
  std::size_t total = 1;
  for (int d = 0; d < dim; ++d) total *= per_dim;
  for (std::size_t flat = 0; flat < total; ++flat) {
    Vec x(dim);
    std::size_t rest = flat;
    for (int d = 0; d < dim; ++d) {
      x[d] = -radius + 2.0 * radius * static_cast<double>(rest % per_dim) / (per_dim - 1);
      rest /= per_dim;
    }
    out.push_back(x);
  }
  return out;
}

int step_count(double span, double dt) {
  return static_cast<int>(std::ceil(span / dt * (1.0 - 1e-12)));
}

void check_run_args(const PathStart& start, double horizon, int n_paths, double dt) {
  if (n_paths < 1) throw Error(ErrorKind::Precondition, "n_paths must be at least 1");
  if (!(dt > 0.0) || !(dt <= horizon - start.t + 1e-15)) {
    throw Error(ErrorKind::Precondition, "time step must satisfy 0 < dt <= T - t");
  }
}

// Left-endpoint discounted payoff, accumulated step by step.
struct Payoff {
  double discount = 0.0;  // int h
  double running = 0.0;

  template <typename H, typename F>
  void step(const Vec& x, double t, double dt, const H& h, const F& f) {
    running += std::exp(discount) * f(x, t) * dt;
    discount += h(x, t) * dt;
  }
  template <typename B>
  double finish(const Vec& x, const B& beta) const {
    return running + std::exp(discount) * beta(x);
  }
};

// Models supply (b, sigma) at each Euler step.
struct GenericModel {
  const SDESpec& sde;
  void coefficients(const Vec& x, double t, Vec& b, Mat& s) const {
    b = sde.drift(x, t);
    s = sde.diffusion(x, t);
  }
};

// One Euler-Maruyama step; returns false on a non-finite state.
inline bool euler_step(Vec& x, const Vec& b, const Mat& s, NormalSequence& z, double dt, double sqdt) {
  const int dim = static_cast<int>(x.size());
  Vec dw(dim);
  for (int d = 0; d < dim; ++d) dw[d] = z.next() * sqdt;
  x += b * dt + s * dw;
  return x.allFinite();
}

McEstimate summarize(std::vector<double> values, std::vector<double> discounts,
                     const std::vector<unsigned char>& excluded) {
  McEstimate est;
  const std::size_t total = values.size();
  std::vector<double> kept;
  std::vector<double> kept_discount;
  kept.reserve(total);
  for (std::size_t i = 0; i < total; ++i) {
    if (excluded[i] || !std::isfinite(values[i])) {
      ++est.excluded;
      continue;
    }
    kept.push_back(values[i]);
    if (!discounts.empty()) kept_discount.push_back(discounts[i]);
  }
  if (kept.empty()) throw Error(ErrorKind::Data, "every Monte-Carlo path was excluded");
  if (static_cast<double>(est.excluded) > kMaxExcludedFraction * static_cast<double>(total)) {
    std::ostringstream os;
    os << est.excluded << " of " << total << " paths produced non-finite values";
    throw Error(ErrorKind::Data, os.str());
  }
  est.used = kept.size();
  // Shift by the first sample so a degenerate ensemble returns its common value exactly.
  const double shift = kept.front();
  std::vector<double> centred(kept.size());
  for (std::size_t i = 0; i < kept.size(); ++i) centred[i] = kept[i] - shift;
  const double n = static_cast<double>(kept.size());
  const double mean_offset = pairwise_sum(centred) / n;
  est.mean = shift + mean_offset;
  if (kept.size() > 1) {
    for (double& c : centred) c = (c - mean_offset) * (c - mean_offset);
    est.std_error = std::sqrt(pairwise_sum(centred) / (n - 1.0) / n);
  }
  est.discount_integrals = std::move(kept_discount);
  return est;
}

// Runs every path with `visit(path, step, x, t)` on each state, including the start.
// Returns per-path exclusion flags.
template <typename Model, typename Visit>
std::vector<unsigned char> drive(const Model& model, int dim, const PathStart& start, int n_paths,
                                 int n_steps, double dt, std::uint64_t seed, Visit&& visit) {
  std::vector<unsigned char> excluded(n_paths, 0);
  const double sqdt = std::sqrt(dt);
  detail::parallel_for(static_cast<std::size_t>(n_paths), [&](std::size_t p) {
    NormalSequence z(seed, p, kPathTag);
    Vec x = start.x;
    Vec b(dim);
    Mat s(dim, dim);
    visit(p, 0, x, start.t);
    for (int j = 0; j < n_steps; ++j) {
      const double t = start.t + j * dt;
      model.coefficients(x, t, b, s);
      if (!euler_step(x, b, s, z, dt, sqdt)) {
        excluded[p] = 1;
        return;
      }
      visit(p, j + 1, x, start.t + (j + 1) * dt);
    }
  });
  return excluded;
}

/// Per-node (b*, h*, f*) with shared space-time interpolation weights.
class CoefficientTable {
 public:
  CoefficientTable(const LinearDecomposition& dec) : grid_(dec.grid), dim_(dec.grid.space.dim) {
    stride_ = dim_ + 2;
    const std::size_t nodes = grid_.nodes();
    data_.resize(nodes * stride_);
    for (std::size_t k = 0; k < nodes; ++k) {
      for (int d = 0; d < dim_; ++d) data_[k * stride_ + d] = dec.b_star[k * dim_ + d];
      data_[k * stride_ + dim_] = dec.h_star[k];
      data_[k * stride_ + dim_ + 1] = dec.f_star[k];
    }
  }

  // out has stride_ entries: b (dim), h, f.
  void eval(const Vec& x, double t, double* out) const {
    const SpatialGrid& sg = grid_.space;
    const int n = sg.nodes_per_dim;
    const double hx = sg.spacing();
    std::array<int, kMaxDim> base{};
    std::array<double, kMaxDim> frac{};
    for (int d = 0; d < dim_; ++d) {
      const double s = (std::clamp(x[d], -sg.radius, sg.radius) + sg.radius) / hx;
      const int i = std::clamp(static_cast<int>(std::floor(s)), 0, n - 2);
      base[d] = i;
      frac[d] = std::clamp(s - i, 0.0, 1.0);
    }
    const double ts = std::clamp(t, 0.0, grid_.horizon) / grid_.dt();
    const int m = std::clamp(static_cast<int>(std::floor(ts)), 0, grid_.levels - 2);
    const double wt = std::clamp(ts - m, 0.0, 1.0);
    for (int c = 0; c < stride_; ++c) out[c] = 0.0;
    const std::size_t per_level = sg.size();
    for (int corner = 0; corner < (1 << dim_); ++corner) {
      double w = 1.0;
      std::array<int, kMaxDim> idx{};
      for (int d = 0; d < dim_; ++d) {
        const bool up = (corner >> d) & 1;
        idx[d] = base[d] + (up ? 1 : 0);
        w *= up ? frac[d] : 1.0 - frac[d];
      }
      if (w == 0.0) continue;
      const std::size_t node = sg.flat_index(idx);
      const double* lo = &data_[(m * per_level + node) * stride_];
      const double* hi = &data_[((m + 1) * per_level + node) * stride_];
      for (int c = 0; c < stride_; ++c) out[c] += w * ((1.0 - wt) * lo[c] + wt * hi[c]);
    }
  }

  int stride() const { return stride_; }

 private:
  SpaceTimeGrid grid_;
  int dim_;
  int stride_;
  std::vector<double> data_;
};

}  // namespace

void SDESpec::validate(double radius, double horizon) const {
  if (dim < 1 || dim > kMaxDim) throw Error(ErrorKind::Validation, "SDE dimension must be in 1..3");
  if (!drift || !diffusion) throw Error(ErrorKind::Validation, "SDE coefficients are not set");
  if (!(K >= 0.0) || !(M >= 0.0)) throw Error(ErrorKind::Validation, "growth constants must be nonnegative");
  const int per_dim = dim == 1 ? 33 : (dim == 2 ? 17 : 9);
  for (const Vec& x : lattice_points(dim, radius, per_dim)) {
    for (int k = 0; k < 5; ++k) {
      const double t = horizon * k / 4.0;
      const Vec b = drift(x, t);
      const Mat s = diffusion(x, t);
      if (b.size() != dim || s.rows() != dim || s.cols() != dim) {
        throw Error(ErrorKind::Validation, "SDE coefficient has the wrong shape");
      }
      if (!(norm(b) <= K * (1.0 + norm(x)) * (1.0 + 1e-12))) {
        std::ostringstream os;
        os << "drift violates |b| <= K(1+|x|) at x=" << x.transpose() << ", t=" << t;
        throw Error(ErrorKind::Validation, os.str());
      }
      if (!(s.norm() <= M * (1.0 + 1e-12))) {
        std::ostringstream os;
        os << "diffusion violates |sigma| <= M at x=" << x.transpose() << ", t=" << t;
        throw Error(ErrorKind::Validation, os.str());
      }
    }
  }
}

SDESpec SDESpec::checked(int dim, std::function<Vec(const Vec&, double)> drift,
                         std::function<Mat(const Vec&, double)> diffusion, double K, double M,
                         double radius, double horizon) {
  SDESpec sde{dim, std::move(drift), std::move(diffusion), K, M};
  sde.validate(radius, horizon);
  return sde;
}

SDESpec SDESpec::brownian(int dim, double scale) {
  const Mat s = scale * identity(dim);
  return SDESpec{dim, [dim](const Vec&, double) { return zeros(dim); },
                 [s](const Vec&, double) { return s; }, 0.0, s.norm()};
}

Vec PathEnsemble::state(int path, int step) const {
  Vec x(dim);
  const std::size_t base = (static_cast<std::size_t>(path) * (n_steps + 1) + step) * dim;
  for (int d = 0; d < dim; ++d) x[d] = states[base + d];
  return x;
}

PathEnsemble simulate_paths(const SDESpec& sde, const PathStart& start, double horizon, int n_paths,
                            double dt, std::uint64_t seed) {
  check_run_args(start, horizon, n_paths, dt);
  PathEnsemble ens;
  ens.dim = sde.dim;
  ens.n_paths = n_paths;
  ens.n_steps = step_count(horizon - start.t, dt);
  ens.dt = (horizon - start.t) / ens.n_steps;
  ens.start = start;
  ens.seed = seed;
  const int dim = sde.dim;
  const std::size_t per_path = static_cast<std::size_t>(ens.n_steps + 1) * dim;
  ens.states.assign(per_path * n_paths, std::numeric_limits<double>::quiet_NaN());
  ens.excluded = drive(GenericModel{sde}, dim, start, n_paths, ens.n_steps, ens.dt, seed,
                       [&](std::size_t p, int j, const Vec& x, double) {
                         for (int d = 0; d < dim; ++d) ens.states[p * per_path + j * dim + d] = x[d];
                       });
  ens.excluded_count = static_cast<std::size_t>(std::count(ens.excluded.begin(), ens.excluded.end(), 1));
  if (static_cast<double>(ens.excluded_count) > kMaxExcludedFraction * n_paths) {
    std::ostringstream os;
    os << ens.excluded_count << " of " << n_paths << " paths reached a non-finite state";
    throw Error(ErrorKind::Data, os.str());
  }
  return ens;
}

McEstimate mc_estimate(const PathEnsemble& ens, const PathScalarFn& h, const PathScalarFn& f,
                       const TerminalFn& beta) {
  std::vector<double> values(ens.n_paths, 0.0);
  std::vector<double> discounts(ens.n_paths, 0.0);
  detail::parallel_for(static_cast<std::size_t>(ens.n_paths), [&](std::size_t p) {
    if (ens.excluded[p]) return;
    Payoff pay;
    for (int j = 0; j < ens.n_steps; ++j) pay.step(ens.state(p, j), ens.time(j), ens.dt, h, f);
    values[p] = pay.finish(ens.state(p, ens.n_steps), beta);
    discounts[p] = pay.discount;
  });
  return summarize(std::move(values), std::move(discounts), ens.excluded);
}

McEstimate mc_estimate_streaming(const SDESpec& sde, const PathStart& start, double horizon,
                                 int n_paths, double dt, std::uint64_t seed, const PathScalarFn& h,
                                 const PathScalarFn& f, const TerminalFn& beta) {
  check_run_args(start, horizon, n_paths, dt);
  const int n_steps = step_count(horizon - start.t, dt);
  const double dt_eff = (horizon - start.t) / n_steps;
  std::vector<Payoff> pays(n_paths);
  std::vector<double> values(n_paths, 0.0);
  std::vector<double> discounts(n_paths, 0.0);
  const auto excluded = drive(GenericModel{sde}, sde.dim, start, n_paths, n_steps, dt_eff, seed,
                              [&](std::size_t p, int j, const Vec& x, double) {
                                // Same time expression as PathEnsemble::time.
                                const double t = start.t + j * dt_eff;
                                if (j < n_steps) {
                                  pays[p].step(x, t, dt_eff, h, f);
                                } else {
                                  values[p] = pays[p].finish(x, beta);
                                  discounts[p] = pays[p].discount;
                                }
                              });
  return summarize(std::move(values), std::move(discounts), excluded);
}

McEstimate exp_moment_probe(const SDESpec& sde, const PathStart& start, double horizon, double A,
                            int n_paths, double dt, std::uint64_t seed) {
  if (!(A > 0.0)) throw Error(ErrorKind::Precondition, "exponent A must be positive");
  check_run_args(start, horizon, n_paths, dt);
  const int n_steps = step_count(horizon - start.t, dt);
  const double dt_eff = (horizon - start.t) / n_steps;
  std::vector<double> sup(n_paths, 0.0);
  const auto excluded = drive(GenericModel{sde}, sde.dim, start, n_paths, n_steps, dt_eff, seed,
                              [&](std::size_t p, int, const Vec& x, double) {
                                sup[p] = std::max(sup[p], std::exp(A * norm(x)));
                              });
  return summarize(std::move(sup), {}, excluded);
}

bool CrossCheckReport::passed() const {
  bool any = false;
  for (const auto& p : points) {
    if (p.skipped) continue;
    any = true;
    if (!p.passed) return false;
  }
  return any;
}

std::vector<PathStart> default_crosscheck_points(int dim) {
  std::vector<PathStart> out;
  for (double x : {-2.0, -1.0, 0.0, 1.0, 2.0}) {
    Vec v = zeros(dim);
    v[0] = x;
    out.push_back({v, 0.0});
  }
  return out;
}

CrossCheckReport crosscheck_solution(const GridField& field, const Problem& problem,
                                     const std::vector<PathStart>& points, const McSettings& settings) {
  CrossCheckReport report;
  report.settings = settings;
  const SpaceTimeGrid& grid = field.grid;
  const LinearDecomposition dec = decompose_to_linear(problem.hamiltonian, field);
  const CoefficientTable table(dec);
  const int dim = grid.space.dim;
  const Box box = grid.space.box();
  std::optional<Mat> constant_sigma;
  if (problem.diffusion.constant) constant_sigma = problem.diffusion.sigma(zeros(dim), 0.0);

  auto beta = [&](const Vec& x) { return problem.terminal(box.clamp(x)); };

  std::uint64_t point_index = 0;
  for (const PathStart& start : points) {
    CrossCheckPoint cp;
    cp.x = start.x;
    cp.t = start.t;
    const std::uint64_t stream_seed = settings.seed * 0x9E3779B97F4A7C15ULL + point_index++;
    if (start.x.size() != dim || !box.contains(start.x) || start.t < 0.0 || start.t > grid.horizon) {
      cp.skipped = true;
      cp.note = "point outside the solution grid";
      report.warnings.push_back("skipped crosscheck point outside the grid");
      report.points.push_back(cp);
      continue;
    }
    cp.u_pde = interpolate_space_time(grid, field.u, start.x, start.t);
    if (grid.horizon - start.t <= 0.0) {
      cp.mc_mean = beta(start.x);
      cp.mc_stderr = 0.0;
    } else {
      const double span = grid.horizon - start.t;
      const double dt = std::min(settings.dt, span);
      const int n_steps = step_count(span, dt);
      const double dt_eff = span / n_steps;
      std::vector<double> values(settings.n_paths, 0.0);
      std::vector<unsigned char> excluded(settings.n_paths, 0);
      const double sqdt = std::sqrt(dt_eff);
      // One table lookup per step serves drift, discount and source.
      detail::parallel_for(static_cast<std::size_t>(settings.n_paths), [&](std::size_t p) {
        NormalSequence z(stream_seed, p, kPathTag);
        Vec x = start.x;
        Vec b(dim);
        Mat s = constant_sigma ? *constant_sigma : Mat(dim, dim);
        std::array<double, kMaxDim + 2> c{};
        Payoff pay;
        for (int j = 0; j < n_steps; ++j) {
          const double t = start.t + j * dt_eff;
          table.eval(x, t, c.data());
          pay.step(x, t, dt_eff, [&](const Vec&, double) { return c[dim]; },
                   [&](const Vec&, double) { return c[dim + 1]; });
          for (int d = 0; d < dim; ++d) b[d] = c[d];
          if (!constant_sigma) s = problem.diffusion.sigma(x, t);
          if (!euler_step(x, b, s, z, dt_eff, sqdt)) {
            excluded[p] = 1;
            return;
          }
        }
        values[p] = pay.finish(x, beta);
      });
      const McEstimate est = summarize(std::move(values), {}, excluded);
      cp.mc_mean = est.mean;
      cp.mc_stderr = est.std_error;
    }
    cp.abs_error = std::abs(cp.u_pde - cp.mc_mean);
    cp.discrepancy = cp.mc_stderr > 0.0 ? cp.abs_error / cp.mc_stderr : (cp.abs_error == 0.0 ? 0.0 : std::numeric_limits<double>::infinity());
    cp.passed = cp.abs_error <= 3.0 * cp.mc_stderr + settings.bias_allowance;
    report.points.push_back(cp);
  }
  return report;
}

double pairwise_sum(std::span<const double> values) {
  if (values.size() <= 8) {
    double s = 0.0;
    for (double v : values) s += v;
    return s;
  }
  const std::size_t half = values.size() / 2;
  return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

}  // namespace semilin
