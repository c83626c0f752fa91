#include "semilin/hamiltonian.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "semilin/errors.hpp"

namespace semilin {

namespace {

std::string describe_point(const Vec& p, double u, const Vec& x, double t) {
  std::ostringstream os;
  os << "(p=" << p.transpose() << ", u=" << u << ", x=" << x.transpose() << ", t=" << t << ")";
  return os.str();
}

}  // namespace

void IsaacsSpec::validate() const {
  if (D_points.empty()) throw Error(ErrorKind::Validation, "control set D is empty");
  if (Gamma_points.empty()) throw Error(ErrorKind::Validation, "control set Gamma is empty");
  if (!drift || !potential || !source) {
    throw Error(ErrorKind::Validation, "Isaacs coefficients i, h, f must all be set");
  }
}

HamiltonianSpec HamiltonianSpec::generic(GenericFn fn, double growth_K) {
  HamiltonianSpec spec;
  spec.variant = HamiltonianVariant::Generic;
  spec.generic_eval = std::move(fn);
  spec.growth_K = growth_K;
  return spec;
}

HamiltonianSpec HamiltonianSpec::from_isaacs(IsaacsSpec isaacs, double growth_K) {
  HamiltonianSpec spec;
  spec.variant = HamiltonianVariant::Isaacs;
  spec.isaacs = std::move(isaacs);
  spec.growth_K = growth_K;
  return spec;
}

void HamiltonianSpec::validate() const {
  if (variant == HamiltonianVariant::Generic && !generic_eval) {
    throw Error(ErrorKind::Validation, "generic Hamiltonian has no evaluator");
  }
  if (variant == HamiltonianVariant::Isaacs) {
    if (!isaacs) throw Error(ErrorKind::Validation, "Isaacs Hamiltonian has no control specification");
    isaacs->validate();
  }
  if (!(growth_K > 0.0)) throw Error(ErrorKind::Validation, "growth_K must be positive");
  for (const auto& [key, value] : lipschitz_table) {
    if (!(value > 0.0)) throw Error(ErrorKind::Validation, "lipschitz_table entries must be positive");
  }
}

double HamiltonianSpec::operator()(const Vec& p, double u, const Vec& x, double t) const {
  if (variant == HamiltonianVariant::Isaacs) return eval_isaacs(*isaacs, p, u, x, t).value;
  return eval_generic(*this, p, u, x, t);
}

std::optional<double> HamiltonianSpec::local_constant(double u_abs, double x_abs) const {
  std::optional<double> best;
  for (const auto& [key, value] : lipschitz_table) {
    if (u_abs <= key.first && x_abs <= key.second) {
      if (!best || value < *best) best = value;
    }
  }
  return best;
}

double eval_generic(const HamiltonianSpec& spec, const Vec& p, double u, const Vec& x, double t) {
  if (spec.variant != HamiltonianVariant::Generic) {
    throw Error(ErrorKind::Precondition, "eval_generic called on a non-generic Hamiltonian");
  }
  const double v = spec.generic_eval(p, u, x, t);
  if (!std::isfinite(v)) {
    throw Error(ErrorKind::Data, "Hamiltonian returned a non-finite value at " + describe_point(p, u, x, t));
  }
  return v;
}

SaddleValue eval_isaacs(const IsaacsSpec& spec, const Vec& p, double u, const Vec& x, double t) {
  if (spec.D_points.empty() || spec.Gamma_points.empty()) {
    throw Error(ErrorKind::Precondition, "control lists must be nonempty");
  }
  SaddleValue best;
  best.value = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < spec.D_points.size(); ++i) {
    const ControlVec& delta = spec.D_points[i];
    double inner = std::numeric_limits<double>::infinity();
    std::size_t inner_arg = 0;
    for (std::size_t j = 0; j < spec.Gamma_points.size(); ++j) {
      const ControlVec& eta = spec.Gamma_points[j];
      const Vec drift = spec.drift(x, t, delta, eta);
      const double v = drift.dot(p) + spec.potential(x, t, delta, eta) * u + spec.source(x, t, delta, eta);
      if (!std::isfinite(v)) {
        std::ostringstream os;
        os << "non-finite Isaacs coefficient at delta index " << i << ", eta index " << j;
        throw Error(ErrorKind::Data, os.str());
      }
      if (v < inner) {
        inner = v;
        inner_arg = j;
      }
    }
    if (inner > best.value) {
      best.value = inner;
      best.delta_star = i;
      best.eta_star = inner_arg;
    }
  }
  return best;
}

Vec LinearDecomposition::drift(std::size_t flat) const {
  const int n = grid.space.dim;
  Vec b(n);
  for (int d = 0; d < n; ++d) b[d] = b_star[flat * n + d];
  return b;
}

LinearDecomposition decompose_to_linear(const HamiltonianSpec& spec, const GridField& field,
                                        double eps_div) {
  const SpaceTimeGrid& grid = field.grid;
  const int n = grid.space.dim;
  const std::size_t nodes = grid.nodes();
  LinearDecomposition out;
  out.grid = grid;
  out.eps_div = eps_div;
  out.b_star.assign(nodes * n, 0.0);
  out.h_star.assign(nodes, 0.0);
  out.f_star.assign(nodes, 0.0);
  out.clipped.assign(nodes, 0);

  const std::size_t per_level = grid.space.size();
  for (int level = 0; level < grid.levels; ++level) {
    const double t = grid.time(level);
    for (std::size_t node = 0; node < per_level; ++node) {
      const std::size_t flat = field.index(level, node);
      const Vec x = grid.space.node(node);
      const double u = field.u[flat];
      const Vec p = field.gradient(level, node);
      const Vec zero = zeros(n);

      const double h00 = spec(zero, 0.0, x, t);
      const double h0u = spec(zero, u, x, t);
      out.f_star[flat] = h00;
      bool clipped = false;
      if (std::abs(u) > eps_div) {
        out.h_star[flat] = (h0u - h00) / u;
      } else {
        clipped = true;
      }
      // H^i keeps coordinates 1..i of p and zeroes the rest; H^0 = H(0, u).
      Vec partial = zeros(n);
      double previous = h0u;
      for (int i = 0; i < n; ++i) {
        partial[i] = p[i];
        const double current = spec(partial, u, x, t);
        if (std::abs(p[i]) > eps_div) {
          out.b_star[flat * n + i] = (current - previous) / p[i];
        } else {
          clipped = true;
        }
        previous = current;
      }
      if (clipped) {
        out.clipped[flat] = 1;
        ++out.clipped_nodes;
      }
    }
  }
  return out;
}

SaddleField saddle_field(const IsaacsSpec& spec, const GridField& field) {
  const SpaceTimeGrid& grid = field.grid;
  SaddleField out;
  out.grid = grid;
  out.delta_star.resize(grid.nodes());
  out.eta_star.resize(grid.nodes());
  out.value.resize(grid.nodes());
  for (int level = 0; level < grid.levels; ++level) {
    const double t = grid.time(level);
    for (std::size_t node = 0; node < grid.space.size(); ++node) {
      const std::size_t flat = field.index(level, node);
      const SaddleValue sv =
          eval_isaacs(spec, field.gradient(level, node), field.u[flat], grid.space.node(node), t);
      out.delta_star[flat] = sv.delta_star;
      out.eta_star[flat] = sv.eta_star;
      out.value[flat] = sv.value;
    }
  }
  return out;
}

}  // namespace semilin
