#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "semilin/grid.hpp"
#include "semilin/linalg.hpp"

namespace semilin {

enum class HamiltonianVariant { Generic, Isaacs };

/// H(p, u, x, t). The argument order (gradient, value, point, time) is used everywhere.
using GenericFn = std::function<double(const Vec& p, double u, const Vec& x, double t)>;

using ControlVectorFn =
    std::function<Vec(const Vec& x, double t, const ControlVec& delta, const ControlVec& eta)>;
using ControlScalarFn =
    std::function<double(const Vec& x, double t, const ControlVec& delta, const ControlVec& eta)>;

/// Constants of the exponential-growth suite plus optional one-sided bounds.
struct IsaacsBounds {
  double A = 1.0;
  double B = 1.0;
  std::optional<double> h_upper;  // h <= h_upper everywhere (keeps h untruncated when localizing)
  std::optional<double> f_bound;  // |f| <= f_bound everywhere
};

/// max over delta in D of min over eta in Gamma of  i.p + h u + f,  over finite control lists.
struct IsaacsSpec {
  std::vector<ControlVec> D_points;
  std::vector<ControlVec> Gamma_points;
  ControlVectorFn drift;      // i(x, t, delta, eta), N-vector
  ControlScalarFn potential;  // h(x, t, delta, eta)
  ControlScalarFn source;     // f(x, t, delta, eta)
  IsaacsBounds bounds;

  void validate() const;
};

struct SaddleValue {
  double value = 0.0;
  std::size_t delta_star = 0;
  std::size_t eta_star = 0;
};

struct HamiltonianSpec {
  HamiltonianVariant variant = HamiltonianVariant::Generic;
  GenericFn generic_eval;             // set iff Generic
  std::optional<IsaacsSpec> isaacs;   // set iff Isaacs
  double growth_K = 1.0;
  /// K_{m,n}: bounds valid while |u| <= m and |x| <= n.
  std::map<std::pair<int, int>, double> lipschitz_table;

  static HamiltonianSpec generic(GenericFn fn, double growth_K = 1.0);
  static HamiltonianSpec from_isaacs(IsaacsSpec spec, double growth_K = 1.0);

  void validate() const;
  /// Dispatches on the variant; throws Data error on a non-finite result.
  double operator()(const Vec& p, double u, const Vec& x, double t) const;
  /// Smallest tabulated K_{m,n} covering (|u|, |x|), if any.
  std::optional<double> local_constant(double u_abs, double x_abs) const;
};

double eval_generic(const HamiltonianSpec& spec, const Vec& p, double u, const Vec& x, double t);

/// Exhaustive max-min; ties go to the lowest index at both levels.
SaddleValue eval_isaacs(const IsaacsSpec& spec, const Vec& p, double u, const Vec& x, double t);

/// Linear coefficients (b*, h*, f*) of H along a field, one set per space-time node.
struct LinearDecomposition {
  SpaceTimeGrid grid;
  std::vector<double> b_star;  // dim values per node, interleaved
  std::vector<double> h_star;
  std::vector<double> f_star;
  std::size_t clipped_nodes = 0;  // nodes where at least one denominator was below eps_div
  std::vector<unsigned char> clipped;
  double eps_div = 1e-10;

  Vec drift(std::size_t flat) const;
};

LinearDecomposition decompose_to_linear(const HamiltonianSpec& spec, const GridField& field,
                                        double eps_div = 1e-10);

/// Per-node saddle selections of an Isaacs Hamiltonian along a field.
struct SaddleField {
  SpaceTimeGrid grid;
  std::vector<std::size_t> delta_star;
  std::vector<std::size_t> eta_star;
  std::vector<double> value;
};

SaddleField saddle_field(const IsaacsSpec& spec, const GridField& field);

}  // namespace semilin
