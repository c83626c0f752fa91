#pragma once

#include <functional>
#include <string>
#include <string_view>

#include "semilin/grid.hpp"
#include "semilin/hamiltonian.hpp"
#include "semilin/kernel.hpp"

namespace semilin {

/// Which family of structural assumptions a problem is declared under.
///   A: bounded, globally Lipschitz H and bounded Lipschitz data (direct fixed point)
///   B: local Lipschitz H with one-sided growth in u (localize, then fixed point)
///   C: Isaacs with bounded f and h bounded above
///   D: Isaacs with linear / exponential growth (truncation ladder)
enum class Suite { A, B, C, D };

Suite parse_suite(std::string_view text);
const char* to_string(Suite suite);

struct GridSpec {
  double radius = 8.0;
  int nodes_per_dim = 129;
  int levels = 65;
};

/// Terminal-value problem  u_t + 1/2 Tr(a D^2 u) + H(D u, u, x, t) = 0,  u(x, T) = beta(x).
struct Problem {
  std::string name;
  int dim = 1;
  double horizon = 1.0;
  DiffusionSpec diffusion;
  HamiltonianSpec hamiltonian;
  std::function<double(const Vec&)> terminal;
  Suite suite = Suite::A;
  GridSpec grid;

  /// Throws Validation on T <= 0, dimension mismatches or a non-finite terminal value on the grid.
  void validate() const;

  SpaceTimeGrid space_time_grid() const;
  KernelParams kernel_params() const;
  bool is_isaacs() const { return hamiltonian.variant == HamiltonianVariant::Isaacs; }
};

}  // namespace semilin
