#pragma once

#include <vector>

namespace oracle {

/// Viscous Burgers  u_t + 1/2 u_xx + u u_x = 0  on [-L, L] x [0, T] with u(x, T) = beta(x)
/// and u = 0 on the boundary. Crank-Nicolson in reversed time, the convective term taken at the
/// midpoint and resolved by fixed-point sweeps. Returns levels[k][i] at t = T - k T / steps.
struct BurgersCN {
  double half_width = 8.0;
  int nodes = 513;
  int steps = 1024;
  double horizon = 0.5;

  double x(int i) const { return -half_width + 2.0 * half_width * i / (nodes - 1); }
  std::vector<std::vector<double>> solve(double (*beta)(double)) const;
};

/// Solves a tridiagonal system in place; `rhs` becomes the solution.
void thomas(std::vector<double> lower, std::vector<double> diag, std::vector<double> upper,
            std::vector<double>& rhs);

}  // namespace oracle
