#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "semilin/problem.hpp"

namespace semilin {

/// Finite sample of (x, t, u, p) used to probe the structural inequalities.
struct SampleLattice {
  std::vector<Vec> xs;
  std::vector<double> ts;
  std::vector<double> us;
  std::vector<Vec> ps;
  int directions = 32;     // random unit directions for the ellipticity check
  double fd_step = 1e-4;   // finite-difference probe step
  std::uint64_t seed = 7;

  /// Tensor lattice over the problem's box and horizon; u and p span [-range, range].
  static SampleLattice for_problem(const Problem& problem, int x_per_dim = 9, int t_levels = 5,
                                   double u_range = 10.0, double p_range = 10.0, int up_count = 9);
};

struct CheckEntry {
  std::string name;
  bool passed = true;
  double worst_margin = 0.0;  // min over the lattice of (bound - lhs); negative means violated
  double measured = 0.0;      // supremum of the probed quantity
  std::string detail;
};

struct ValidationReport {
  Suite suite = Suite::A;
  std::vector<CheckEntry> checks;

  bool passed() const;
  const CheckEntry* find(const std::string& name) const;
  std::string summary() const;
};

/// Checks every inequality of `suite` on the lattice. Failures are entries, never exceptions.
ValidationReport validate_assumptions(const Problem& problem, Suite suite, const SampleLattice& lattice);

}  // namespace semilin
