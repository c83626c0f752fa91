#include "semilin/problem.hpp"

#include <cmath>

#include "semilin/errors.hpp"

namespace semilin {

Suite parse_suite(std::string_view text) {
  if (text == "A" || text == "a") return Suite::A;
  if (text == "B" || text == "b") return Suite::B;
  if (text == "C" || text == "c") return Suite::C;
  if (text == "D" || text == "d") return Suite::D;
  throw Error(ErrorKind::Validation, "unknown assumption suite '" + std::string(text) + "'");
}

const char* to_string(Suite suite) {
  switch (suite) {
    case Suite::A: return "A";
    case Suite::B: return "B";
    case Suite::C: return "C";
    case Suite::D: return "D";
  }
  return "?";
}

SpaceTimeGrid Problem::space_time_grid() const {
  SpaceTimeGrid g;
  g.space = SpatialGrid{dim, grid.radius, grid.nodes_per_dim};
  g.horizon = horizon;
  g.levels = grid.levels;
  return g;
}

KernelParams Problem::kernel_params() const {
  KernelParams params;
  params.domain_box = Box{dim, grid.radius};
  return params;
}

void Problem::validate() const {
  if (!(horizon > 0.0)) throw Error(ErrorKind::Validation, "horizon must be positive");
  if (dim < 1 || dim > kMaxDim) throw Error(ErrorKind::Validation, "dimension must be in 1..3");
  if (diffusion.dim != dim) {
    throw Error(ErrorKind::Validation, "diffusion dimension does not match problem dimension");
  }
  if (!diffusion.sigma) throw Error(ErrorKind::Validation, "diffusion coefficient is not set");
  if (!terminal) throw Error(ErrorKind::Validation, "terminal data is not set");
  hamiltonian.validate();
  const SpaceTimeGrid g = space_time_grid();
  g.validate();
  for (std::size_t i = 0; i < g.space.size(); ++i) {
    const double v = terminal(g.space.node(i));
    if (!std::isfinite(v)) {
      throw Error(ErrorKind::Validation, "terminal data is not finite at grid node " + std::to_string(i));
    }
  }
}

}  // namespace semilin
