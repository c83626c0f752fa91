#include "semilin/grid.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "semilin/errors.hpp"

namespace semilin {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Domain: return "domain error";
    case ErrorKind::Validation: return "validation error";
    case ErrorKind::Data: return "data error";
    case ErrorKind::Precondition: return "precondition error";
    case ErrorKind::Parse: return "parse error";
    case ErrorKind::Io: return "io error";
    case ErrorKind::Stage: return "stage error";
  }
  return "error";
}

Vec Box::clamp(const Vec& x) const {
  Vec out = x;
  for (int d = 0; d < out.size(); ++d) out[d] = std::clamp(out[d], -radius, radius);
  return out;
}

bool Box::contains(const Vec& x, double slack) const {
  for (int d = 0; d < x.size(); ++d) {
    if (std::abs(x[d]) > radius + slack) return false;
  }
  return true;
}

void SpatialGrid::validate() const {
  if (dim < 1 || dim > kMaxDim) {
    throw Error(ErrorKind::Validation, "grid dimension must be in 1.." + std::to_string(kMaxDim));
  }
  if (!(radius > 0.0)) throw Error(ErrorKind::Validation, "grid radius must be positive");
  if (nodes_per_dim < 2) throw Error(ErrorKind::Validation, "grid needs at least 2 nodes per axis");
}

std::size_t SpatialGrid::size() const {
  std::size_t n = 1;
  for (int d = 0; d < dim; ++d) n *= static_cast<std::size_t>(nodes_per_dim);
  return n;
}

std::array<int, kMaxDim> SpatialGrid::multi_index(std::size_t flat) const {
  std::array<int, kMaxDim> idx{};
  const auto n = static_cast<std::size_t>(nodes_per_dim);
  for (int d = 0; d < dim; ++d) {
    idx[d] = static_cast<int>(flat % n);
    flat /= n;
  }
  return idx;
}

std::size_t SpatialGrid::flat_index(const std::array<int, kMaxDim>& idx) const {
  std::size_t flat = 0;
  for (int d = dim - 1; d >= 0; --d) flat = flat * nodes_per_dim + idx[d];
  return flat;
}

Vec SpatialGrid::node(std::size_t flat) const {
  const auto idx = multi_index(flat);
  Vec x(dim);
  for (int d = 0; d < dim; ++d) x[d] = coord(idx[d]);
  return x;
}

void SpaceTimeGrid::validate() const {
  space.validate();
  if (!(horizon > 0.0)) throw Error(ErrorKind::Validation, "horizon must be positive");
  if (levels < 2) throw Error(ErrorKind::Validation, "need at least 2 time levels");
}

GridField GridField::zeros(const SpaceTimeGrid& grid) {
  GridField f;
  f.grid = grid;
  f.u.assign(grid.nodes(), 0.0);
  f.grad.assign(grid.nodes() * grid.space.dim, 0.0);
  return f;
}

Vec GridField::gradient(int level, std::size_t node) const {
  const int n = dim();
  Vec g(n);
  const std::size_t base = index(level, node) * n;
  for (int d = 0; d < n; ++d) g[d] = grad[base + d];
  return g;
}

void GridField::set_gradient(int level, std::size_t node, const Vec& g) {
  const int n = dim();
  const std::size_t base = index(level, node) * n;
  for (int d = 0; d < n; ++d) grad[base + d] = g[d];
}

std::span<const double> GridField::level_values(int level) const {
  return std::span<const double>(u).subspan(index(level, 0), grid.space.size());
}

std::span<const double> GridField::level_gradients(int level) const {
  const std::size_t n = grid.space.size() * dim();
  return std::span<const double>(grad).subspan(index(level, 0) * dim(), n);
}

void GridField::check_finite() const {
  for (std::size_t i = 0; i < u.size(); ++i) {
    if (!std::isfinite(u[i])) {
      throw Error(ErrorKind::Data, "non-finite value in field at flat index " + std::to_string(i));
    }
  }
  for (std::size_t i = 0; i < grad.size(); ++i) {
    if (!std::isfinite(grad[i])) {
      throw Error(ErrorKind::Data, "non-finite gradient in field at flat index " + std::to_string(i));
    }
  }
}

double interpolate(const SpatialGrid& grid, std::span<const double> values, const Vec& y,
                   int stride, int component) {
  const int dim = grid.dim;
  const double h = grid.spacing();
  const int n = grid.nodes_per_dim;
  std::array<int, kMaxDim> base{};
  std::array<double, kMaxDim> frac{};
  for (int d = 0; d < dim; ++d) {
    const double s = (std::clamp(y[d], -grid.radius, grid.radius) + grid.radius) / h;
    int i = static_cast<int>(std::floor(s));
    i = std::clamp(i, 0, n - 2);
    base[d] = i;
    frac[d] = std::clamp(s - i, 0.0, 1.0);
  }
  double acc = 0.0;
  for (int corner = 0; corner < (1 << dim); ++corner) {
    double w = 1.0;
    std::array<int, kMaxDim> idx{};
    for (int d = 0; d < dim; ++d) {
      const bool up = (corner >> d) & 1;
      idx[d] = base[d] + (up ? 1 : 0);
      w *= up ? frac[d] : 1.0 - frac[d];
    }
    if (w == 0.0) continue;
    acc += w * values[grid.flat_index(idx) * stride + component];
  }
  return acc;
}

Vec interpolant_gradient(const SpatialGrid& grid, std::span<const double> values, const Vec& y) {
  const double h = grid.spacing();
  Vec g(grid.dim);
  for (int d = 0; d < grid.dim; ++d) {
    Vec lo = y;
    Vec hi = y;
    lo[d] = std::max(y[d] - h, -grid.radius);
    hi[d] = std::min(y[d] + h, grid.radius);
    const double span = hi[d] - lo[d];
    g[d] = span > 0.0 ? (interpolate(grid, values, hi) - interpolate(grid, values, lo)) / span : 0.0;
  }
  return g;
}

double interpolate_space_time(const SpaceTimeGrid& grid, std::span<const double> values,
                              const Vec& x, double t, int stride, int component) {
  const std::size_t per_level = grid.space.size() * stride;
  const double s = std::clamp(t, 0.0, grid.horizon) / grid.dt();
  int m = std::clamp(static_cast<int>(std::floor(s)), 0, grid.levels - 2);
  const double w = std::clamp(s - m, 0.0, 1.0);
  const double lo = interpolate(grid.space, values.subspan(m * per_level, per_level), x, stride, component);
  if (w == 0.0) return lo;
  const double hi =
      interpolate(grid.space, values.subspan((m + 1) * per_level, per_level), x, stride, component);
  return (1.0 - w) * lo + w * hi;
}

}  // namespace semilin
