#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "semilin/linalg.hpp"

namespace semilin {

/// Axis-aligned box [-radius, radius]^dim.
struct Box {
  int dim = 1;
  double radius = 8.0;

  Vec clamp(const Vec& x) const;
  bool contains(const Vec& x, double slack = 0.0) const;
};

/// Uniform tensor lattice on a Box, nodes_per_dim points per axis (end points included).
struct SpatialGrid {
  int dim = 1;
  double radius = 8.0;
  int nodes_per_dim = 129;

  void validate() const;

  double spacing() const { return 2.0 * radius / (nodes_per_dim - 1); }
  double coord(int i) const { return -radius + i * spacing(); }
  std::size_t size() const;
  Box box() const { return Box{dim, radius}; }

  // First axis varies fastest.
  std::array<int, kMaxDim> multi_index(std::size_t flat) const;
  std::size_t flat_index(const std::array<int, kMaxDim>& idx) const;
  Vec node(std::size_t flat) const;
};

/// Spatial lattice x uniform time levels t_0 = 0 < ... < t_{levels-1} = horizon.
struct SpaceTimeGrid {
  SpatialGrid space;
  double horizon = 1.0;
  int levels = 65;

  void validate() const;

  double dt() const { return horizon / (levels - 1); }
  double time(int level) const { return level == levels - 1 ? horizon : level * dt(); }
  std::size_t nodes() const { return space.size() * static_cast<std::size_t>(levels); }
};

enum class FieldKind { Iterate, Solution };

/// Values of (u, D_x u) on every node of a SpaceTimeGrid.
/// Storage is level-major; gradients are interleaved per node.
struct GridField {
  SpaceTimeGrid grid;
  std::vector<double> u;
  std::vector<double> grad;
  FieldKind kind = FieldKind::Iterate;

  static GridField zeros(const SpaceTimeGrid& grid);

  int dim() const { return grid.space.dim; }
  std::size_t index(int level, std::size_t node) const {
    return static_cast<std::size_t>(level) * grid.space.size() + node;
  }
  double& value(int level, std::size_t node) { return u[index(level, node)]; }
  double value(int level, std::size_t node) const { return u[index(level, node)]; }
  Vec gradient(int level, std::size_t node) const;
  void set_gradient(int level, std::size_t node, const Vec& g);

  std::span<const double> level_values(int level) const;
  std::span<const double> level_gradients(int level) const;

  /// Throws Data error if any entry is non-finite.
  void check_finite() const;
};

/// Multilinear interpolation of node data, arguments clamped to the grid box.
/// `values` holds `stride` interleaved components per node; `component` selects one.
double interpolate(const SpatialGrid& grid, std::span<const double> values, const Vec& y,
                   int stride = 1, int component = 0);

/// Gradient of the multilinear interpolant by central differences of half-width h
/// (one-sided at the box faces). At grid nodes this is the usual central difference.
Vec interpolant_gradient(const SpatialGrid& grid, std::span<const double> values, const Vec& y);

/// Linear-in-time, multilinear-in-space evaluation of per-node data on a SpaceTimeGrid.
double interpolate_space_time(const SpaceTimeGrid& grid, std::span<const double> values,
                              const Vec& x, double t, int stride = 1, int component = 0);

/// d-norm helpers used throughout.
inline double norm(const Vec& v) { return v.size() == 0 ? 0.0 : v.norm(); }

}  // namespace semilin
