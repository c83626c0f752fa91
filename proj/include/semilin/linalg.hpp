#pragma once

#include <Eigen/Dense>

namespace semilin {

/// Largest spatial dimension the fixed-capacity vector types can hold.
inline constexpr int kMaxDim = 3;

/// Spatial points and gradients. Fixed capacity, so no heap traffic in kernel loops.
using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, kMaxDim, 1>;
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor, kMaxDim, kMaxDim>;

/// Control parameters (delta, eta) can have any length.
using ControlVec = Eigen::VectorXd;

inline Vec zeros(int dim) { return Vec::Zero(dim); }
inline Vec filled(int dim, double v) { return Vec::Constant(dim, v); }
inline Mat identity(int dim) { return Mat::Identity(dim, dim); }

}  // namespace semilin
