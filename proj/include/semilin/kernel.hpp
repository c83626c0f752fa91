#pragma once

#include <functional>
#include <optional>
#include <span>

#include "semilin/grid.hpp"
#include "semilin/linalg.hpp"

namespace semilin {

/// Diffusion factor sigma(x, t); the generator uses a = sigma sigma^T.
struct DiffusionSpec {
  int dim = 1;
  std::function<Mat(const Vec& x, double t)> sigma;
  double mu_ellipticity = 1.0;  // lower bound of xi^T a xi / |xi|^2
  double sigma_bound = 1.0;     // bound on the Frobenius norm of sigma
  bool constant = false;        // sigma does not depend on (x, t)

  Mat a(const Vec& x, double t) const;

  static DiffusionSpec constant_matrix(const Mat& sigma);
  static DiffusionSpec identity(int dim) { return constant_matrix(semilin::identity(dim)); }
};

struct KernelParams {
  std::optional<Vec> frozen_point;  // freeze a at this point instead of the evaluation point
  Box domain_box;
  int quad_nodes_per_dim = 16;
  double tail_cut_sigmas = 6.0;
  // Return f(x) when s - t < h^2 / lambda_max(a) for grid-sampled integrands.
  bool subgrid_identity = false;
  // When positive, callable integrands are sampled on the lattice -radius + k * align_spacing / m
  // (m the smallest refinement reaching the target step), so the quadrature nodes do not move with x.
  double align_spacing = 0.0;

  void validate() const;
};

/// Spectral data of a constant SPD matrix, computed once and reused for every time gap.
class Covariance {
 public:
  explicit Covariance(const Mat& a);  // throws Validation if a is not symmetric positive definite

  int dim() const { return static_cast<int>(a_.rows()); }
  const Mat& matrix() const { return a_; }
  const Mat& inverse() const { return inv_; }
  double determinant() const { return det_; }
  double lambda_min() const { return lambda_min_; }
  double lambda_max() const { return lambda_max_; }

 private:
  Mat a_;
  Mat inv_;
  double det_ = 1.0;
  double lambda_min_ = 1.0;
  double lambda_max_ = 1.0;
};

/// Gaussian density with covariance tau * a, viewed as a function of the offset y - x.
class GaussianKernel {
 public:
  GaussianKernel(const Covariance& cov, double tau);

  double operator()(const Vec& offset) const;
  /// d/dx of the density at offset y - x, i.e. a^{-1} (y - x) / tau times the density.
  Vec gradient_x(const Vec& offset) const;

  double tau() const { return tau_; }
  const Covariance& covariance() const { return cov_; }
  double sigma_min() const;
  double sigma_max() const;

 private:
  Covariance cov_;
  double tau_;
  double scale_;
};

/// Constants of the Gaussian upper bounds
///   G <= C tau^{-N/2} exp(-c |y-x|^2 / tau),  |D_x G| <= C_grad tau^{-(N+1)/2} exp(-c_grad |y-x|^2 / tau).
struct KernelBounds {
  double C = 0.0;
  double c = 0.0;
  double C_grad = 0.0;
  double c_grad = 0.0;
};
KernelBounds kernel_bounds(const Mat& a);

double gaussian_kernel(const Vec& x, double t, const Vec& y, double s, const Mat& a_const);
Vec kernel_gradient(const Vec& x, double t, const Vec& y, double s, const Mat& a_const);
double frozen_kernel(const Vec& x, double t, const Vec& y, double s, const DiffusionSpec& diff,
                     const std::optional<Vec>& frozen_point = std::nullopt);

/// A spatial function to be integrated against the kernel: either node samples on a grid
/// (multilinear interpolation, clamped) or a callable evaluated at box-clamped arguments.
class Integrand {
 public:
  using Function = std::function<double(const Vec&)>;

  /// Throws Data error on non-finite samples.
  static Integrand sampled(const SpatialGrid& grid, std::span<const double> values);
  static Integrand function(Function f, const Box& box);

  double operator()(const Vec& y) const;
  /// Limit of the gradient convolution as s -> t.
  Vec gradient(const Vec& x) const;

  bool is_sampled() const { return grid_.has_value(); }
  const std::optional<SpatialGrid>& grid() const { return grid_; }
  std::span<const double> samples() const { return values_; }

 private:
  std::optional<SpatialGrid> grid_;
  std::span<const double> values_;
  Function fn_;
  Box box_;
};

struct Convolution {
  double value = 0.0;
  Vec gradient;
  bool empty_region = false;  // no quadrature node inside the tail-cut ball; value is 0
  int quadrature_nodes = 0;
};

/// Quadrature of \int G(x,t,y,s) f(y) dy with the frozen kernel.
Convolution convolve(const Integrand& f, const Vec& x, double t, double s, const DiffusionSpec& diff,
                     const KernelParams& params);
/// Quadrature of \int D_x G(x,t,y,s) f(y) dy with the frozen kernel.
Convolution convolve_gradient(const Integrand& f, const Vec& x, double t, double s,
                              const DiffusionSpec& diff, const KernelParams& params);

/// Shared quadrature core: tensor trapezoid over the ball |y-x| <= tail_cut * sigma_max.
/// Sampled integrands use nodes aligned with (a uniform refinement of) their grid.
Convolution convolve_with(const Integrand& f, const Vec& x, const GaussianKernel& kernel,
                          const KernelParams& params, bool want_value, bool want_gradient);

}  // namespace semilin
