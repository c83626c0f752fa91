#include "semilin/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "semilin/errors.hpp"

namespace semilin {

Mat DiffusionSpec::a(const Vec& x, double t) const {
  const Mat s = sigma(x, t);
  return s * s.transpose();
}

DiffusionSpec DiffusionSpec::constant_matrix(const Mat& sigma) {
  DiffusionSpec spec;
  spec.dim = static_cast<int>(sigma.rows());
  spec.sigma = [sigma](const Vec&, double) { return sigma; };
  const Mat a = sigma * sigma.transpose();
  spec.mu_ellipticity = Eigen::SelfAdjointEigenSolver<Mat>(a).eigenvalues().minCoeff();
  spec.sigma_bound = sigma.norm();
  spec.constant = true;
  return spec;
}

void KernelParams::validate() const {
  if (quad_nodes_per_dim < 16) {
    throw Error(ErrorKind::Validation, "quad_nodes_per_dim must be at least 16");
  }
  if (!(tail_cut_sigmas > 0.0)) throw Error(ErrorKind::Validation, "tail_cut_sigmas must be positive");
  if (!(domain_box.radius > 0.0)) throw Error(ErrorKind::Validation, "domain box radius must be positive");
  if (!(align_spacing >= 0.0)) throw Error(ErrorKind::Validation, "align_spacing must be nonnegative");
}

Covariance::Covariance(const Mat& a) : a_(a) {
  if (a.rows() != a.cols() || a.rows() < 1 || a.rows() > kMaxDim) {
    throw Error(ErrorKind::Validation, "diffusion matrix must be square with dimension 1..3");
  }
  if (!a.allFinite()) throw Error(ErrorKind::Validation, "diffusion matrix has non-finite entries");
  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  if ((a - a.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw Error(ErrorKind::Validation, "diffusion matrix is not symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Mat> eig(a);
  lambda_min_ = eig.eigenvalues().minCoeff();
  lambda_max_ = eig.eigenvalues().maxCoeff();
  if (!(lambda_min_ > 0.0)) {
    throw Error(ErrorKind::Validation, "diffusion matrix is not positive definite");
  }
  det_ = eig.eigenvalues().prod();
  inv_ = eig.eigenvectors() * eig.eigenvalues().cwiseInverse().asDiagonal() *
         eig.eigenvectors().transpose();
}

GaussianKernel::GaussianKernel(const Covariance& cov, double tau) : cov_(cov), tau_(tau) {
  if (!(tau > 0.0)) throw Error(ErrorKind::Domain, "kernel requires s>t");
  const int n = cov.dim();
  scale_ = std::pow(2.0 * std::numbers::pi * tau, -0.5 * n) / std::sqrt(cov.determinant());
}

double GaussianKernel::operator()(const Vec& offset) const {
  const double q = offset.dot(cov_.inverse() * offset);
  return scale_ * std::exp(-0.5 * q / tau_);
}

Vec GaussianKernel::gradient_x(const Vec& offset) const {
  return (*this)(offset) / tau_ * (cov_.inverse() * offset);
}

double GaussianKernel::sigma_min() const { return std::sqrt(tau_ * cov_.lambda_min()); }
double GaussianKernel::sigma_max() const { return std::sqrt(tau_ * cov_.lambda_max()); }

KernelBounds kernel_bounds(const Mat& a) {
  const Covariance cov(a);
  const int n = cov.dim();
  const double two_pi = 2.0 * std::numbers::pi;
  KernelBounds b;
  b.C = std::pow(two_pi * cov.lambda_min(), -0.5 * n);
  b.c = 1.0 / (2.0 * cov.lambda_max() * (1.0 + 1e-12));
  b.C_grad = std::pow(two_pi, -0.5 * n) / std::sqrt(cov.determinant()) *
             std::sqrt(2.0 * cov.lambda_max()) * std::exp(-0.5) / cov.lambda_min();
  b.c_grad = 1.0 / (4.0 * cov.lambda_max());
  return b;
}

double gaussian_kernel(const Vec& x, double t, const Vec& y, double s, const Mat& a_const) {
  if (!(s > t)) throw Error(ErrorKind::Domain, "kernel requires s>t");
  return GaussianKernel(Covariance(a_const), s - t)(y - x);
}

Vec kernel_gradient(const Vec& x, double t, const Vec& y, double s, const Mat& a_const) {
  if (!(s > t)) throw Error(ErrorKind::Domain, "kernel requires s>t");
  return GaussianKernel(Covariance(a_const), s - t).gradient_x(y - x);
}

double frozen_kernel(const Vec& x, double t, const Vec& y, double s, const DiffusionSpec& diff,
                     const std::optional<Vec>& frozen_point) {
  return gaussian_kernel(x, t, y, s, diff.a(frozen_point.value_or(x), t));
}

// --- Integrand ---------------------------------------------------------------------------

Integrand Integrand::sampled(const SpatialGrid& grid, std::span<const double> values) {
  if (values.size() != grid.size()) {
    throw Error(ErrorKind::Precondition, "sample count does not match grid size");
  }
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) {
      throw Error(ErrorKind::Data, "non-finite sample at grid node " + std::to_string(i));
    }
  }
  Integrand f;
  f.grid_ = grid;
  f.values_ = values;
  f.box_ = grid.box();
  return f;
}

Integrand Integrand::function(Function fn, const Box& box) {
  Integrand f;
  f.fn_ = std::move(fn);
  f.box_ = box;
  return f;
}

double Integrand::operator()(const Vec& y) const {
  if (grid_) return interpolate(*grid_, values_, y);
  return fn_(box_.clamp(y));
}

Vec Integrand::gradient(const Vec& x) const {
  if (grid_) return interpolant_gradient(*grid_, values_, x);
  Vec g(x.size());
  for (int d = 0; d < x.size(); ++d) {
    const double step = 1e-6 * std::max(1.0, std::abs(x[d]));
    Vec lo = x;
    Vec hi = x;
    lo[d] -= step;
    hi[d] += step;
    g[d] = ((*this)(hi) - (*this)(lo)) / (2.0 * step);
  }
  return g;
}

// --- Quadrature --------------------------------------------------------------------------

namespace {

int floor_div(int a, int b) {
  int q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

// Multilinear interpolation at lattice point k of a grid refined m times, clamped.
double refined_sample(const SpatialGrid& grid, std::span<const double> values,
                      const std::array<int, kMaxDim>& k, int m) {
  const int n = grid.nodes_per_dim;
  std::array<int, kMaxDim> base{};
  std::array<double, kMaxDim> frac{};
  for (int d = 0; d < grid.dim; ++d) {
    int i = floor_div(k[d], m);
    double w = static_cast<double>(k[d] - i * m) / m;
    if (i < 0) {
      i = 0;
      w = 0.0;
    } else if (i >= n - 1) {
      i = n - 2;
      w = 1.0;
    }
    base[d] = i;
    frac[d] = w;
  }
  if (grid.dim == 1) {
    const double lo = values[base[0]];
    return frac[0] == 0.0 ? lo : lo + frac[0] * (values[base[0] + 1] - lo);
  }
  double acc = 0.0;
  for (int corner = 0; corner < (1 << grid.dim); ++corner) {
    double w = 1.0;
    std::array<int, kMaxDim> idx{};
    for (int d = 0; d < grid.dim; ++d) {
      const bool up = (corner >> d) & 1;
      idx[d] = base[d] + (up ? 1 : 0);
      w *= up ? frac[d] : 1.0 - frac[d];
    }
    if (w != 0.0) acc += w * values[grid.flat_index(idx)];
  }
  return acc;
}

}  // namespace

Convolution convolve_with(const Integrand& f, const Vec& x, const GaussianKernel& kernel,
                          const KernelParams& params, bool want_value, bool want_gradient) {
  const int dim = static_cast<int>(x.size());
  const double tail = params.tail_cut_sigmas;
  const double radius = tail * kernel.sigma_max();
  const double h_target = 2.0 * tail * kernel.sigma_min() / (params.quad_nodes_per_dim - 1);

  double h = h_target;
  int refine = 1;
  Vec origin = x;
  if (f.is_sampled()) {
    const SpatialGrid& grid = *f.grid();
    const double dx = grid.spacing();
    refine = std::max(1, static_cast<int>(std::ceil(dx / h_target - 1e-12)));
    h = dx / refine;
    origin = filled(dim, -grid.radius);
  } else if (params.align_spacing > 0.0) {
    refine = std::max(1, static_cast<int>(std::ceil(params.align_spacing / h_target - 1e-12)));
    h = params.align_spacing / refine;
    origin = filled(dim, -params.domain_box.radius);
  }

  std::array<int, kMaxDim> kmin{};
  std::array<int, kMaxDim> kmax{};
  for (int d = 0; d < dim; ++d) {
    kmin[d] = static_cast<int>(std::ceil((x[d] - radius - origin[d]) / h));
    kmax[d] = static_cast<int>(std::floor((x[d] + radius - origin[d]) / h));
  }

  Convolution out;
  out.gradient = zeros(dim);
  for (int d = 0; d < dim; ++d) {
    if (kmin[d] > kmax[d]) {
      out.empty_region = true;
      return out;
    }
  }

  const Mat& inv = kernel.covariance().inverse();
  const double inv_two_tau = 0.5 / kernel.tau();
  const double r2 = radius * radius;
  double sum = 0.0;
  Vec first_moment = zeros(dim);
  int count = 0;

  std::array<int, kMaxDim> k = kmin;
  Vec y(dim);
  Vec off(dim);
  while (true) {
    for (int d = 0; d < dim; ++d) {
      y[d] = origin[d] + k[d] * h;
      off[d] = y[d] - x[d];
    }
    const double dist2 = off.squaredNorm();
    if (dist2 <= r2) {
      const double g = std::exp(-off.dot(inv * off) * inv_two_tau);
      const double fy = f.is_sampled() ? refined_sample(*f.grid(), f.samples(), k, refine) : f(y);
      const double gf = g * fy;
      sum += gf;
      if (want_gradient) first_moment += gf * off;
      ++count;
    }
    int d = 0;
    for (; d < dim; ++d) {
      if (++k[d] <= kmax[d]) break;
      k[d] = kmin[d];
    }
    if (d == dim) break;
  }

  out.quadrature_nodes = count;
  if (count == 0) {
    out.empty_region = true;
    return out;
  }
  const double weight = std::pow(h, dim) * kernel(zeros(dim));
  if (want_value) out.value = weight * sum;
  if (want_gradient) out.gradient = weight / kernel.tau() * (inv * first_moment);
  return out;
}

namespace {

Convolution convolve_impl(const Integrand& f, const Vec& x, double t, double s,
                          const DiffusionSpec& diff, const KernelParams& params, bool value,
                          bool gradient) {
  params.validate();
  if (!(s > t)) throw Error(ErrorKind::Domain, "kernel requires s>t");
  const Covariance cov(diff.a(params.frozen_point.value_or(x), t));
  if (params.subgrid_identity && f.is_sampled()) {
    const double dx = f.grid()->spacing();
    if (s - t < dx * dx / cov.lambda_max()) {
      Convolution out;
      out.value = value ? f(x) : 0.0;
      out.gradient = gradient ? f.gradient(x) : zeros(static_cast<int>(x.size()));
      return out;
    }
  }
  return convolve_with(f, x, GaussianKernel(cov, s - t), params, value, gradient);
}

}  // namespace

Convolution convolve(const Integrand& f, const Vec& x, double t, double s, const DiffusionSpec& diff,
                     const KernelParams& params) {
  return convolve_impl(f, x, t, s, diff, params, true, false);
}

Convolution convolve_gradient(const Integrand& f, const Vec& x, double t, double s,
                              const DiffusionSpec& diff, const KernelParams& params) {
  return convolve_impl(f, x, t, s, diff, params, false, true);
}

}  // namespace semilin
