#include "semilin/validation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "semilin/rng.hpp"

namespace semilin {

namespace {

constexpr double kSlack = 1e-9;

std::vector<double> linspace(double lo, double hi, int n) {
  std::vector<double> v(n);
  for (int i = 0; i < n; ++i) v[i] = n == 1 ? 0.5 * (lo + hi) : lo + (hi - lo) * i / (n - 1);
  return v;
}

std::vector<Vec> tensor(int dim, const std::vector<double>& axis) {
  std::vector<Vec> out;
  std::size_t total = 1;
  for (int d = 0; d < dim; ++d) total *= axis.size();
  out.reserve(total);
  for (std::size_t flat = 0; flat < total; ++flat) {
    Vec v(dim);
    std::size_t rest = flat;
    for (int d = 0; d < dim; ++d) {
      v[d] = axis[rest % axis.size()];
      rest /= axis.size();
    }
    out.push_back(v);
  }
  return out;
}

/// Running min-margin / max-measure for one inequality.
class Check {
 public:
  explicit Check(std::string name) { entry_.name = std::move(name); }

  void margin(double m) {
    if (!std::isfinite(m)) {
      non_finite_ = true;
      return;
    }
    worst_ = std::min(worst_, m);
  }
  void measure(double v) {
    if (!std::isfinite(v)) {
      non_finite_ = true;
      return;
    }
    sup_ = std::max(sup_, v);
  }
  // Checks whose only requirement is a finite supremum on the lattice.
  CheckEntry finite(std::string detail = {}) {
    entry_.passed = !non_finite_;
    entry_.measured = sup_;
    entry_.worst_margin = non_finite_ ? -std::numeric_limits<double>::infinity() : 0.0;
    entry_.detail = non_finite_ ? "non-finite value on the lattice" : std::move(detail);
    return entry_;
  }
  CheckEntry bounded(std::string detail = {}) {
    entry_.measured = sup_;
    entry_.worst_margin = non_finite_ ? -std::numeric_limits<double>::infinity()
                          : worst_ == std::numeric_limits<double>::infinity() ? 0.0
                                                                              : worst_;
    entry_.passed = !non_finite_ && entry_.worst_margin >= -kSlack;
    entry_.detail = non_finite_ ? "non-finite value on the lattice" : std::move(detail);
    return entry_;
  }
  static CheckEntry failed(std::string name, std::string detail) {
    CheckEntry e;
    e.name = std::move(name);
    e.passed = false;
    e.worst_margin = -std::numeric_limits<double>::infinity();
    e.detail = std::move(detail);
    return e;
  }

 private:
  CheckEntry entry_;
  double worst_ = std::numeric_limits<double>::infinity();
  double sup_ = 0.0;
  bool non_finite_ = false;
};

Vec unit(int dim, int axis) {
  Vec e = zeros(dim);
  e[axis] = 1.0;
  return e;
}

class Validator {
 public:
  Validator(const Problem& problem, const SampleLattice& lattice)
      : problem_(problem), lattice_(lattice), dim_(problem.dim), h_(lattice.fd_step) {}

  CheckEntry ellipticity() const {
    Check c("ellipticity");
    const double mu = problem_.diffusion.mu_ellipticity;
    std::uint64_t stream = 0;
    for (const Vec& x : lattice_.xs) {
      for (double t : lattice_.ts) {
        const Mat a = problem_.diffusion.a(x, t);
        c.measure((a - a.transpose()).cwiseAbs().maxCoeff());
        CounterStream rng(lattice_.seed, stream++, 0xE111);
        for (int k = 0; k < lattice_.directions + dim_; ++k) {
          Vec xi(dim_);
          if (k < dim_) {
            xi = unit(dim_, k);
          } else {
            for (int d = 0; d < dim_; ++d) xi[d] = rng.normal(static_cast<std::uint64_t>(k * dim_ + d));
            const double n = xi.norm();
            if (n == 0.0) continue;
            xi /= n;
          }
          c.margin(xi.dot(a * xi) - mu);
        }
      }
    }
    return c.bounded("xi^T a xi >= mu |xi|^2 over random unit directions");
  }

  CheckEntry sigma_bound(double bound, const std::string& name) const {
    Check c(name);
    for (const Vec& x : lattice_.xs) {
      for (double t : lattice_.ts) {
        const double s = problem_.diffusion.sigma(x, t).norm();
        c.measure(s);
        c.margin(bound - s);
      }
    }
    return c.bounded("|sigma| <= " + num(bound));
  }

  CheckEntry sigma_lipschitz() const {
    Check c("sigma_lipschitz");
    for (const Vec& x : lattice_.xs) {
      for (double t : lattice_.ts) {
        const Mat s0 = problem_.diffusion.sigma(x, t);
        for (int d = 0; d < dim_; ++d) {
          c.measure((problem_.diffusion.sigma(x + h_ * unit(dim_, d), t) - s0).norm() / h_);
        }
      }
    }
    return c.finite("finite-difference Lipschitz estimate in x");
  }

  CheckEntry terminal_bounded() const {
    Check c("terminal_bounded");
    for (const Vec& x : lattice_.xs) c.measure(std::abs(problem_.terminal(x)));
    return c.finite("sup |beta| over the lattice");
  }

  CheckEntry terminal_lipschitz() const {
    Check c("terminal_lipschitz");
    for (const Vec& x : lattice_.xs) {
      const double b0 = problem_.terminal(x);
      for (int d = 0; d < dim_; ++d) {
        c.measure(std::abs(problem_.terminal(x + h_ * unit(dim_, d)) - b0) / h_);
      }
    }
    return c.finite("finite-difference Lipschitz estimate of beta");
  }

  template <typename Fn>
  void for_each_point(Fn&& fn) const {
    for (const Vec& x : lattice_.xs) {
      for (double t : lattice_.ts) {
        for (double u : lattice_.us) {
          for (const Vec& p : lattice_.ps) fn(p, u, x, t);
        }
      }
    }
  }

  double H(const Vec& p, double u, const Vec& x, double t) const {
    try {
      return problem_.hamiltonian(p, u, x, t);
    } catch (const std::exception&) {
      return std::numeric_limits<double>::quiet_NaN();
    }
  }

  CheckEntry growth(double K) const {
    Check c("growth");
    for_each_point([&](const Vec& p, double u, const Vec& x, double t) {
      const double v = std::abs(H(p, u, x, t));
      c.measure(v / (1.0 + std::abs(u) + norm(p)));
      c.margin(K * (1.0 + std::abs(u) + norm(p)) - v);
    });
    return c.bounded("|H| <= K(1+|u|+|p|), K=" + num(K));
  }

  CheckEntry lipschitz(double K) const {
    Check c("lipschitz");
    for_each_point([&](const Vec& p, double u, const Vec& x, double t) {
      const double h0 = H(p, u, x, t);
      const double qu = std::abs(H(p, u + h_, x, t) - h0) / h_;
      c.measure(qu);
      c.margin(K - qu);
      for (int d = 0; d < dim_; ++d) {
        const double qp = std::abs(H(p + h_ * unit(dim_, d), u, x, t) - h0) / h_;
        c.measure(qp);
        c.margin(K - qp);
      }
    });
    return c.bounded("difference quotients in (u, p) <= K=" + num(K));
  }

  std::vector<CheckEntry> suite_b_hamiltonian(double K) const {
    std::vector<CheckEntry> out;
    const Vec zero = zeros(dim_);
    Check h00("h00_bound");
    Check one_sided("one_sided_u");
    for (const Vec& x : lattice_.xs) {
      for (double t : lattice_.ts) {
        const double v = std::abs(H(zero, 0.0, x, t));
        h00.measure(v);
        h00.margin(K - v);
        for (double u : lattice_.us) {
          const double q = (H(zero, u + h_, x, t) - H(zero, u, x, t)) / h_;
          one_sided.measure(q);
          one_sided.margin(K - q);
        }
      }
    }
    out.push_back(h00.bounded("|H(0,0,x,t)| <= K=" + num(K)));
    out.push_back(one_sided.bounded("H(0,u)-H(0,v) <= K(u-v) for u>v"));

    const auto& table = problem_.hamiltonian.lipschitz_table;
    if (table.empty()) {
      out.push_back(Check::failed("local_bound", "no K_{m,n} constants declared"));
      out.push_back(Check::failed("local_p_lipschitz", "no K_{m,n} constants declared"));
      return out;
    }
    Check local_bound("local_bound");
    Check local_lip("local_p_lipschitz");
    std::size_t covered = 0;
    for_each_point([&](const Vec& p, double u, const Vec& x, double t) {
      const auto k = problem_.hamiltonian.local_constant(std::abs(u), norm(x));
      if (!k) return;
      ++covered;
      const double b = std::abs(H(zero, u, x, t));
      local_bound.measure(b);
      local_bound.margin(*k - b);
      const double h0 = H(p, u, x, t);
      for (int d = 0; d < dim_; ++d) {
        const double q = std::abs(H(p + h_ * unit(dim_, d), u, x, t) - h0) / h_;
        local_lip.measure(q);
        local_lip.margin(*k - q);
      }
    });
    const std::string note = std::to_string(covered) + " lattice points covered by the table";
    out.push_back(local_bound.bounded(note));
    out.push_back(local_lip.bounded(note));
    return out;
  }

  template <typename Fn>
  void for_each_control(Fn&& fn) const {
    const IsaacsSpec& s = *problem_.hamiltonian.isaacs;
    for (const ControlVec& d : s.D_points) {
      for (const ControlVec& e : s.Gamma_points) fn(d, e);
    }
  }

  CheckEntry coefficient_lipschitz() const {
    Check c("coefficient_lipschitz");
    const IsaacsSpec& s = *problem_.hamiltonian.isaacs;
    for (const Vec& x : lattice_.xs) {
      for (double t : lattice_.ts) {
        for_each_control([&](const ControlVec& d, const ControlVec& e) {
          const double f0 = s.source(x, t, d, e);
          const double h0 = s.potential(x, t, d, e);
          const Vec i0 = s.drift(x, t, d, e);
          auto probe = [&](const Vec& x1, double t1, double step) {
            c.measure(std::abs(s.source(x1, t1, d, e) - f0) / step);
            c.measure(std::abs(s.potential(x1, t1, d, e) - h0) / step);
            c.measure((s.drift(x1, t1, d, e) - i0).norm() / step);
          };
          for (int k = 0; k < dim_; ++k) probe(x + h_ * unit(dim_, k), t, h_);
          probe(x, t + h_, h_);
        });
      }
    }
    return c.finite("finite-difference Lipschitz estimate of f, h, i in (x, t)");
  }

  std::vector<CheckEntry> suite_c_coefficients() const {
    const IsaacsSpec& s = *problem_.hamiltonian.isaacs;
    Check f("source_bounded");
    Check h("potential_bounded_above");
    for (const Vec& x : lattice_.xs) {
      for (double t : lattice_.ts) {
        for_each_control([&](const ControlVec& d, const ControlVec& e) {
          const double fv = s.source(x, t, d, e);
          f.measure(std::abs(fv));
          if (s.bounds.f_bound) f.margin(*s.bounds.f_bound - std::abs(fv));
          const double hv = s.potential(x, t, d, e);
          h.measure(hv);
          if (s.bounds.h_upper) h.margin(*s.bounds.h_upper - hv);
        });
      }
    }
    return {s.bounds.f_bound ? f.bounded("|f| <= " + num(*s.bounds.f_bound))
                             : f.finite("sup |f| on the lattice"),
            s.bounds.h_upper ? h.bounded("h <= " + num(*s.bounds.h_upper))
                             : h.finite("sup h on the lattice")};
  }

  std::vector<CheckEntry> suite_d_coefficients() const {
    const IsaacsSpec& s = *problem_.hamiltonian.isaacs;
    const double A = s.bounds.A;
    const double B = s.bounds.B;
    Check h("potential_growth");
    Check fb("source_terminal_exponential");
    Check i("drift_linear_growth");
    for (const Vec& x : lattice_.xs) {
      const double r = norm(x);
      const double beta = std::abs(problem_.terminal(x));
      for (double t : lattice_.ts) {
        for_each_control([&](const ControlVec& d, const ControlVec& e) {
          const double hv = s.potential(x, t, d, e);
          h.measure(std::abs(hv));
          h.margin(std::max(B * (1.0 + r) - std::abs(hv), B - hv));
          const double lhs = std::abs(s.source(x, t, d, e)) + beta;
          fb.measure(lhs);
          fb.margin(B * std::exp(A * r) - lhs);
          const double iv = s.drift(x, t, d, e).norm();
          i.measure(iv);
          i.margin(B * (1.0 + r) - iv);
        });
      }
    }
    return {h.bounded("|h| <= B(1+|x|) or h <= B"), fb.bounded("|f|+|beta| <= B e^{A|x|}"),
            i.bounded("|i| <= B(1+|x|)")};
  }

  static std::string num(double v) {
    std::ostringstream os;
    os << v;
    return os.str();
  }

 private:
  const Problem& problem_;
  const SampleLattice& lattice_;
  int dim_;
  double h_;
};

}  // namespace

SampleLattice SampleLattice::for_problem(const Problem& problem, int x_per_dim, int t_levels,
                                         double u_range, double p_range, int up_count) {
  SampleLattice l;
  l.xs = tensor(problem.dim, linspace(-problem.grid.radius, problem.grid.radius, x_per_dim));
  l.ts = linspace(0.0, problem.horizon, t_levels);
  l.us = linspace(-u_range, u_range, up_count);
  l.ps = tensor(problem.dim, linspace(-p_range, p_range, up_count));
  return l;
}

bool ValidationReport::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const CheckEntry& c) { return c.passed; });
}

const CheckEntry* ValidationReport::find(const std::string& name) const {
  for (const auto& c : checks) {
    if (c.name == name) return &c;
  }
  return nullptr;
}

std::string ValidationReport::summary() const {
  std::ostringstream os;
  os << "suite " << to_string(suite) << ": " << (passed() ? "PASS" : "FAIL") << "\n";
  for (const auto& c : checks) {
    os << "  " << (c.passed ? "pass" : "FAIL") << "  " << c.name << "  worst_margin=" << c.worst_margin
       << "  measured=" << c.measured;
    if (!c.detail.empty()) os << "  (" << c.detail << ")";
    os << "\n";
  }
  return os.str();
}

ValidationReport validate_assumptions(const Problem& problem, Suite suite, const SampleLattice& lattice) {
  ValidationReport report;
  report.suite = suite;
  const Validator v(problem, lattice);
  auto& out = report.checks;
  const bool isaacs = problem.is_isaacs() && problem.hamiltonian.isaacs.has_value();
  const double K = problem.hamiltonian.growth_K;

  out.push_back(v.ellipticity());
  switch (suite) {
    case Suite::A:
      out.push_back(v.sigma_bound(problem.diffusion.sigma_bound, "sigma_bound"));
      out.push_back(v.sigma_lipschitz());
      out.push_back(v.terminal_bounded());
      out.push_back(v.terminal_lipschitz());
      out.push_back(v.growth(K));
      out.push_back(v.lipschitz(K));
      break;
    case Suite::B: {
      out.push_back(v.sigma_lipschitz());
      auto h = v.suite_b_hamiltonian(K);
      out.insert(out.end(), h.begin(), h.end());
      out.push_back(v.terminal_bounded());
      out.push_back(v.terminal_lipschitz());
      break;
    }
    case Suite::C:
    case Suite::D: {
      out.push_back(v.sigma_lipschitz());
      if (!isaacs) {
        out.push_back(Check::failed("isaacs_form", "suite requires an Isaacs Hamiltonian"));
        break;
      }
      out.push_back(v.coefficient_lipschitz());
      out.push_back(v.terminal_lipschitz());
      if (suite == Suite::C) {
        out.push_back(v.terminal_bounded());
        auto c = v.suite_c_coefficients();
        out.insert(out.end(), c.begin(), c.end());
      } else {
        auto d = v.suite_d_coefficients();
        out.insert(out.end(), d.begin(), d.end());
        out.push_back(v.sigma_bound(problem.hamiltonian.isaacs->bounds.B, "sigma_bound"));
      }
      break;
    }
  }
  return report;
}

}  // namespace semilin
