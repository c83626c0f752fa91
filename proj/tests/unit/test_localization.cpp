#include <doctest.h>

#include <cmath>

#include "semilin/config.hpp"
#include "semilin/errors.hpp"
#include "semilin/localization.hpp"
#include "semilin/validation.hpp"
#include "support.hpp"

using namespace semilin;
using namespace testing;

TEST_CASE("cutoff values") {
  CHECK(cutoff(1.0, 2.0) == 1.0);
  CHECK(cutoff(3.0, 2.0) == 0.5);
  CHECK(cutoff(5.0, 2.0) == 0.0);
  CHECK(cutoff(-3.0, 2.0) == 0.5);
  CHECK(cutoff(vec2(3.0, 4.0), 2.5) == 0.0);
  CHECK(cutoff(vec2(3.0, 4.0), 4.0) == doctest::Approx(0.75));
  for (double k : {0.0, -1.0}) {
    try {
      cutoff(1.0, k);
      FAIL("non-positive radius accepted");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::Precondition);
    }
  }
}

TEST_CASE("cutoff is Lipschitz with constant 1/k") {
  std::mt19937_64 rng(99);
  double worst = 0.0;
  for (int n = 0; n < 1000; ++n) {
    const double k = uniform(rng, 0.1, 5);
    const double z = uniform(rng, -3 * k, 3 * k), w = uniform(rng, -3 * k, 3 * k);
    const double q = std::abs(cutoff(z, k) - cutoff(w, k)) / std::abs(z - w);
    CHECK(q <= 1.0 / k * (1 + 1e-12));
    worst = std::max(worst, q * k);
  }
  // the constant is attained on the ramp
  CHECK(std::abs(cutoff(1.2, 1.0) - cutoff(1.7, 1.0)) == doctest::Approx(0.5));
  CHECK(worst > 0.99);
}

TEST_CASE("product with a cutoff keeps the stated Lipschitz bound") {
  std::mt19937_64 rng(5);
  for (int n = 0; n < 200; ++n) {
    const double a = uniform(rng, -2, 2), b = uniform(rng, 0.1, 3), c = uniform(rng, -3, 3), l = uniform(rng, 0.2, 4);
    const double L = std::abs(a * b) + std::abs(a * b);  // phi = a sin(b z) + a b z + c
    auto phi = [&](double z) { return a * std::sin(b * z) + a * b * z + c; };
    const double bound = cutoff_product_lipschitz(L, phi(0), l);
    double worst = 0.0;
    for (int m = 0; m < 200; ++m) {
      const double z = uniform(rng, -3 * l, 3 * l), w = uniform(rng, -3 * l, 3 * l);
      worst = std::max(worst, std::abs(cutoff(z, l) * phi(z) - cutoff(w, l) * phi(w)) / std::abs(z - w));
    }
    CHECK(worst <= bound);
  }
}

TEST_CASE("sigma truncation") {
  const DiffusionSpec c = DiffusionSpec::constant_matrix(identity(1) * 1.7);
  const DiffusionSpec tc = truncate_sigma(c, 0.5);
  CHECK(tc.sigma(vec1(9.0), 0.2)(0, 0) == 1.7);
  CHECK(tc.mu_ellipticity == c.mu_ellipticity);

  DiffusionSpec grow;
  grow.dim = 1;
  grow.mu_ellipticity = 1.0;
  grow.sigma = [](const Vec& x, double) {
    Mat m(1, 1);
    m << 1 + std::abs(x[0]);
    return m;
  };
  const DiffusionSpec g2 = truncate_sigma(grow, 2.0);
  CHECK(g2.sigma(vec1(5.0), 0)(0, 0) == 3.0);
  CHECK(g2.sigma(vec1(-5.0), 0)(0, 0) == 3.0);
  CHECK(g2.sigma(vec1(1.5), 0)(0, 0) == 2.5);
  CHECK(g2.mu_ellipticity == grow.mu_ellipticity);

  DiffusionSpec rot;
  rot.dim = 2;
  rot.sigma = [](const Vec& x, double t) {
    Mat m(2, 2);
    m << 1 + x[0] * x[0], x[1], 0.0, 1 + t;
    return m;
  };
  const DiffusionSpec r2 = truncate_sigma(rot, 1.5);
  std::mt19937_64 rng(1);
  for (int n = 0; n < 50; ++n) {
    Vec e = random_vec(rng, 2, -1, 1);
    e.normalize();
    CHECK((r2.sigma(Vec(1.4 * e), 0.3) - rot.sigma(Vec(1.4 * e), 0.3)).norm() == 0.0);
    CHECK((r2.sigma(Vec(7.0 * e), 0.3) - rot.sigma(Vec(1.5 * e), 0.3)).norm() <= 1e-14);
  }
}

TEST_CASE("localized hamiltonian: plateau, support and validation") {
  const Problem burgers = builtin("burgers");
  const CutoffFamily fam{3.0, 1.0, 1.0};
  const LocalizedProblem loc = localize_problem(burgers, fam);
  CHECK(loc.problem.hamiltonian(vec1(3), 3, vec1(0), 0) == 0.0);
  CHECK(loc.problem.suite == Suite::A);

  std::mt19937_64 rng(12);
  for (int n = 0; n < 500; ++n) {
    const Vec x = random_vec(rng, 1, -8, 8), p = random_vec(rng, 1, -3, 3);
    const double u = uniform(rng, -3, 3), t = uniform(rng, 0, 0.5);
    const double h = loc.problem.hamiltonian(p, u, x, t);
    if (std::abs(x[0]) <= fam.k_x && std::abs(p[0]) <= fam.k_p && std::abs(u) <= fam.k_u) {
      CHECK(h == burgers.hamiltonian(p, u, x, t));
    }
    if (std::abs(x[0]) >= 2 * fam.k_x || std::abs(p[0]) >= 2 * fam.k_p || std::abs(u) >= 2 * fam.k_u) CHECK(h == 0.0);
  }

  const SampleLattice lat = SampleLattice::for_problem(loc.problem, 17, 3, 4, 4, 17);
  double sup = 0.0;
  for (const Vec& x : lat.xs) {
    for (double t : lat.ts) {
      for (double u : lat.us) {
        for (const Vec& p : lat.ps) {
          const double h = std::abs(loc.problem.hamiltonian(p, u, x, t));
          sup = std::max(sup, h / (1 + std::abs(u) + std::abs(p[0])));
          CHECK(h <= loc.problem.hamiltonian.growth_K * (1 + std::abs(u) + std::abs(p[0])));
        }
      }
    }
  }
  MESSAGE("measured L(k) = " << sup << ", declared " << loc.problem.hamiltonian.growth_K);
  const ValidationReport a = validate_assumptions(loc.problem, Suite::A, SampleLattice::for_problem(loc.problem));
  CHECK_MESSAGE(a.passed(), a.summary());
  REQUIRE(a.find("ellipticity") != nullptr);
  CHECK(a.find("ellipticity")->passed);
}

TEST_CASE("localization is the identity on data inside the plateau") {
  Problem p = builtin("linear_heat");
  p.hamiltonian = HamiltonianSpec::generic(
      [](const Vec&, double u, const Vec& x, double) { return cutoff(x, 0.5) * 0.5 * std::sin(u); });
  p.terminal = [](const Vec& x) { return cutoff(x, 0.5); };
  const LocalizedProblem loc = localize_problem(p, CutoffFamily{4.0, 100.0, 100.0});
  const SpatialGrid g = p.space_time_grid().space;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const Vec x = g.node(i);
    CHECK(loc.problem.terminal(x) == p.terminal(x));
    for (double u : {-1.0, 0.3, 2.0}) CHECK(loc.problem.hamiltonian(vec1(0.7), u, x, 0.5) == p.hamiltonian(vec1(0.7), u, x, 0.5));
  }
}

TEST_CASE("isaacs localization is coefficientwise") {
  const Problem game = builtin("robust_game");
  const LocalizedProblem loc = localize_problem(game, CutoffFamily::uniform(2.0));
  const IsaacsSpec& s = *loc.problem.hamiltonian.isaacs;
  const IsaacsSpec& b = *game.hamiltonian.isaacs;
  ControlVec d(1), e(1);
  d << 1.0;
  e << -0.5;
  CHECK(s.drift(vec1(5.0), 0, d, e)[0] == 0.0);
  CHECK(s.source(vec1(3.0), 0, d, e) == doctest::Approx(0.5 * b.source(vec1(3.0), 0, d, e)));
  CHECK(s.potential(vec1(5.0), 0, d, e) == b.potential(vec1(5.0), 0, d, e));  // h is bounded above
  CHECK(loc.problem.terminal(vec1(3.0)) == 0.5 * game.terminal(vec1(3.0)));
}

TEST_CASE("stability ladder") {
  Problem p = builtin("linear_heat");
  p.grid = GridSpec{8.0, 65, 17};
  p.hamiltonian = HamiltonianSpec::generic(
      [](const Vec&, double u, const Vec& x, double) { return cutoff(x, 0.5) * 0.5 * std::sin(u); });
  p.terminal = [](const Vec& x) { return cutoff(x, 0.5); };
  SolverSettings s;
  s.params = p.kernel_params();
  s.tol = 1e-6;
  const StabilityReport same = stability_check(p, {4.0, 8.0}, CutoffFamily{4.0, 100.0, 100.0}, s);
  CHECK(same.conclusive);
  CHECK(same.gaps.front() <= 2 * s.tol);

  try {
    stability_check(p, {4.0}, CutoffFamily{}, s);
    FAIL("single radius accepted");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Precondition);
  }
  CHECK_THROWS_AS(stability_check(p, {4.0, 2.0}, CutoffFamily{}, s), Error);

  Problem burgers = builtin("burgers");
  burgers.grid = GridSpec{8.0, 129, 33};
  SolverSettings bs;
  bs.params = burgers.kernel_params();
  const StabilityReport ladder = stability_check(burgers, {2.0, 4.0, 8.0}, CutoffFamily{2.0, 1.0, 1.0}, bs);
  CHECK(ladder.conclusive);
  REQUIRE(ladder.gaps.size() == 2);
  // the burgers ladder on the unit ball
  const double g1 = ball_gap(ladder.rungs[0].solution, ladder.rungs[1].solution, 1.0);
  const double g2 = ball_gap(ladder.rungs[1].solution, ladder.rungs[2].solution, 1.0);
  MESSAGE("gaps on B_1: " << g1 << " " << g2);
  CHECK(g2 < g1);
  CHECK(ladder.monotone);
}
