#include <cmath>
#include <random>

#include <doctest.h>

#include "jkoflow/elliptic.hpp"
#include "jkoflow/functionals.hpp"
#include "test_support.hpp"

using namespace jkoflow;

TEST_CASE("entropy of the uniform density on the unit interval is zero") {
  const Grid g = Grid::line(32, 0.0, 1.0);
  Functional f;
  f.entropy = true;
  CHECK(evaluate(f, normalize(make_density(g, 1.0))) == doctest::Approx(0.0).epsilon(1e-13));
}

TEST_CASE("potential energy of V(x) = x under the uniform density") {
  const Grid g = Grid::line(50, 0.0, 1.0);
  Functional f;
  f.potential = PotentialTerm{sample_scalar(g, [](double x, double) { return x; }), 1.0, 0.0};
  // midpoint symmetry makes this exact
  CHECK(evaluate(f, normalize(make_density(g, 1.0))) == doctest::Approx(0.5).epsilon(1e-13));
}

TEST_CASE("interaction energy of the quadratic kernel under the uniform density") {
  const Grid g = Grid::line(64, 0.0, 1.0);
  Functional f;
  f.interaction = make_interaction(
      g, [](double z, double) { return z * z; }, 2.0, 2.0);
  const double h2 = g.spacing(0) * g.spacing(0);
  CHECK(std::abs(evaluate(f, normalize(make_density(g, 1.0))) - 1.0 / 12.0) <= h2);
}

TEST_CASE("interaction kernels must be even") {
  const Grid g = Grid::line(16, 0.0, 1.0);
  CHECK_THROWS_AS(make_interaction(g, [](double z, double) { return z; }, 1.0, 0.0),
                  BadParameter);
}

TEST_CASE("first variation of a potential term ignores the density") {
  const Grid g = Grid::line(40, -1.0, 1.0);
  Functional f;
  f.potential = PotentialTerm{sample_scalar(g, [](double x, double) { return 2.0 * x * x; }),
                              4.0, 4.0};
  std::mt19937 rng(53);
  for (int t = 0; t < 3; ++t) {
    const ScalarField u = first_variation(f, testing::bump_mixture_1d(g, rng));
    for (std::size_t i = 0; i < u.values.size(); ++i)
      CHECK(u.values[i] == doctest::Approx(f.potential->v.values[i]));
  }
}

TEST_CASE("first variation of the quadratic interaction under the uniform density") {
  const Grid g = Grid::line(96, 0.0, 1.0);
  Functional f;
  f.interaction = make_interaction(
      g, [](double z, double) { return z * z; }, 2.0, 2.0);
  const DensityField rho = normalize(make_density(g, 1.0));
  const ScalarField u = first_variation(f, rho);

  // independent accumulation of the convolution sum
  const double h2 = g.spacing(0) * g.spacing(0);
  for (int i = 0; i < g.n[0]; i += 7) {
    double direct = 0.0;
    for (int j = 0; j < g.n[0]; ++j) {
      const double z = g.center(0, i) - g.center(0, j);
      direct += z * z * rho.values[j] * g.cell_volume();
    }
    CHECK(u.values[i] == doctest::Approx(direct).epsilon(1e-13));
    const double x = g.center(0, i);
    CHECK(std::abs(u.values[i] - (x * x - x + 1.0 / 3.0)) <= h2);
  }
}

TEST_CASE("first variation of the interaction term is linear in the density") {
  const Grid g = Grid::line(32, 0.0, 1.0);
  Functional f;
  f.interaction = make_interaction(
      g, [](double z, double) { return std::cos(M_PI * z); }, M_PI, M_PI * M_PI);
  std::mt19937 rng(59);
  const DensityField a = testing::bump_mixture_1d(g, rng);
  const DensityField b = testing::bump_mixture_1d(g, rng);
  DensityField mix = make_density(g);
  for (std::size_t i = 0; i < g.size(); ++i)
    mix.values[i] = 0.3 * a.values[i] + 0.7 * b.values[i];
  const ScalarField ua = first_variation(f, a);
  const ScalarField ub = first_variation(f, b);
  const ScalarField um = first_variation(f, mix);
  for (std::size_t i = 0; i < g.size(); ++i)
    CHECK(um.values[i] ==
          doctest::Approx(0.3 * ua.values[i] + 0.7 * ub.values[i]).epsilon(1e-12));
}

TEST_CASE("chemotaxis first variation matches the elliptic solve") {
  const Grid g = Grid::box(24, 24, 0.0, 0.0, 1.0, 1.0);
  Functional f;
  f.keller_segel = KellerSegelTerm{3.0, 1e-11};
  std::mt19937 rng(61);
  std::uniform_real_distribution<double> unif(0.1, 1.0);
  DensityField rho = make_density(g);
  for (double& v : rho.values) v = unif(rng);
  rho = normalize(rho);
  const ScalarField u = first_variation(f, rho);
  const PoissonSolution sol = solve_poisson(rho, 1e-11);
  for (std::size_t i = 0; i < g.size(); ++i)
    CHECK(u.values[i] == doctest::Approx(-3.0 * sol.h.values[i]).epsilon(1e-10));
}

TEST_CASE("directional derivatives of each term match the first variation") {
  const Grid g = Grid::line(48, 0.0, 1.0);
  std::mt19937 rng(67);
  const DensityField rho = testing::bump_mixture_1d(g, rng);
  // mean-zero perturbation keeping rho + eps xi a probability density
  const DensityField other = testing::bump_mixture_1d(g, rng);
  std::vector<double> xi(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) xi[i] = other.values[i] - rho.values[i];

  auto gateaux = [&](const Functional& f) {
    const ScalarField u = first_variation(f, rho);
    double pairing = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) pairing += u.values[i] * xi[i];
    pairing *= g.cell_volume();
    const double eps = 1e-5;
    DensityField bumped = rho;
    for (std::size_t i = 0; i < g.size(); ++i) bumped.values[i] += eps * xi[i];
    const double fd = (evaluate(f, bumped) - evaluate(f, rho)) / eps;
    return std::abs(fd - pairing);
  };

  Functional pot;
  pot.potential = PotentialTerm{sample_scalar(g, [](double x, double) { return x * x; }), 2.0, 2.0};
  CHECK(gateaux(pot) <= 1e-12);

  Functional inter;
  inter.interaction = make_interaction(
      g, [](double z, double) { return std::cos(M_PI * z); }, M_PI, M_PI * M_PI);
  CHECK(gateaux(inter) <= 1e-4);  // quadratic term leaves an O(eps) remainder

  Functional ks;
  ks.keller_segel = KellerSegelTerm{2.0, 1e-11};
  CHECK(gateaux(ks) <= 1e-4);

  Functional lq;
  lq.lq_smoothing = LqSmoothingTerm{0.5, 2.0};
  CHECK(gateaux(lq) <= 1e-4);
}

TEST_CASE("displacement-convexity condition checks") {
  SUBCASE("entropy integrand passes in both dimensions") {
    for (int d : {1, 2}) CHECK(mccann_check(McCannFunction::entropy(), d).pass);
  }
  SUBCASE("powers pass") {
    CHECK(mccann_check(McCannFunction::power(2.0), 2).pass);
    CHECK(mccann_check(McCannFunction::power(1.5), 1).pass);
  }
  SUBCASE("clamped power family passes for every p >= 1") {
    for (double p : {1.0, 1.05, 1.5, 2.0, 3.0})
      CHECK(mccann_check(McCannFunction::f_pk(p, 1.0, 2), 2).pass);
  }
  SUBCASE("shifted power family has the threshold 4d/(3d+1)") {
    // d = 2: threshold p = 8/7
    CHECK(mccann_check(McCannFunction::f_tilde_pk(8.0 / 7.0, 1.0), 2).pass);
    CHECK_FALSE(mccann_check(McCannFunction::f_tilde_pk(1.1, 1.0), 2).pass);
    const McCannVerdict v = mccann_check(McCannFunction::f_tilde_pk(1.1, 1.0), 2);
    CHECK(v.first_violation_s > 0.0);
  }
  SUBCASE("passing integrands are themselves convex") {
    for (const McCannFunction& f :
         {McCannFunction::entropy(), McCannFunction::power(2.0),
          McCannFunction::f_pk(1.5, 1.0, 2), McCannFunction::f_tilde_pk(8.0 / 7.0, 1.0)}) {
      REQUIRE(mccann_check(f, 2).pass);
      for (double s = 0.05; s < 20.0; s += 0.05) {
        const double second = f(s + 0.05) - 2.0 * f(s) + f(s - std::min(s, 0.05));
        CHECK(second >= -1e-9);
      }
    }
  }
  CHECK_THROWS_AS(mccann_check(McCannFunction::entropy(), 3), BadParameter);
  CHECK_THROWS_AS(mccann_check(McCannFunction::entropy(), 2, 10), BadParameter);
}

TEST_CASE("clamped-power integrals") {
  const Grid g = Grid::line(64, 0.0, 1.0);
  const DensityField half = normalize(
      sample_density(g, [](double x, double) { return x < 0.5 ? 1.0 : 0.0; }));

  SUBCASE("large K clamps everything to zero") {
    const McCannFunction f = McCannFunction::f_pk(2.0, 100.0, 2);
    CHECK(f_pk_integral(f, half) == 0.0);
  }
  SUBCASE("shifted power vanishes at the uniform density with K = 1") {
    const McCannFunction f = McCannFunction::f_tilde_pk(2.0, 1.0);
    CHECK(f_pk_integral(f, normalize(make_density(g, 1.0))) == 0.0);
  }
  SUBCASE("two-valued density evaluates in closed form") {
    // F_{2,1} with d = 2 at the density 2 on [0,1/2]: (4 - sqrt(2)) / 2
    const McCannFunction f = McCannFunction::f_pk(2.0, 1.0, 2);
    CHECK(f_pk_integral(f, half) ==
          doctest::Approx((4.0 - std::sqrt(2.0)) / 2.0).epsilon(1e-12));
  }
}

TEST_CASE("subcritical chemotaxis energy is bounded below empirically") {
  // d = 2 and chi <= 8 pi: the combined entropy + chemotaxis energy over a
  // randomized family of bump mixtures has a stable minimum under grid
  // refinement; the paper-level constants are not estimated.
  const double chi = 8.0 * M_PI;
  auto family_minimum = [&](int n) {
    const Grid g = Grid::box(n, n, 0.0, 0.0, 1.0, 1.0);
    Functional f;
    f.entropy = true;
    f.keller_segel = KellerSegelTerm{chi, 1e-9};
    std::mt19937 rng(71);
    std::uniform_real_distribution<double> upos(0.2, 0.8);
    std::uniform_real_distribution<double> usig(0.02, 0.3);
    std::uniform_real_distribution<double> uw(0.1, 1.0);
    double lowest = 1e300;
    for (int t = 0; t < 200; ++t) {
      const int bumps = 1 + t % 3;
      std::vector<double> cx(bumps), cy(bumps), sg(bumps), w(bumps);
      for (int b = 0; b < bumps; ++b) {
        cx[b] = upos(rng);
        cy[b] = upos(rng);
        sg[b] = usig(rng);
        w[b] = uw(rng);
      }
      const DensityField rho = normalize(sample_density(g, [&](double x, double y) {
        double v = 1e-3;
        for (int b = 0; b < bumps; ++b)
          v += w[b] * std::exp(-((x - cx[b]) * (x - cx[b]) + (y - cy[b]) * (y - cy[b])) /
                               (2.0 * sg[b] * sg[b]));
        return v;
      }));
      lowest = std::min(lowest, evaluate(f, rho));
    }
    return lowest;
  };
  const double coarse = family_minimum(24);
  const double fine = family_minimum(48);
  CHECK(std::isfinite(coarse));
  CHECK(std::isfinite(fine));
  CHECK(std::abs(fine - coarse) <= 0.5 * (1.0 + std::abs(coarse)));
}

TEST_CASE("functional validation") {
  const Grid g = Grid::box(8, 8, 0.0, 0.0, 1.0, 1.0);
  Functional f;
  f.keller_segel = KellerSegelTerm{-1.0, 1e-10};
  CHECK_THROWS_AS(f.validate(g), BadParameter);
  f.keller_segel = KellerSegelTerm{1.0, 1e-10};
  f.lq_smoothing = LqSmoothingTerm{1e-3, 0.9};  // q <= d/2 in 2D
  CHECK_THROWS_AS(f.validate(g), BadParameter);
  f.lq_smoothing = LqSmoothingTerm{1e-3, 2.0};
  CHECK_NOTHROW(f.validate(g));
}
