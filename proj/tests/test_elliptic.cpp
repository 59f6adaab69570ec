#include <cmath>
#include <random>

#include <doctest.h>

#include "jkoflow/elliptic.hpp"
#include "test_support.hpp"

using namespace jkoflow;

namespace {

// truncated double sine series for -laplace(h) = 1 on the unit square with
// zero boundary values: h = sum 16/(pi^4 m n (m^2+n^2)) sin(m pi x) sin(n pi y)
// over odd m, n
double unit_source_series(double x, double y, int modes = 31) {
  double s = 0.0;
  for (int m = 1; m <= modes; m += 2)
    for (int n = 1; n <= modes; n += 2)
      s += 16.0 / (std::pow(M_PI, 4) * m * n * (m * m + n * n)) * std::sin(m * M_PI * x) *
           std::sin(n * M_PI * y);
  return s;
}

double max_error_vs_manufactured(int n) {
  const Grid g = Grid::box(n, n, 0.0, 0.0, 1.0, 1.0);
  const DensityField rho = sample_density(g, [](double x, double y) {
    return 2.0 * M_PI * M_PI * std::sin(M_PI * x) * std::sin(M_PI * y);
  });
  const PoissonSolution sol = solve_poisson(rho, 1e-12);
  double worst = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      worst = std::max(worst, std::abs(sol.h.values[g.index(i, j)] -
                                       std::sin(M_PI * g.center(0, i)) *
                                           std::sin(M_PI * g.center(1, j))));
  return worst;
}

}  // namespace

TEST_CASE("zero source gives the zero solution") {
  const Grid g = Grid::box(16, 16, 0.0, 0.0, 1.0, 1.0);
  const PoissonSolution sol = solve_poisson(make_density(g), 1e-10);
  for (double v : sol.h.values) CHECK(v == 0.0);
}

TEST_CASE("manufactured solution converges at second order") {
  const double e32 = max_error_vs_manufactured(32);
  const double e64 = max_error_vs_manufactured(64);
  const double order = std::log2(e32 / e64);
  CHECK(order >= 1.9);
}

TEST_CASE("uniform source matches the sine-series reference") {
  const int n = 64;
  const Grid g = Grid::box(n, n, 0.0, 0.0, 1.0, 1.0);
  const DensityField rho = normalize(make_density(g, 1.0));
  const PoissonSolution sol = solve_poisson(rho, 1e-12);
  double worst = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      worst = std::max(worst, std::abs(sol.h.values[g.index(i, j)] -
                                       unit_source_series(g.center(0, i), g.center(1, j))));
  CHECK(worst <= 1e-4);
}

TEST_CASE("solver linearity") {
  const Grid g = Grid::box(24, 24, 0.0, 0.0, 1.0, 1.0);
  std::mt19937 rng(41);
  std::uniform_real_distribution<double> unif(0.1, 1.0);
  DensityField a = make_density(g), b = make_density(g);
  for (std::size_t i = 0; i < g.size(); ++i) {
    a.values[i] = unif(rng);
    b.values[i] = unif(rng);
  }
  const PoissonSolution sa = solve_poisson(a, 1e-12);
  const PoissonSolution sb = solve_poisson(b, 1e-12);
  DensityField combo = make_density(g);
  for (std::size_t i = 0; i < g.size(); ++i)
    combo.values[i] = 2.0 * a.values[i] + 0.5 * b.values[i];
  const PoissonSolution sc = solve_poisson(combo, 1e-12);
  for (std::size_t i = 0; i < g.size(); ++i)
    CHECK(std::abs(sc.h.values[i] - 2.0 * sa.h.values[i] - 0.5 * sb.h.values[i]) <= 1e-9);
}

TEST_CASE("maximum principle and boundary flux sign") {
  std::mt19937 rng(43);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const Grid g = Grid::box(32, 32, 0.0, 0.0, 1.0, 1.0);
  DensityField rho = make_density(g);
  for (double& v : rho.values) v = unif(rng);
  rho = normalize(rho);
  const PoissonSolution sol = solve_poisson(rho, 1e-11);

  double hmin = 1e300;
  for (double v : sol.h.values) hmin = std::min(hmin, v);
  CHECK(hmin >= -1e-10);

  // outward normal derivative at every boundary cell, read from the zero
  // boundary value: (0 - h_cell)/(half spacing) <= tol
  const double half = 0.5 * g.spacing(0);
  for (int i = 0; i < g.n[0]; ++i) {
    CHECK((0.0 - sol.h.values[g.index(i, 0)]) / half <= 1e-8);
    CHECK((0.0 - sol.h.values[g.index(i, g.n[1] - 1)]) / half <= 1e-8);
    CHECK((0.0 - sol.h.values[g.index(0, i)]) / half <= 1e-8);
    CHECK((0.0 - sol.h.values[g.index(g.n[0] - 1, i)]) / half <= 1e-8);
  }
}

TEST_CASE("the two energy forms approach each other under refinement") {
  double prev_gap = 1e300;
  for (int n : {16, 32, 64}) {
    const Grid g = Grid::box(n, n, 0.0, 0.0, 1.0, 1.0);
    const DensityField rho = normalize(sample_density(g, [](double x, double y) {
      return 1.0 + 0.5 * std::sin(M_PI * x) * std::sin(2.0 * M_PI * y);
    }));
    KsEnergyStats stats;
    ks_energy(rho, 1.0, 1e-12, &stats);
    CHECK(stats.discrepancy <= prev_gap);
    prev_gap = stats.discrepancy;
  }
}

TEST_CASE("chemotaxis energy values") {
  const int n = 64;
  const Grid g = Grid::box(n, n, 0.0, 0.0, 1.0, 1.0);
  const DensityField rho = normalize(make_density(g, 1.0));

  // -(1/2) int h d rho against the series reference
  double reference = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      reference += unit_source_series(g.center(0, i), g.center(1, j));
  reference *= -0.5 * g.cell_volume();

  const double energy = ks_energy(rho, 1.0, 1e-12);
  CHECK(std::abs(energy - reference) <= 1e-4);
  CHECK(energy < 0.0);

  // negative for any nonzero density and positive chi
  std::mt19937 rng(47);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  DensityField r = make_density(g);
  for (double& v : r.values) v = unif(rng);
  CHECK(ks_energy(normalize(r), 2.5, 1e-10) < 0.0);
}

TEST_CASE("1d solve against the parabolic profile") {
  // -h'' = 1 on (0,1), h(0) = h(1) = 0  ->  h = x(1-x)/2
  const Grid g = Grid::line(128, 0.0, 1.0);
  const PoissonSolution sol = solve_poisson(make_density(g, 1.0), 1e-12);
  const double h2 = g.spacing(0) * g.spacing(0);
  for (int i = 0; i < g.n[0]; ++i) {
    const double x = g.center(0, i);
    // boundary ghost reflection carries an O(h^2) truncation term
    CHECK(std::abs(sol.h.values[i] - 0.5 * x * (1.0 - x)) <= h2 / 4.0);
  }
}
