#include <cmath>
#include <random>

#include <doctest.h>

#include "jkoflow/functionals.hpp"
#include "jkoflow/ot.hpp"
#include "test_support.hpp"

using namespace jkoflow;

namespace {

DensityField uniform_on(const Grid& g, double lo, double hi) {
  return normalize(sample_density(
      g, [&](double x, double) { return (x >= lo && x <= hi) ? 1.0 : 0.0; }));
}

}  // namespace

TEST_CASE("exact 1d transport: identity") {
  const Grid g = Grid::line(32, 0.0, 1.0);
  const DensityField u = normalize(make_density(g, 1.0));
  const TransportResult tr = exact_ot_1d(u, u);
  CHECK(tr.w2 == doctest::Approx(0.0).epsilon(1e-14));
  for (int i = 0; i < g.n[0]; ++i)
    CHECK(tr.map.values[i] == doctest::Approx(g.center(0, i)).epsilon(1e-12));
  for (double v : tr.phi.values) CHECK(std::abs(v) <= 1e-12);
}

TEST_CASE("exact 1d transport: uniform to half-interval") {
  const Grid g = Grid::line(64, 0.0, 1.0);
  const DensityField rho = normalize(make_density(g, 1.0));
  const DensityField eta = uniform_on(g, 0.0, 0.5);
  const TransportResult tr = exact_ot_1d(rho, eta);
  // T(x) = x/2, w2^2 = int (x/2)^2 dx = 1/12 exactly for the
  // piecewise-constant interpretation
  CHECK(tr.w2 * tr.w2 == doctest::Approx(1.0 / 12.0).epsilon(1e-12));
  for (int i = 0; i < g.n[0]; ++i)
    CHECK(tr.map.values[i] == doctest::Approx(0.5 * g.center(0, i)).epsilon(1e-10));
  // grad phi = id - T = x/2 at interior cells
  for (int i = 1; i + 1 < g.n[0]; ++i) {
    const double grad = (tr.phi.values[i + 1] - tr.phi.values[i - 1]) / (2.0 * g.spacing(0));
    CHECK(grad == doctest::Approx(0.5 * g.center(0, i)).epsilon(5e-3));
  }
}

TEST_CASE("exact 1d transport: translation") {
  const Grid g = Grid::line(80, 0.0, 2.0);
  const DensityField rho = uniform_on(g, 0.0, 1.0);
  const DensityField eta = uniform_on(g, 0.5, 1.5);
  const TransportResult tr = exact_ot_1d(rho, eta);
  CHECK(tr.w2 == doctest::Approx(0.5).epsilon(1e-12));
  for (int i = 0; i < g.n[0] / 2; ++i)
    CHECK(tr.map.values[i] == doctest::Approx(g.center(0, i) + 0.5).epsilon(1e-10));
}

TEST_CASE("exact 1d transport rejects bad input") {
  const Grid b = Grid::box(4, 4, 0.0, 0.0, 1.0, 1.0);
  const DensityField u2 = normalize(make_density(b, 1.0));
  CHECK_THROWS_AS(exact_ot_1d(u2, u2), DimensionError);
}

TEST_CASE("dual pair properties on random smooth pairs") {
  std::mt19937 rng(11);
  const Grid g = Grid::line(96, 0.0, 1.0);
  for (int trial = 0; trial < 12; ++trial) {
    const DensityField rho = testing::bump_mixture_1d(g, rng);
    const DensityField eta = testing::bump_mixture_1d(g, rng);
    const TransportResult tr = exact_ot_1d(rho, eta);

    // feasibility phi(x) + psi(y) <= |x-y|^2/2 at all grid pairs
    double worst = -1e300;
    for (int i = 0; i < g.n[0]; ++i)
      for (int j = 0; j < g.n[0]; ++j) {
        const double c = 0.5 * std::pow(g.center(0, i) - g.center(0, j), 2);
        worst = std::max(worst, tr.phi.values[i] + tr.psi.values[j] - c);
      }
    CHECK(worst <= 1e-9);

    // duality value: int phi d rho + int psi d eta equals w2^2/2 up to the
    // midpoint-quadrature error of the two integrals
    const double dual = quadrature(tr.phi, rho) + quadrature(tr.psi, eta);
    CHECK(std::abs(dual - 0.5 * tr.w2 * tr.w2) <= 5e-3);

    // symmetry
    const TransportResult rev = exact_ot_1d(eta, rho);
    CHECK(std::abs(tr.w2 - rev.w2) <= 1e-8);

    // monotone map
    for (int i = 1; i < g.n[0]; ++i)
      CHECK(tr.map.values[i] >= tr.map.values[i - 1] - 1e-12);
  }
}

TEST_CASE("triangle inequality on random triples") {
  std::mt19937 rng(13);
  const Grid g = Grid::line(48, -1.0, 1.0);
  for (int trial = 0; trial < 10; ++trial) {
    const DensityField a = testing::bump_mixture_1d(g, rng);
    const DensityField b = testing::bump_mixture_1d(g, rng);
    const DensityField c = testing::bump_mixture_1d(g, rng);
    const double ab = exact_ot_1d(a, b).w2;
    const double bc = exact_ot_1d(b, c).w2;
    const double ac = exact_ot_1d(a, c).w2;
    CHECK(ac <= ab + bc + 1e-8);
  }
}

TEST_CASE("cumulative-coordinate cost gradient matches finite differences") {
  std::mt19937 rng(17);
  const Grid g = Grid::line(12, 0.0, 1.0);
  const DensityField rho = testing::bump_mixture_1d(g, rng);
  const DensityField eta = testing::bump_mixture_1d(g, rng);
  std::vector<double> ma(rho.values.size()), mb(eta.values.size());
  for (std::size_t i = 0; i < ma.size(); ++i) {
    ma[i] = rho.values[i] * g.cell_volume();
    mb[i] = eta.values[i] * g.cell_volume();
  }
  std::vector<double> grad;
  detail::transport_cost_and_grad_1d(g, ma, mb, grad);

  const double fd_h = 1e-7;
  for (int j = 1; j < g.n[0]; ++j) {
    // moving level M_j transfers mass between cells j-1 and j
    std::vector<double> plus = ma, minus = ma;
    plus[j - 1] += fd_h;
    plus[j] -= fd_h;
    minus[j - 1] -= fd_h;
    minus[j] += fd_h;
    const double fd = (detail::transport_cost_1d(g, plus, mb) -
                       detail::transport_cost_1d(g, minus, mb)) /
                      (2.0 * fd_h);
    CHECK(grad[j - 1] == doctest::Approx(fd).epsilon(1e-5));
  }
}

TEST_CASE("entropic solver: coincident one-hot marginals") {
  const Grid g = Grid::line(16, 0.0, 1.0);
  DensityField a = make_density(g);
  DensityField b = make_density(g);
  a.values[3] = 1.0 / g.cell_volume();
  b.values[12] = 1.0 / g.cell_volume();
  for (double eps : {1e-1, 1e-2, 1e-3}) {
    const TransportResult tr = sinkhorn(a, b, eps);
    CHECK(tr.w2 == doctest::Approx(std::abs(g.center(0, 3) - g.center(0, 12))).epsilon(1e-10));
  }
}

TEST_CASE("entropic solver: self-transport bias decreases with eps") {
  const Grid g = Grid::line(32, 0.0, 1.0);
  std::mt19937 rng(5);
  const DensityField rho = testing::bump_mixture_1d(g, rng);
  double prev = 1e300;
  for (double eps : {1e-2, 1e-3}) {
    const TransportResult tr = sinkhorn(rho, rho, eps);
    CHECK(tr.w2 <= std::sqrt(2.0 * eps * std::log(double(g.size()))) + 1e-9);
    CHECK(tr.w2 <= prev);
    prev = tr.w2;
    if (eps <= 1e-3) {
      // once the entropic blur sqrt(eps) drops below the spacing, the
      // barycentric map sits within one cell of the identity
      for (int i = 0; i < g.n[0]; ++i)
        CHECK(std::abs(tr.map.values[i] - g.center(0, i)) <= g.spacing(0) + 1e-9);
    }
  }
}

TEST_CASE("entropic solver: 1d value approaches the exact one as eps halves") {
  const Grid g = Grid::line(48, 0.0, 1.0);
  std::mt19937 rng(19);
  const DensityField rho = testing::bump_mixture_1d(g, rng);
  const DensityField eta = testing::bump_mixture_1d(g, rng);
  const double exact = exact_ot_1d(rho, eta).w2;
  double prev_gap = 1e300;
  const double diam2 = g.diameter() * g.diameter();
  for (double scale = 1e-1; scale >= 0.99e-4; scale *= 0.5) {
    const TransportResult tr = sinkhorn(rho, eta, scale * diam2);
    const double gap = std::abs(tr.w2 - exact);
    CHECK(gap <= prev_gap + 1e-6);
    prev_gap = gap;
  }
}

TEST_CASE("entropic solver: product densities split across axes") {
  const Grid g2 = Grid::box(24, 24, 0.0, 0.0, 1.0, 1.0);
  const Grid g1 = Grid::line(24, 0.0, 1.0);
  std::mt19937 rng(23);
  const DensityField r1 = testing::bump_mixture_1d(g1, rng, 2);
  const DensityField r2 = testing::bump_mixture_1d(g1, rng, 2);
  const DensityField e1 = testing::bump_mixture_1d(g1, rng, 2);
  const DensityField e2 = testing::bump_mixture_1d(g1, rng, 2);

  DensityField rho = make_density(g2), eta = make_density(g2);
  for (int i = 0; i < 24; ++i)
    for (int j = 0; j < 24; ++j) {
      rho.values[g2.index(i, j)] = r1.values[i] * r2.values[j];
      eta.values[g2.index(i, j)] = e1.values[i] * e2.values[j];
    }
  rho = normalize(rho);
  eta = normalize(eta);

  const double eps = 2e-3;
  const TransportResult tr = sinkhorn(rho, eta, eps);
  const double per_axis =
      std::pow(exact_ot_1d(r1, e1).w2, 2) + std::pow(exact_ot_1d(r2, e2).w2, 2);
  CHECK(std::abs(tr.w2 * tr.w2 - per_axis) <= 5 * eps);
}

TEST_CASE("entropic duals are feasible up to the entropic tolerance") {
  const Grid g = Grid::line(40, 0.0, 1.0);
  std::mt19937 rng(29);
  const DensityField rho = testing::bump_mixture_1d(g, rng);
  const DensityField eta = testing::bump_mixture_1d(g, rng);
  const double eps = 1e-3;
  const TransportResult tr = sinkhorn(rho, eta, eps);
  double worst = -1e300;
  for (int i = 0; i < g.n[0]; ++i)
    for (int j = 0; j < g.n[0]; ++j) {
      const double c = 0.5 * std::pow(g.center(0, i) - g.center(0, j), 2);
      worst = std::max(worst, tr.phi.values[i] + tr.psi.values[j] - c);
    }
  CHECK(worst <= eps * std::log(double(g.size())) + 1e-12);
}

TEST_CASE("displacement interpolation") {
  const Grid g = Grid::line(128, 0.0, 2.0);
  SUBCASE("endpoints") {
    std::mt19937 rng(31);
    const DensityField rho = testing::bump_mixture_1d(g, rng);
    const DensityField eta = testing::bump_mixture_1d(g, rng);
    const TransportResult tr = exact_ot_1d(rho, eta);
    const DensityField at0 = displacement_interpolate(rho, tr, 0.0);
    for (std::size_t i = 0; i < rho.values.size(); ++i)
      CHECK(at0.values[i] == doctest::Approx(rho.values[i]).epsilon(1e-9));
    const DensityField at1 = displacement_interpolate(rho, tr, 1.0);
    CHECK(exact_ot_1d(at1, eta).w2 <= 2.0 * g.spacing(0));
    CHECK_THROWS_AS(displacement_interpolate(rho, tr, 1.5), BadParameter);
  }
  SUBCASE("translation midpoint") {
    const DensityField rho = uniform_on(g, 0.0, 1.0);
    const DensityField eta = uniform_on(g, 0.5, 1.5);
    const TransportResult tr = exact_ot_1d(rho, eta);
    const DensityField mid = displacement_interpolate(rho, tr, 0.5);
    const DensityField expected = uniform_on(g, 0.25, 1.25);
    CHECK(exact_ot_1d(mid, expected).w2 <= 2.0 * g.spacing(0));
  }
}

TEST_CASE("entropy is displacement convex along geodesics") {
  const Grid g = Grid::line(256, 0.0, 1.0);
  std::mt19937 rng(37);
  Functional ent;
  ent.entropy = true;
  for (int trial = 0; trial < 4; ++trial) {
    const DensityField rho = testing::bump_mixture_1d(g, rng);
    const DensityField eta = testing::bump_mixture_1d(g, rng);
    const TransportResult tr = exact_ot_1d(rho, eta);
    std::vector<double> values;
    for (double t : {0.0, 0.25, 0.5, 0.75, 1.0})
      values.push_back(evaluate(ent, displacement_interpolate(rho, tr, t)));
    for (int k = 1; k + 1 < 5; ++k)
      CHECK(values[k] <= 0.5 * (values[k - 1] + values[k + 1]) + 1e-3);
  }
}
