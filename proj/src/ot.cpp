#include "jkoflow/ot.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>

namespace jkoflow {

namespace {

// Positive-mass segments of a piecewise-linear CDF on a 1D grid.
struct Cdf1D {
  const Grid* g = nullptr;
  std::vector<int> cell;     // grid cell of each segment, mass > 0
  std::vector<double> c0;    // cumulative mass at segment start
  std::vector<double> c1;    // cumulative mass at segment end
  std::vector<double> mass;  // segment mass

  static Cdf1D build(const Grid& g, const std::vector<double>& m) {
    Cdf1D out;
    out.g = &g;
    double cum = 0.0;
    double total = 0.0;
    for (double v : m) total += v;
    for (int i = 0; i < g.n[0]; ++i) {
      if (m[i] > 0.0) {
        out.cell.push_back(i);
        out.c0.push_back(cum / total);
        cum += m[i];
        out.c1.push_back(cum / total);
        out.mass.push_back(m[i] / total);
      } else {
        cum += m[i];
      }
    }
    if (!out.c1.empty()) out.c1.back() = 1.0;
    return out;
  }

  double edge(int c) const { return g->lo[0] + c * g->spacing(0); }

  // value of the quantile within segment k at level s (clamped)
  double eval(std::size_t k, double s) const {
    const double t = std::clamp(s, c0[k], c1[k]);
    return edge(cell[k]) + (t - c0[k]) * g->spacing(0) / mass[k];
  }

  // left-continuous pseudo-inverse of the CDF
  double quantile(double s) const {
    std::size_t le = 0, ri = cell.size();  // first segment with c1 >= s
    while (le < ri) {
      const std::size_t mid = (le + ri) / 2;
      if (c1[mid] >= s) ri = mid; else le = mid + 1;
    }
    if (le == cell.size()) le = cell.size() - 1;
    return eval(le, s);
  }
};

double simpson(double fa, double fm, double fb, double len) {
  return len * (fa + 4.0 * fm + fb) / 6.0;
}

// Shared sweep over the merged quantile breakpoints. When iminus/iplus are
// given they receive, per source cell i, the moment integrals
//   iminus[i] = int (Qa-Qb)(s - M_i) ds,  iplus[i] = int (Qa-Qb)(s - M_{i+1}) ds
// over segment i, which assemble the cost gradient in cumulative-mass
// coordinates.
double quantile_sweep(const Cdf1D& A, const Cdf1D& B, std::vector<double>* iminus,
                      std::vector<double>* iplus) {
  double cost = 0.0;
  std::size_t ia = 0, ib = 0;
  double s = 0.0;
  while (s < 1.0 && ia < A.cell.size() && ib < B.cell.size()) {
    while (ia + 1 < A.cell.size() && A.c1[ia] <= s) ++ia;
    while (ib + 1 < B.cell.size() && B.c1[ib] <= s) ++ib;
    const double s2 = std::min(1.0, std::min(A.c1[ia], B.c1[ib]));
    if (s2 > s) {
      const double sm = 0.5 * (s + s2);
      const double d0 = A.eval(ia, s) - B.eval(ib, s);
      const double dm = A.eval(ia, sm) - B.eval(ib, sm);
      const double d1 = A.eval(ia, s2) - B.eval(ib, s2);
      cost += simpson(d0 * d0, dm * dm, d1 * d1, s2 - s);
      if (iminus) {
        const int c = A.cell[ia];
        const double m0 = A.c0[ia], m1 = A.c1[ia];
        (*iminus)[c] += simpson(d0 * (s - m0), dm * (sm - m0), d1 * (s2 - m0), s2 - s);
        (*iplus)[c] += simpson(d0 * (s - m1), dm * (sm - m1), d1 * (s2 - m1), s2 - s);
      }
    }
    if (s2 >= 1.0) break;
    s = s2;
    if (A.c1[ia] <= s && ia + 1 == A.cell.size() && B.c1[ib] <= s && ib + 1 == B.cell.size()) break;
  }
  return cost;
}

void require_1d_pair(const DensityField& rho, const DensityField& eta) {
  if (rho.grid.dim != 1) throw DimensionError("exact transport requires a 1D grid");
  if (rho.grid != eta.grid) throw GridMismatch();
}

std::vector<double> cell_masses(const DensityField& f) {
  std::vector<double> m(f.values.size());
  const double vol = f.grid.cell_volume();
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = f.values[i] * vol;
  return m;
}

}  // namespace

namespace detail {

double transport_cost_1d(const Grid& g, const std::vector<double>& ma,
                         const std::vector<double>& mb) {
  const Cdf1D A = Cdf1D::build(g, ma);
  const Cdf1D B = Cdf1D::build(g, mb);
  if (A.cell.empty() || B.cell.empty()) throw ZeroMass();
  return quantile_sweep(A, B, nullptr, nullptr);
}

double transport_cost_and_grad_1d(const Grid& g, const std::vector<double>& ma,
                                  const std::vector<double>& mb, std::vector<double>& grad) {
  const int n = g.n[0];
  double total = 0.0;
  for (double v : ma) total += v;
  if (std::abs(total - 1.0) > 1e-9)
    throw BadParameter("cost gradient is defined for unit-mass source vectors");
  const Cdf1D A = Cdf1D::build(g, ma);
  const Cdf1D B = Cdf1D::build(g, mb);
  if (static_cast<int>(A.cell.size()) != n)
    throw NonPositiveDensity("cost gradient needs positive source masses");
  if (B.cell.empty()) throw ZeroMass();
  std::vector<double> iminus(n, 0.0), iplus(n, 0.0);
  const double cost = quantile_sweep(A, B, &iminus, &iplus);
  const double h = g.spacing(0);
  grad.assign(n - 1, 0.0);
  for (int j = 1; j < n; ++j) {
    const double mj = ma[j], mjm = ma[j - 1];
    grad[j - 1] = 2.0 * h * (iplus[j] / (mj * mj) - iminus[j - 1] / (mjm * mjm));
  }
  return cost;
}

}  // namespace detail

TransportResult exact_ot_1d(const DensityField& rho, const DensityField& eta) {
  require_1d_pair(rho, eta);
  const Grid& g = rho.grid;
  const int n = g.n[0];
  const double h = g.spacing(0);

  const std::vector<double> ma = cell_masses(rho);
  const std::vector<double> mb = cell_masses(eta);
  const Cdf1D A = Cdf1D::build(g, ma);
  const Cdf1D B = Cdf1D::build(g, mb);
  if (A.cell.empty() || B.cell.empty()) throw ZeroMass();

  TransportResult out;
  out.method = TransportMethod::Exact1D;
  out.w2 = std::sqrt(std::max(0.0, quantile_sweep(A, B, nullptr, nullptr)));

  // cumulative mass of rho at cell starts, for center levels
  std::vector<double> cum(n + 1, 0.0);
  {
    double total = 0.0;
    for (double v : ma) total += v;
    for (int i = 0; i < n; ++i) cum[i + 1] = cum[i] + ma[i] / total;
    cum[n] = 1.0;
  }

  out.map = make_vector(g);
  for (int i = 0; i < n; ++i)
    out.map.values[i] = B.quantile(0.5 * (cum[i] + cum[i + 1]));

  // phi(x) = int_{x_0}^{x} (s - T(s)) ds, exact per linear piece of T
  auto displacement_integral = [&](int c, double p, double q) {
    // integral of x - T(x) over [p, q] inside source cell c
    if (q <= p) return 0.0;
    const double mc = cum[c + 1] - cum[c];
    const double ec = g.lo[0] + c * h;
    if (mc <= 0.0) {
      const double t = B.quantile(cum[c]);
      return (q - p) * (0.5 * (p + q) - t);
    }
    auto level = [&](double x) { return cum[c] + (x - ec) / h * mc; };
    auto xofs = [&](double s) { return ec + (s - cum[c]) / mc * h; };
    double total = 0.0;
    double x0 = p;
    double s0 = level(p);
    const double s_end = level(q);
    // advance through target segments overlapped by [s0, s_end]
    std::size_t k = 0;
    {
      std::size_t le = 0, ri = B.cell.size();
      while (le < ri) {
        const std::size_t mid = (le + ri) / 2;
        if (B.c1[mid] >= s0) ri = mid; else le = mid + 1;
      }
      k = std::min(le, B.cell.size() - 1);
    }
    while (x0 < q) {
      double s1 = s_end;
      if (k + 1 < B.cell.size() && B.c1[k] < s_end) s1 = B.c1[k];
      const double x1 = s1 >= s_end ? q : std::min(q, xofs(s1));
      if (x1 > x0) {
        const double t0 = B.eval(k, level(x0));
        const double t1 = B.eval(k, level(x1));
        total += (x1 - x0) * (0.5 * (x0 + x1) - 0.5 * (t0 + t1));
      }
      if (x1 >= q) break;
      x0 = x1;
      if (k + 1 < B.cell.size()) ++k; else break;
    }
    return total;
  };

  out.phi = make_scalar(g);
  for (int i = 0; i + 1 < n; ++i) {
    const double xi = g.center(0, i);
    const double edge = g.lo[0] + (i + 1) * h;
    const double xj = g.center(0, i + 1);
    out.phi.values[i + 1] = out.phi.values[i] + displacement_integral(i, xi, edge) +
                            displacement_integral(i + 1, edge, xj);
  }

  // psi by c-transform against the grid values of phi
  out.psi = make_scalar(g);
  for (int j = 0; j < n; ++j) {
    const double y = g.center(0, j);
    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) {
      const double x = g.center(0, i);
      best = std::min(best, 0.5 * (x - y) * (x - y) - out.phi.values[i]);
    }
    out.psi.values[j] = best;
  }
  return out;
}

DensityField displacement_interpolate(const DensityField& rho, const TransportResult& result,
                                      double t) {
  if (!(t >= 0.0 && t <= 1.0)) throw BadParameter("interpolation time must lie in [0,1]");
  const Grid& g = rho.grid;
  if (result.map.grid != g) throw GridMismatch();
  std::vector<double> mass(g.size(), 0.0);
  const double vol = g.cell_volume();

  auto splat_axis = [&](int axis, double pos, int& i0, double& w1) {
    const double u = (pos - g.lo[axis]) / g.spacing(axis) - 0.5;
    i0 = static_cast<int>(std::floor(u));
    w1 = u - i0;
    if (i0 < 0) { i0 = 0; w1 = 0.0; }
    if (i0 >= g.n[axis] - 1) { i0 = g.n[axis] - 2; w1 = 1.0; }
  };

  for (std::size_t i = 0; i < g.size(); ++i) {
    const double m = rho.values[i] * vol;
    if (m <= 0.0) continue;
    const int ix = static_cast<int>(i) / (g.dim == 2 ? g.n[1] : 1);
    const int iy = static_cast<int>(i) % (g.dim == 2 ? g.n[1] : 1);
    const double x = g.center(0, ix);
    const double px = (1.0 - t) * x + t * result.map.values[i * g.dim];
    int jx; double wx;
    splat_axis(0, px, jx, wx);
    if (g.dim == 1) {
      mass[jx] += m * (1.0 - wx);
      mass[jx + 1] += m * wx;
    } else {
      const double y = g.center(1, iy);
      const double py = (1.0 - t) * y + t * result.map.values[i * g.dim + 1];
      int jy; double wy;
      splat_axis(1, py, jy, wy);
      mass[g.index(jx, jy)] += m * (1.0 - wx) * (1.0 - wy);
      mass[g.index(jx, jy + 1)] += m * (1.0 - wx) * wy;
      mass[g.index(jx + 1, jy)] += m * wx * (1.0 - wy);
      mass[g.index(jx + 1, jy + 1)] += m * wx * wy;
    }
  }
  DensityField out{g, std::move(mass)};
  for (double& v : out.values) v /= vol;
  return normalize(out);
}

}  // namespace jkoflow
