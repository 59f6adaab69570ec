#include "jkoflow/elliptic.hpp"

#include <cmath>
#include <vector>

namespace jkoflow {

namespace {

// y = A x with A the negative Laplacian; the Dirichlet value h = 0 on the
// boundary faces enters through ghost cells reflected as -x.
void apply_operator(const Grid& g, const std::vector<double>& x, std::vector<double>& y) {
  const int ny = g.dim == 2 ? g.n[1] : 1;
  y.assign(x.size(), 0.0);
  for (int axis = 0; axis < g.dim; ++axis) {
    const double ih2 = 1.0 / (g.spacing(axis) * g.spacing(axis));
    const int na = g.n[axis];
    const std::size_t stride = axis == 0 ? static_cast<std::size_t>(ny) : 1;
    const int n_other = axis == 0 ? ny : g.n[0];
    for (int o = 0; o < n_other; ++o) {
      const std::size_t base = axis == 0 ? static_cast<std::size_t>(o) : g.index(o, 0);
      for (int i = 0; i < na; ++i) {
        const std::size_t idx = base + i * stride;
        const double left = i == 0 ? -x[idx] : x[idx - stride];
        const double right = i == na - 1 ? -x[idx] : x[idx + stride];
        y[idx] += (2.0 * x[idx] - left - right) * ih2;
      }
    }
  }
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// grid gradient that uses the known zero boundary value in the one-sided
// boundary stencils (ghost = -value)
VectorField dirichlet_gradient(const ScalarField& f) {
  const Grid& g = f.grid;
  VectorField out = make_vector(g);
  const int ny = g.dim == 2 ? g.n[1] : 1;
  for (int axis = 0; axis < g.dim; ++axis) {
    const double h2 = 2.0 * g.spacing(axis);
    const int na = g.n[axis];
    const std::size_t stride = axis == 0 ? static_cast<std::size_t>(ny) : 1;
    const int n_other = axis == 0 ? ny : g.n[0];
    for (int o = 0; o < n_other; ++o) {
      const std::size_t base = axis == 0 ? static_cast<std::size_t>(o) : g.index(o, 0);
      for (int i = 0; i < na; ++i) {
        const std::size_t idx = base + i * stride;
        const double left = i == 0 ? -f.values[idx] : f.values[idx - stride];
        const double right = i == na - 1 ? -f.values[idx] : f.values[idx + stride];
        out.values[idx * g.dim + axis] = (right - left) / h2;
      }
    }
  }
  return out;
}

}  // namespace

PoissonSolution solve_poisson(const DensityField& rho, double tol) {
  if (!(tol > 0.0)) throw BadParameter("poisson tolerance must be positive");
  const Grid& g = rho.grid;
  const std::size_t N = g.size();
  const std::vector<double>& b = rho.values;

  std::vector<double> x(N, 0.0), r = b, p = b, Ap(N);
  const double b2 = dot(b, b);
  PoissonSolution out;
  if (b2 == 0.0) {
    out.h = ScalarField{g, x};
    out.grad_h = make_vector(g);
    return out;
  }
  const int max_iter = 10 * static_cast<int>(N);
  double r2 = dot(r, r);
  int it = 0;
  for (; it < max_iter; ++it) {
    if (std::sqrt(r2 / b2) <= tol) break;
    apply_operator(g, p, Ap);
    const double alpha = r2 / dot(p, Ap);
    for (std::size_t i = 0; i < N; ++i) x[i] += alpha * p[i];
    for (std::size_t i = 0; i < N; ++i) r[i] -= alpha * Ap[i];
    const double r2n = dot(r, r);
    for (std::size_t i = 0; i < N; ++i) p[i] = r[i] + (r2n / r2) * p[i];
    r2 = r2n;
  }
  if (std::sqrt(r2 / b2) > tol)
    throw NoConvergence("conjugate gradients stalled", std::sqrt(r2 / b2), it);

  out.iterations = it;
  out.h = ScalarField{g, std::move(x)};
  out.grad_h = dirichlet_gradient(out.h);

  // defect against the right-hand side, interior cells only
  apply_operator(g, out.h.values, Ap);
  double res = 0.0;
  const int ny = g.dim == 2 ? g.n[1] : 1;
  for (int ix = 1; ix + 1 < g.n[0]; ++ix)
    for (int iy = (g.dim == 2 ? 1 : 0); iy < (g.dim == 2 ? ny - 1 : 1); ++iy) {
      const std::size_t idx = g.index(ix, iy);
      res = std::max(res, std::abs(Ap[idx] - b[idx]));
    }
  out.residual = res;
  return out;
}

double ks_energy(const DensityField& rho, double chi, double tol, KsEnergyStats* stats) {
  if (!(chi > 0.0)) throw BadParameter("chemosensitivity chi must be positive");
  const PoissonSolution sol = solve_poisson(rho, tol);
  const double pairing = -0.5 * chi * quadrature(sol.h, rho);
  double grad2 = 0.0;
  for (std::size_t i = 0; i < rho.grid.size(); ++i)
    for (int c = 0; c < rho.grid.dim; ++c) {
      const double v = sol.grad_h.values[i * rho.grid.dim + c];
      grad2 += v * v;
    }
  const double gradient_form = -0.5 * chi * grad2 * rho.grid.cell_volume();
  if (stats) {
    stats->pairing_form = pairing;
    stats->gradient_form = gradient_form;
    stats->discrepancy = std::abs(pairing - gradient_form);
  }
  return pairing;
}

}  // namespace jkoflow
