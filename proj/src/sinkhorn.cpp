#include <cmath>
#include <limits>
#include <vector>

#include "entropic_kernel.hpp"
#include "jkoflow/ot.hpp"

namespace jkoflow {

namespace {

std::vector<double> log_masses(const DensityField& f) {
  std::vector<double> out(f.values.size());
  const double vol = f.grid.cell_volume();
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double m = f.values[i] * vol;
    out[i] = m > 0.0 ? std::log(m) : -std::numeric_limits<double>::infinity();
  }
  return out;
}

}  // namespace

TransportResult sinkhorn(const DensityField& rho, const DensityField& eta, double eps,
                         const SinkhornOptions& opts) {
  if (rho.grid != eta.grid) throw GridMismatch();
  if (!(eps > 0.0)) throw BadParameter("entropic regularization must be positive");
  const Grid& g = rho.grid;
  const std::size_t N = g.size();
  const double vol = g.cell_volume();

  const std::vector<double> logr = log_masses(rho);
  const std::vector<double> logc = log_masses(eta);
  detail::EntropicKernel kernel(g, eps);

  // product-reference duals: gamma_ij = exp((f_i + g_j - c_ij)/eps) r_i c_j
  std::vector<double> f(N, 0.0), gdual(N, 0.0);
  std::vector<double> in(N), z(N), gnew(N);
  double violation = std::numeric_limits<double>::infinity();
  int it = 0;
  for (; it < opts.max_iter; ++it) {
    for (std::size_t j = 0; j < N; ++j) in[j] = gdual[j] / eps + logc[j];
    kernel.lse_apply(in, z);
    for (std::size_t i = 0; i < N; ++i) f[i] = -eps * z[i];

    for (std::size_t i = 0; i < N; ++i) in[i] = f[i] / eps + logr[i];
    kernel.lse_apply(in, z);
    violation = 0.0;
    for (std::size_t j = 0; j < N; ++j) {
      gnew[j] = -eps * z[j];
      const double cj = eta.values[j] * vol;
      if (cj > 0.0)
        violation = std::max(violation, cj * std::abs(std::expm1((gdual[j] - gnew[j]) / eps)));
      if (!std::isfinite(gnew[j]) && cj > 0.0) throw NumericalOverflow();
    }
    gdual.swap(gnew);
    if (violation <= opts.marginal_tol) { ++it; break; }
  }
  if (violation > opts.marginal_tol)
    throw NoConvergence("entropic solver did not reach the marginal tolerance", violation, it);

  // refresh the rho-side dual so row marginals are exact, then read off the
  // per-row conditional statistics for the map and the plan cost
  for (std::size_t j = 0; j < N; ++j) in[j] = gdual[j] / eps + logc[j];
  kernel.lse_apply(in, z);
  for (std::size_t i = 0; i < N; ++i) f[i] = -eps * z[i];
  const auto cond = kernel.conditionals(in, z);

  TransportResult out;
  out.method = TransportMethod::Entropic;
  out.eps = eps;
  out.iterations = it;
  out.marginal_violation = violation;
  out.phi = ScalarField{g, f};
  out.psi = ScalarField{g, gdual};
  out.map = make_vector(g);
  double cost = 0.0;
  for (std::size_t i = 0; i < N; ++i) {
    const double ri = rho.values[i] * vol;
    out.map.values[i * g.dim] = cond.bary1[i];
    if (g.dim == 2) out.map.values[i * g.dim + 1] = cond.bary2[i];
    if (ri > 0.0) {
      cost += ri * cond.sq1[i];
      if (g.dim == 2) cost += ri * cond.sq2[i];
    }
  }
  out.w2 = std::sqrt(std::max(0.0, cost));
  return out;
}

}  // namespace jkoflow
