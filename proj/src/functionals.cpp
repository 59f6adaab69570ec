#include "jkoflow/functionals.hpp"

#include <algorithm>
#include <cmath>

#include "jkoflow/elliptic.hpp"

namespace jkoflow {

InteractionTerm make_interaction(const Grid& g, const std::function<double(double, double)>& w,
                                 double lipschitz, double mu) {
  InteractionTerm term;
  term.grid = g;
  term.lipschitz = lipschitz;
  term.mu = mu;
  const int n1 = g.n[0];
  const int n2 = g.dim == 2 ? g.n[1] : 1;
  term.stencil.resize(static_cast<std::size_t>(2 * n1 - 1) * (2 * n2 - 1));
  for (int dx = -(n1 - 1); dx <= n1 - 1; ++dx)
    for (int dy = -(n2 - 1); dy <= n2 - 1; ++dy) {
      const double z1 = dx * g.spacing(0);
      const double z2 = g.dim == 2 ? dy * g.spacing(1) : 0.0;
      term.stencil[static_cast<std::size_t>(dx + n1 - 1) * (2 * n2 - 1) + (dy + n2 - 1)] =
          w(z1, z2);
    }
  for (int dx = -(n1 - 1); dx <= n1 - 1; ++dx)
    for (int dy = -(n2 - 1); dy <= n2 - 1; ++dy)
      if (std::abs(term.at(dx, dy) - term.at(-dx, -dy)) > 1e-12)
        throw BadParameter("interaction kernel must be even");
  return term;
}

void Functional::validate(const Grid& g) const {
  if (keller_segel && !(keller_segel->chi > 0.0))
    throw BadParameter("chemosensitivity chi must be positive");
  if (lq_smoothing && lq_smoothing->delta > 0.0 && !(lq_smoothing->q > 0.5 * g.dim))
    throw BadParameter("Lq smoothing needs q > d/2");
  if (lq_smoothing && lq_smoothing->delta < 0.0)
    throw BadParameter("Lq smoothing weight must be nonnegative");
  if (interaction && interaction->grid != g) throw GridMismatch("interaction stencil grid differs");
  if (potential && potential->v.grid != g) throw GridMismatch("potential grid differs");
}

ScalarField convolve(const InteractionTerm& w, const DensityField& rho) {
  if (w.grid != rho.grid) throw GridMismatch();
  const Grid& g = rho.grid;
  const int n1 = g.n[0];
  const int n2 = g.dim == 2 ? g.n[1] : 1;
  const double vol = g.cell_volume();
  ScalarField out = make_scalar(g);
  for (int i1 = 0; i1 < n1; ++i1)
    for (int i2 = 0; i2 < n2; ++i2) {
      double s = 0.0;
      for (int j1 = 0; j1 < n1; ++j1)
        for (int j2 = 0; j2 < n2; ++j2) {
          const double m = rho.values[g.index(j1, j2)];
          if (m != 0.0) s += w.at(i1 - j1, i2 - j2) * m;
        }
      out.values[g.index(i1, i2)] = s * vol;
    }
  return out;
}

double entropy_of(const DensityField& rho) {
  double s = 0.0;
  for (double v : rho.values)
    if (v > 0.0) s += v * std::log(v);
  return s * rho.grid.cell_volume();
}

double evaluate(const Functional& f, const DensityField& rho) {
  f.validate(rho.grid);
  const double vol = rho.grid.cell_volume();
  double total = 0.0;
  if (f.entropy) total += entropy_of(rho);
  if (f.potential) {
    double s = 0.0;
    for (std::size_t i = 0; i < rho.values.size(); ++i)
      s += f.potential->v.values[i] * rho.values[i];
    total += s * vol;
  }
  if (f.interaction) {
    const ScalarField u = convolve(*f.interaction, rho);
    double s = 0.0;
    for (std::size_t i = 0; i < rho.values.size(); ++i) s += u.values[i] * rho.values[i];
    total += 0.5 * s * vol;
  }
  if (f.keller_segel)
    total += ks_energy(rho, f.keller_segel->chi, f.keller_segel->poisson_tol);
  if (f.lq_smoothing && f.lq_smoothing->delta > 0.0) {
    double s = 0.0;
    for (double v : rho.values) s += std::pow(v, f.lq_smoothing->q);
    total += f.lq_smoothing->delta / f.lq_smoothing->q * s * vol;
  }
  return total;
}

ScalarField first_variation(const Functional& f, const DensityField& rho) {
  f.validate(rho.grid);
  ScalarField u = make_scalar(rho.grid);
  if (f.potential)
    for (std::size_t i = 0; i < u.values.size(); ++i) u.values[i] += f.potential->v.values[i];
  if (f.interaction) {
    const ScalarField w = convolve(*f.interaction, rho);
    for (std::size_t i = 0; i < u.values.size(); ++i) u.values[i] += w.values[i];
  }
  if (f.keller_segel) {
    const PoissonSolution sol = solve_poisson(rho, f.keller_segel->poisson_tol);
    for (std::size_t i = 0; i < u.values.size(); ++i)
      u.values[i] -= f.keller_segel->chi * sol.h.values[i];
  }
  if (f.lq_smoothing && f.lq_smoothing->delta > 0.0)
    for (std::size_t i = 0; i < u.values.size(); ++i)
      u.values[i] += f.lq_smoothing->delta * std::pow(rho.values[i], f.lq_smoothing->q - 1.0);
  return u;
}

double McCannFunction::operator()(double s) const {
  switch (kind) {
    case Kind::Power:
      return std::pow(s, p);
    case Kind::Entropy:
      return s > 0.0 ? s * std::log(s) : 0.0;
    case Kind::FpK:
      return std::max(0.0, std::pow(s, p) - K * std::pow(s, double(d - 1) / d));
    case Kind::FtildepK:
      return std::pow(std::max(0.0, s - K), p);
  }
  return 0.0;
}

McCannVerdict mccann_check(const McCannFunction& f, int d, int samples) {
  if (d != 1 && d != 2) throw BadParameter("dimension must be 1 or 2");
  if (samples < 100) throw BadParameter("mccann check needs at least 100 samples");
  const double s_lo = 1e-3, s_hi = 1e3;
  std::vector<double> s(samples), gval(samples);
  for (int k = 0; k < samples; ++k) {
    s[k] = s_lo * std::pow(s_hi / s_lo, double(k) / (samples - 1));
    gval[k] = f(std::pow(s[k], -double(d))) * std::pow(s[k], double(d));
  }
  McCannVerdict v;
  const double tol = 1e-9;
  for (int k = 0; k + 1 < samples; ++k) {
    const double scale = std::max(1.0, std::abs(gval[k]));
    if (gval[k + 1] > gval[k] + tol * scale) {
      v.pass = false;
      v.first_violation_s = s[k + 1];
      v.worst_margin = std::min(v.worst_margin, gval[k] - gval[k + 1]);
      break;
    }
  }
  // three-point convexity: g(mid) below the chord through its neighbors
  for (int k = 1; v.pass && k + 1 < samples; ++k) {
    const double t = (s[k] - s[k - 1]) / (s[k + 1] - s[k - 1]);
    const double chord = (1.0 - t) * gval[k - 1] + t * gval[k + 1];
    const double scale = std::max(1.0, std::abs(chord));
    if (gval[k] > chord + tol * scale) {
      v.pass = false;
      v.first_violation_s = s[k];
      v.worst_margin = std::min(v.worst_margin, chord - gval[k]);
    }
  }
  return v;
}

double f_pk_integral(const McCannFunction& f, const DensityField& rho) {
  double s = 0.0;
  for (double v : rho.values) s += f(v);
  return s * rho.grid.cell_volume();
}

}  // namespace jkoflow
