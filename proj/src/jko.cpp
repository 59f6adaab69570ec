#include "jkoflow/jko.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <random>

#include "entropic_kernel.hpp"
#include "jkoflow/elliptic.hpp"

namespace jkoflow {

namespace {

std::vector<double> masses_of(const DensityField& f) {
  std::vector<double> m(f.values.size());
  const double vol = f.grid.cell_volume();
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = f.values[i] * vol;
  return m;
}

DensityField density_of(const Grid& g, const std::vector<double>& masses) {
  DensityField out = make_density(g);
  const double vol = g.cell_volume();
  for (std::size_t i = 0; i < masses.size(); ++i) out.values[i] = masses[i] / vol;
  return out;
}

std::vector<double> floored_unit_masses(const std::vector<double>& m) {
  std::vector<double> out = m;
  double total = 0.0;
  for (double& v : out) {
    v = std::max(v, 1e-14);
    total += v;
  }
  for (double& v : out) v /= total;
  return out;
}

// Frozen part of the first variation: potential plus nonlocal terms at a
// fixed density; the Lq smoothing derivative stays inside the local solver.
ScalarField frozen_potential(const Functional& f, const DensityField& at) {
  ScalarField u = make_scalar(at.grid);
  if (f.potential)
    for (std::size_t i = 0; i < u.values.size(); ++i) u.values[i] += f.potential->v.values[i];
  if (f.interaction) {
    const ScalarField w = convolve(*f.interaction, at);
    for (std::size_t i = 0; i < u.values.size(); ++i) u.values[i] += w.values[i];
  }
  if (f.keller_segel) {
    const PoissonSolution sol = solve_poisson(at, f.keller_segel->poisson_tol);
    for (std::size_t i = 0; i < u.values.size(); ++i)
      u.values[i] -= f.keller_segel->chi * sol.h.values[i];
  }
  return u;
}

bool has_nonlocal(const Functional& f) {
  return f.interaction.has_value() || f.keller_segel.has_value();
}

// ---------------------------------------------------------------------------
// 1D proximal subproblem in cumulative-mass coordinates
// ---------------------------------------------------------------------------
//
// Variables are the interior CDF levels M_1..M_{n-1}; cell masses are their
// increments. The transport term is the exact quantile-difference integral,
// whose gradient in these coordinates is local, so a damped Newton scheme
// with a tridiagonal local-curvature model converges to machine accuracy.

struct Newton1D {
  const Grid* g = nullptr;
  std::vector<double> target;  // cell masses of eta
  std::vector<double> u_frozen;
  double delta = 0.0, q = 2.0;
  double tau = 1e-3;
  // self-consistent mode: recompute the nonlocal potential from the iterate
  // and run the line search on the full energy
  const Functional* full = nullptr;

  double vol() const { return g->cell_volume(); }

  double local_energy(const std::vector<double>& m) const {
    const double v = vol();
    double s = 0.0;
    for (std::size_t i = 0; i < m.size(); ++i) {
      if (m[i] > 0.0) s += m[i] * std::log(m[i] / v);
      s += m[i] * u_frozen[i];
      if (delta > 0.0) s += delta / q * v * std::pow(m[i] / v, q);
    }
    return s;
  }

  double objective(const std::vector<double>& m) const {
    const double cost = detail::transport_cost_1d(*g, m, target);
    if (full) return evaluate(*full, density_of(*g, m)) + cost / (2.0 * tau);
    return local_energy(m) + cost / (2.0 * tau);
  }

  // cellwise optimality residual log rho + u + (transport gradient)/tau;
  // adjacent differences of r are the objective gradient in M coordinates
  void cell_residuals(const std::vector<double>& m, std::vector<double>& r) const {
    const double v = vol();
    r.resize(m.size());
    if (full) {
      const ScalarField fv = first_variation(*full, density_of(*g, m));
      for (std::size_t i = 0; i < m.size(); ++i)
        r[i] = std::log(m[i] / v) + 1.0 + fv.values[i];
    } else {
      for (std::size_t i = 0; i < m.size(); ++i) {
        r[i] = std::log(m[i] / v) + 1.0 + u_frozen[i];
        if (delta > 0.0) r[i] += delta * std::pow(m[i] / v, q - 1.0);
      }
    }
  }

  double curvature(double m) const {
    double c = 1.0 / m;
    if (delta > 0.0) c += delta * (q - 1.0) * std::pow(m / vol(), q - 2.0) / vol();
    return c;
  }

  // returns masses; iters accumulates Newton iterations
  std::vector<double> solve(std::vector<double> m, double gtol, int max_iter, int& iters) const {
    const int n = g->n[0];
    const double h = g->spacing(0);
    std::vector<double> grad_c, r, grad(n - 1), diag(n - 1), off(std::max(0, n - 2));
    std::vector<double> d(n - 1), dm(n), trial(n);
    double obj = objective(m);
    for (int it = 0; it < max_iter; ++it, ++iters) {
      detail::transport_cost_and_grad_1d(*g, m, target, grad_c);
      cell_residuals(m, r);
      double gmax = 0.0;
      for (int j = 1; j < n; ++j) {
        grad[j - 1] = r[j - 1] - r[j] + grad_c[j - 1] / (2.0 * tau);
        gmax = std::max(gmax, std::abs(grad[j - 1]));
      }
      if (gmax <= gtol) break;

      for (int j = 1; j < n; ++j) {
        diag[j - 1] = curvature(m[j - 1]) + curvature(m[j]) +
                      (h * h / (3.0 * tau)) * (1.0 / m[j - 1] + 1.0 / m[j]);
        if (j < n - 1)
          off[j - 1] = -curvature(m[j]) + h * h / (6.0 * tau * m[j]);
      }
      // Thomas solve of (tridiag) d = -grad
      {
        std::vector<double>& c = d;  // reuse as solution
        std::vector<double> cp(std::max(0, n - 2)), dp(n - 1);
        double beta = diag[0];
        dp[0] = -grad[0] / beta;
        for (int k = 1; k < n - 1; ++k) {
          cp[k - 1] = off[k - 1] / beta;
          beta = diag[k] - off[k - 1] * cp[k - 1];
          dp[k] = (-grad[k] - off[k - 1] * dp[k - 1]) / beta;
        }
        c[n - 2] = dp[n - 2];
        for (int k = n - 3; k >= 0; --k) c[k] = dp[k] - cp[k] * c[k + 1];
      }
      dm[0] = d[0];
      for (int i = 1; i < n - 1; ++i) dm[i] = d[i] - d[i - 1];
      dm[n - 1] = -d[n - 2];

      double alpha = 1.0;
      for (int i = 0; i < n; ++i)
        if (dm[i] < 0.0) alpha = std::min(alpha, -0.95 * m[i] / dm[i]);
      double gd = 0.0;
      for (int j = 0; j < n - 1; ++j) gd += grad[j] * d[j];
      bool accepted = false;
      for (int bt = 0; bt < 40; ++bt) {
        for (int i = 0; i < n; ++i) trial[i] = m[i] + alpha * dm[i];
        const double t_obj = objective(trial);
        if (std::isfinite(t_obj) && t_obj <= obj + 1e-4 * alpha * gd) {
          m = trial;
          obj = t_obj;
          accepted = true;
          break;
        }
        alpha *= 0.5;
      }
      if (!accepted) break;  // at numerical optimum
    }
    return m;
  }
};

// ---------------------------------------------------------------------------
// 2D proximal subproblem by entropic scaling with a pointwise KL prox
// ---------------------------------------------------------------------------

struct ScalingState {
  std::vector<double> f, g;  // duals; target side carries the eta masses
  bool warm = false;
};

// One frozen-potential subproblem solve. Convention:
// gamma_ij = exp((f_i + g_j - c_ij)/eps) * c_j with c the eta cell masses.
// The rho-side update solves per cell
//   tau (log(s/vol) + 1 + u_i + delta (s/vol)^(q-1)) + eps (log s - Xi_i) = 0.
std::vector<double> solve_local_2d(const detail::EntropicKernel& kernel,
                                   const std::vector<double>& log_target,
                                   const std::vector<double>& u_frozen, double delta, double q,
                                   double tau, double stop_tol, int max_iter, ScalingState& st,
                                   int& iters) {
  const Grid& g = kernel.grid();
  const double eps = kernel.eps();
  const double vol = g.cell_volume();
  const std::size_t N = g.size();
  if (!st.warm) {
    st.f.assign(N, 0.0);
    st.g.assign(N, 0.0);
    st.warm = true;
  }
  std::vector<double> in(N), xi(N), logs(N, 0.0), s(N, 0.0), s_prev(N, 0.0);
  double change = std::numeric_limits<double>::infinity();
  int it = 0;
  for (; it < max_iter; ++it, ++iters) {
    for (std::size_t j = 0; j < N; ++j) in[j] = st.g[j] / eps + log_target[j];
    kernel.lse_apply(in, xi);
    for (std::size_t i = 0; i < N; ++i) {
      const double rhs = eps * xi[i] + tau * (std::log(vol) - 1.0 - u_frozen[i]);
      double u = rhs / (tau + eps);
      if (delta > 0.0) {
        // monotone scalar equation (tau+eps) u + tau delta e^{(q-1)(u - log vol)} = rhs
        for (int nt = 0; nt < 60; ++nt) {
          const double e = tau * delta * std::exp((q - 1.0) * (u - std::log(vol)));
          const double fval = (tau + eps) * u + e - rhs;
          const double fp = (tau + eps) + (q - 1.0) * e;
          const double du = fval / fp;
          u -= du;
          if (std::abs(du) < 1e-14 * (1.0 + std::abs(u))) break;
        }
      }
      logs[i] = u;
      st.f[i] = eps * (u - xi[i]);
      s[i] = std::exp(u);
    }
    change = 0.0;
    for (std::size_t i = 0; i < N; ++i) change += std::abs(s[i] - s_prev[i]);
    s_prev = s;

    for (std::size_t i = 0; i < N; ++i) in[i] = st.f[i] / eps;
    kernel.lse_apply(in, xi);
    for (std::size_t j = 0; j < N; ++j) st.g[j] = -eps * xi[j];

    if (change <= stop_tol && it > 0) { ++it; break; }
  }
  if (change > stop_tol)
    throw NoConvergence("entropic scaling iterations stalled", change, it);
  return s;
}

// Transport output of the converged scaling state, in the product-reference
// dual convention shared with sinkhorn().
TransportResult finalize_2d(const detail::EntropicKernel& kernel,
                            const std::vector<double>& rho_masses,
                            const std::vector<double>& log_target, ScalingState& st) {
  const Grid& g = kernel.grid();
  const double eps = kernel.eps();
  const std::size_t N = g.size();
  std::vector<double> in(N), z(N);
  for (std::size_t j = 0; j < N; ++j) in[j] = st.g[j] / eps + log_target[j];
  kernel.lse_apply(in, z);
  const auto cond = kernel.conditionals(in, z);

  TransportResult out;
  out.method = TransportMethod::Entropic;
  out.eps = eps;
  out.phi = make_scalar(g);
  out.psi = make_scalar(g);
  out.map = make_vector(g);
  double cost = 0.0;
  for (std::size_t i = 0; i < N; ++i) {
    // row-exact rho-side dual, then shift to the product-reference convention
    const double fi = rho_masses[i] > 0.0 ? eps * (std::log(rho_masses[i]) - z[i]) : -eps * z[i];
    out.phi.values[i] = rho_masses[i] > 0.0 ? fi - eps * std::log(rho_masses[i]) : fi;
    out.psi.values[i] = st.g[i];
    out.map.values[i * g.dim] = cond.bary1[i];
    if (g.dim == 2) out.map.values[i * g.dim + 1] = cond.bary2[i];
    if (rho_masses[i] > 0.0) {
      cost += rho_masses[i] * cond.sq1[i];
      if (g.dim == 2) cost += rho_masses[i] * cond.sq2[i];
    }
  }
  out.w2 = std::sqrt(std::max(0.0, cost));

  // column violation of the row-exact plan
  for (std::size_t i = 0; i < N; ++i)
    in[i] = (rho_masses[i] > 0.0 ? std::log(rho_masses[i]) : -std::numeric_limits<double>::infinity()) -
            z[i];
  kernel.lse_apply(in, z);
  double viol = 0.0;
  for (std::size_t j = 0; j < N; ++j) {
    const double cj = std::exp(log_target[j]);
    if (cj > 0.0) viol = std::max(viol, std::abs(std::exp(st.g[j] / eps + z[j]) * cj - cj));
  }
  out.marginal_violation = viol;
  return out;
}

struct StepWorkspace {
  std::unique_ptr<detail::EntropicKernel> kernel;
  ScalingState scaling;
  double self_cost = -1.0;  // cached plan cost of the eta self-coupling
};

double tv_w2_bound(const Grid& g, const std::vector<double>& a, const std::vector<double>& b) {
  double l1 = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) l1 += std::abs(a[i] - b[i]);
  return g.diameter() * std::sqrt(0.5 * l1);
}

JkoStepResult jko_step_impl(const DensityField& eta, const Functional& f, const JkoConfig& cfg,
                            StepWorkspace* ws) {
  if (!f.entropy) throw BadParameter("the proximal step needs the entropy term");
  f.validate(eta.grid);
  if (!(cfg.tau > 0.0)) throw BadParameter("time step must be positive");
  if (!(cfg.fixed_point_damping > 0.0 && cfg.fixed_point_damping <= 1.0))
    throw BadParameter("fixed point damping must lie in (0,1]");
  const Grid& g = eta.grid;
  const double delta = f.lq_smoothing ? f.lq_smoothing->delta : 0.0;
  const double q = f.lq_smoothing ? f.lq_smoothing->q : 2.0;
  const std::vector<double> target = masses_of(normalize(eta));
  const double f_eta = evaluate(f, eta);

  JkoStepResult result;
  StepStats& stats = result.stats;
  DensityField current = eta;  // outer fixed-point iterate
  std::vector<double> solution;

  StepWorkspace local_ws;
  if (g.dim == 2 && !ws) ws = &local_ws;
  if (g.dim == 2 && !ws->kernel)
    ws->kernel = std::make_unique<detail::EntropicKernel>(g, cfg.effective_eps(g));

  const bool nonlocal = has_nonlocal(f);
  const int outer_max = nonlocal ? cfg.fixed_point_max : 1;
  std::vector<double> log_target(target.size());
  for (std::size_t j = 0; j < target.size(); ++j) log_target[j] = std::log(target[j]);

  for (int k = 0; k < outer_max; ++k) {
    ++stats.outer_iterations;
    const ScalarField u_frozen = frozen_potential(f, current);
    std::vector<double> next;
    if (g.dim == 1) {
      Newton1D solver;
      solver.g = &g;
      solver.target = target;
      solver.u_frozen = u_frozen.values;
      solver.delta = delta;
      solver.q = q;
      solver.tau = cfg.tau;
      const double gtol = std::max(1e-12, 1e-3 * cfg.inner_tol);
      next = solver.solve(floored_unit_masses(masses_of(current)), gtol, 80,
                          stats.inner_iterations);
    } else {
      next = solve_local_2d(*ws->kernel, log_target, u_frozen.values, delta, q, cfg.tau,
                            cfg.marginal_tol, cfg.sinkhorn_max_iter, ws->scaling,
                            stats.inner_iterations);
      double total = 0.0;
      for (double v : next) total += v;
      for (double& v : next) v /= total;
    }

    if (!nonlocal) {
      solution = std::move(next);
      break;
    }
    // damped relaxation of the frozen nonlocal potential
    std::vector<double> cur_m = masses_of(current);
    const double w = cfg.fixed_point_damping;
    std::vector<double> mixed(next.size());
    for (std::size_t i = 0; i < next.size(); ++i)
      mixed[i] = (1.0 - w) * cur_m[i] + w * next[i];
    double change;
    if (g.dim == 1) {
      change = std::sqrt(std::max(0.0, detail::transport_cost_1d(g, mixed, cur_m)));
    } else {
      change = tv_w2_bound(g, mixed, cur_m);
    }
    current = density_of(g, mixed);
    solution = mixed;
    const double f_cur = evaluate(f, current);
    if (f_cur < f_eta - 1e6)
      throw FunctionalUnbounded("step objective fell by more than 1e6; the discrete problem "
                                "looks unbounded below");
    if (change <= cfg.inner_tol) break;
    if (k + 1 == outer_max)
      throw NoConvergence("outer fixed point did not settle", change, k + 1);
  }

  // dissipation safeguard: the returned density must not raise the step
  // objective above the value at eta itself
  if (g.dim == 1) {
    auto objective_of = [&](const std::vector<double>& m) {
      return evaluate(f, density_of(g, m)) +
             detail::transport_cost_1d(g, m, target) / (2.0 * cfg.tau);
    };
    double obj = objective_of(solution);
    if (nonlocal && obj > f_eta) {
      Newton1D polish;
      polish.g = &g;
      polish.target = target;
      polish.u_frozen.assign(g.size(), 0.0);
      polish.delta = delta;
      polish.q = q;
      polish.tau = cfg.tau;
      polish.full = &f;
      const std::vector<double> eta_start = floored_unit_masses(target);
      std::vector<double> start = objective_of(eta_start) < obj ? eta_start : solution;
      std::vector<double> polished =
          polish.solve(start, std::max(1e-12, 1e-3 * cfg.inner_tol), 50, stats.inner_iterations);
      if (objective_of(polished) < obj) solution = std::move(polished);
    }
  }

  result.rho = normalize(density_of(g, solution));
  if (g.dim == 1) {
    result.transport = exact_ot_1d(result.rho, eta);
  } else {
    result.transport = finalize_2d(*ws->kernel, masses_of(result.rho), log_target, ws->scaling);
    if (ws->self_cost < 0.0) {
      const TransportResult self = sinkhorn(eta, eta, cfg.effective_eps(g),
                                            SinkhornOptions{1e-6, cfg.sinkhorn_max_iter});
      ws->self_cost = self.w2 * self.w2;
    }
    stats.entropic_self_cost = ws->self_cost;
  }

  stats.dissipation_margin = evaluate(f, result.rho) +
                             result.transport.w2 * result.transport.w2 / (2.0 * cfg.tau) - f_eta;

  // optimality residual over covered cells
  {
    const ScalarField fv = first_variation(f, result.rho);
    double mean = 0.0, m2 = 0.0;
    int count = 0;
    std::vector<double> r(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (result.rho.values[i] <= 1e-6) continue;
      r[count] = std::log(result.rho.values[i]) + fv.values[i] +
                 result.transport.phi.values[i] / cfg.tau;
      mean += r[count];
      ++count;
    }
    if (count > 1) {
      mean /= count;
      for (int i = 0; i < count; ++i) m2 += (r[i] - mean) * (r[i] - mean);
      stats.opt_residual_std = std::sqrt(m2 / count);
    }
  }
  return result;
}

}  // namespace

JkoStepResult jko_step(const DensityField& eta, const Functional& f, const JkoConfig& cfg) {
  return jko_step_impl(eta, f, cfg, nullptr);
}

double jko_objective(const DensityField& eta, const Functional& f, const JkoConfig& cfg,
                     const DensityField& rho) {
  if (eta.grid != rho.grid) throw GridMismatch();
  double w2sq;
  if (eta.grid.dim == 1) {
    w2sq = detail::transport_cost_1d(eta.grid, masses_of(rho), masses_of(eta));
  } else {
    const TransportResult tr = sinkhorn(rho, eta, cfg.effective_eps(eta.grid),
                                        SinkhornOptions{cfg.marginal_tol, cfg.sinkhorn_max_iter});
    w2sq = tr.w2 * tr.w2;
  }
  return evaluate(f, rho) + w2sq / (2.0 * cfg.tau);
}

Trajectory jko_run(const DensityField& rho0, const Functional& f, const JkoConfig& cfg,
                   const std::vector<CheckRequest>& checks, const ReportSpec& report) {
  Trajectory traj;
  traj.config = cfg;
  traj.densities.push_back(normalize(rho0));
  StepWorkspace ws;

  for (int n = 1; n <= cfg.steps; ++n) {
    const DensityField& eta = traj.densities.back();
    JkoStepResult step;
    try {
      step = jko_step_impl(eta, f, cfg, &ws);
    } catch (const Error& e) {
      traj.aborted = true;
      traj.failed_step = n;
      traj.error = e.what();
      break;
    }

    StepReport rep;
    rep.n = n;
    rep.t = n * cfg.tau;
    rep.energy = evaluate(f, step.rho);
    rep.entropy = entropy_of(step.rho);
    rep.w2_step = step.transport.w2;
    for (double p : report.norms_p) rep.lp_norms[p] = lp_norm(step.rho, p);
    {
      const ScalarField u = first_variation(f, step.rho);
      double m = -std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < step.rho.values.size(); ++i)
        if (step.rho.values[i] > 0.0)
          m = std::max(m, std::log(step.rho.values[i]) + u.values[i]);
      rep.sup_weighted = std::exp(m);
      for (double p : report.jp_p) rep.jp[p] = j_p(step.rho, u, p);
    }
    {
      const VectorField grad_rho = gradient(step.rho.as_scalar());
      double s = 0.0;
      for (std::size_t i = 0; i < step.rho.values.size(); ++i) {
        double mag = 0.0;
        for (int c = 0; c < step.rho.grid.dim; ++c) {
          const double v = grad_rho.values[i * step.rho.grid.dim + c];
          mag += v * v;
        }
        s += std::sqrt(mag);
      }
      rep.bv = s * step.rho.grid.cell_volume();
    }
    rep.opt_residual_std = step.stats.opt_residual_std;
    rep.outer_iterations = step.stats.outer_iterations;
    rep.dissipation_margin = step.stats.dissipation_margin;
    rep.entropic_self_cost = step.stats.entropic_self_cost;

    for (const CheckRequest& req : checks) {
      CheckParams params = req.params;
      // entropic bias is a solver artifact: the reported plan cost of the
      // self-coupling bounds it, so it widens the dissipation slack
      if (req.id == CheckId::EnergyDissipation && rho0.grid.dim == 2)
        params.tol += step.stats.entropic_self_cost / (2.0 * cfg.tau);
      rep.verdicts.push_back(
          check_step(eta, step.rho, step.transport, f, cfg.tau, req.id, params));
    }

    traj.reports.push_back(std::move(rep));
    traj.densities.push_back(std::move(step.rho));
  }
  return traj;
}

// ---------------------------------------------------------------------------
// brute-force oracle
// ---------------------------------------------------------------------------

namespace {

// Euclidean projection onto the probability simplex.
std::vector<double> project_simplex(std::vector<double> x) {
  std::vector<double> u = x;
  std::sort(u.begin(), u.end(), std::greater<double>());
  double css = 0.0, theta = 0.0;
  int k = 0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    css += u[i];
    const double th = (css - 1.0) / static_cast<double>(i + 1);
    if (u[i] - th > 0.0) {
      theta = th;
      k = static_cast<int>(i + 1);
    }
  }
  (void)k;
  for (double& v : x) v = std::max(0.0, v - theta);
  return x;
}

// dense log-domain entropic cost for the small 2D oracle, warm-started
struct DenseEntropic {
  const Grid* g;
  double eps;
  std::vector<double> cost;  // half cost |x-y|^2/2
  std::vector<double> f, gd;

  DenseEntropic(const Grid& grid, double e) : g(&grid), eps(e) {
    const std::size_t N = grid.size();
    cost.resize(N * N);
    f.assign(N, 0.0);
    gd.assign(N, 0.0);
    const int ny = grid.dim == 2 ? grid.n[1] : 1;
    for (std::size_t i = 0; i < N; ++i)
      for (std::size_t j = 0; j < N; ++j) {
        const double xi = grid.center(0, static_cast<int>(i) / ny);
        const double yi = grid.dim == 2 ? grid.center(1, static_cast<int>(i) % ny) : 0.0;
        const double xj = grid.center(0, static_cast<int>(j) / ny);
        const double yj = grid.dim == 2 ? grid.center(1, static_cast<int>(j) % ny) : 0.0;
        cost[i * N + j] = 0.5 * ((xi - xj) * (xi - xj) + (yi - yj) * (yi - yj));
      }
  }

  // returns the full-cost plan cost sum gamma |x-y|^2 and exposes duals in f
  double plan_cost(const std::vector<double>& ma, const std::vector<double>& mb) {
    const std::size_t N = ma.size();
    std::vector<double> logr(N), logc(N), row(N);
    for (std::size_t i = 0; i < N; ++i) {
      logr[i] = ma[i] > 0.0 ? std::log(ma[i]) : -std::numeric_limits<double>::infinity();
      logc[i] = mb[i] > 0.0 ? std::log(mb[i]) : -std::numeric_limits<double>::infinity();
    }
    double viol = 1.0;
    for (int it = 0; it < 20000 && viol > 1e-11; ++it) {
      for (std::size_t i = 0; i < N; ++i) {
        for (std::size_t j = 0; j < N; ++j) row[j] = gd[j] / eps + logc[j] - cost[i * N + j] / eps;
        f[i] = -eps * detail::EntropicKernel::lse(row);
      }
      viol = 0.0;
      for (std::size_t j = 0; j < N; ++j) {
        for (std::size_t i = 0; i < N; ++i) row[i] = f[i] / eps + logr[i] - cost[i * N + j] / eps;
        const double gn = -eps * detail::EntropicKernel::lse(row);
        if (mb[j] > 0.0) viol = std::max(viol, mb[j] * std::abs(std::expm1((gd[j] - gn) / eps)));
        gd[j] = gn;
      }
    }
    double total = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
      if (ma[i] <= 0.0) continue;
      for (std::size_t j = 0; j < N; ++j) {
        const double lg = (f[i] + gd[j] - cost[i * N + j]) / eps + logr[i] + logc[j];
        if (lg > -700.0) total += std::exp(lg) * 2.0 * cost[i * N + j];
      }
    }
    return total;
  }
};

}  // namespace

DensityField oracle_step(const DensityField& eta, const Functional& f, double tau, int restarts) {
  const Grid& g = eta.grid;
  if (g.size() > 64) throw GridTooLarge();
  if (!f.entropy) throw BadParameter("the proximal step needs the entropy term");
  const std::vector<double> target = masses_of(normalize(eta));
  const std::size_t N = g.size();

  DenseEntropic dense(g, 1e-4);
  auto w2sq = [&](const std::vector<double>& m) {
    if (g.dim == 1) return detail::transport_cost_1d(g, m, target);
    return dense.plan_cost(m, target);
  };
  auto objective = [&](const std::vector<double>& m) {
    return evaluate(f, density_of(g, m)) + w2sq(m) / (2.0 * tau);
  };
  // gradient w.r.t. masses: optimality field + transport potential
  auto gradient_at = [&](const std::vector<double>& m, std::vector<double>& grad) {
    const DensityField d = density_of(g, m);
    const ScalarField fv = first_variation(f, d);
    const double vol = g.cell_volume();
    if (g.dim == 1) {
      std::vector<double> gm;
      detail::transport_cost_and_grad_1d(g, m, target, gm);
      // d cost / d m_i is the suffix sum of the level derivatives
      std::vector<double> suffix(N + 1, 0.0);
      for (int j = static_cast<int>(N) - 1; j >= 1; --j) suffix[j] = suffix[j + 1] + gm[j - 1];
      for (std::size_t i = 0; i < N; ++i)
        grad[i] = std::log(std::max(m[i], 1e-300) / vol) + 1.0 + fv.values[i] +
                  suffix[i + 1] / (2.0 * tau);
    } else {
      for (std::size_t i = 0; i < N; ++i)
        grad[i] = std::log(std::max(m[i], 1e-300) / vol) + 1.0 + fv.values[i] +
                  2.0 * dense.f[i] / (2.0 * tau);
    }
  };

  std::vector<double> best;
  double best_obj = std::numeric_limits<double>::infinity();
  for (int r = 0; r < restarts; ++r) {
    std::vector<double> m(N);
    if (r == 0) {
      m = target;
    } else if (r == 1) {
      std::fill(m.begin(), m.end(), 1.0 / static_cast<double>(N));
    } else {
      std::mt19937 rng(9001 + r);
      std::uniform_real_distribution<double> unif(0.0, 1.0);
      double total = 0.0;
      for (double& v : m) {
        v = -std::log(1.0 - unif(rng));
        total += v;
      }
      for (double& v : m) v /= total;
    }
    m = floored_unit_masses(m);

    std::vector<double> grad(N), trial(N);
    double obj = objective(m);
    double alpha = 1e-2;
    for (int it = 0; it < 4000; ++it) {
      gradient_at(m, grad);
      bool improved = false;
      for (int bt = 0; bt < 25; ++bt) {
        for (std::size_t i = 0; i < N; ++i) trial[i] = m[i] - alpha * grad[i];
        trial = project_simplex(trial);
        trial = floored_unit_masses(trial);
        const double t_obj = objective(trial);
        if (t_obj < obj - 1e-15) {
          m.swap(trial);
          obj = t_obj;
          improved = true;
          alpha *= 1.3;
          break;
        }
        alpha *= 0.4;
      }
      if (!improved) break;
    }
    if (obj < best_obj) {
      best_obj = obj;
      best = m;
    }
  }
  return normalize(density_of(g, best));
}

}  // namespace jkoflow
