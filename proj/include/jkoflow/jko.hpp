#pragma once

#include <string>
#include <vector>

#include "jkoflow/diagnostics.hpp"
#include "jkoflow/functionals.hpp"
#include "jkoflow/grid.hpp"
#include "jkoflow/ot.hpp"

namespace jkoflow {

struct JkoConfig {
  double tau = 1e-3;
  int steps = 1;
  double eps = 0.0;  // entropic regularization for 2D steps; <= 0 picks 2 h_max^2
  double inner_tol = 1e-8;
  int fixed_point_max = 50;
  double fixed_point_damping = 1.0;  // in (0, 1]
  double marginal_tol = 1e-8;
  int sinkhorn_max_iter = 50000;

  double effective_eps(const Grid& g) const {
    return eps > 0.0 ? eps : 2.0 * g.max_spacing() * g.max_spacing();
  }
};

struct StepStats {
  int outer_iterations = 0;
  int inner_iterations = 0;       // Newton / scaling iterations, accumulated
  double opt_residual_std = 0.0;  // std of log rho + u + phi/tau over cells with rho > 1e-6
  double dissipation_margin = 0.0;  // F(rho) + w2^2/2tau - F(eta); <= 0 means dissipative
  double entropic_self_cost = 0.0;  // plan cost of the eta self-coupling (entropic steps)
};

struct JkoStepResult {
  DensityField rho;
  TransportResult transport;  // from the new rho (source) to eta (target)
  StepStats stats;
};

// One proximal step: approximately minimizes F(rho) + W2^2(rho, eta)/(2 tau).
// Nonlocal terms (interaction, chemotaxis) are frozen at the current outer
// iterate and relaxed by a damped fixed point; the local subproblem is solved
// by a monotone-rearrangement Newton scheme in 1D and by entropic scaling
// iterations with a pointwise KL proximal update in 2D.
JkoStepResult jko_step(const DensityField& eta, const Functional& f, const JkoConfig& cfg);

struct CheckRequest {
  CheckId id;
  CheckParams params;
};

struct ReportSpec {
  std::vector<double> norms_p = {2.0};
  std::vector<double> jp_p = {};
};

struct Trajectory {
  std::vector<DensityField> densities;  // rho_0, rho_tau, ...
  std::vector<StepReport> reports;      // one per step, n = 1..steps
  JkoConfig config;
  bool aborted = false;
  int failed_step = -1;
  std::string error;
};

// Iterates jko_step cfg.steps times, evaluating the requested checks after
// each step. On a step failure the partial trajectory is returned with the
// error context recorded instead of propagating the exception.
Trajectory jko_run(const DensityField& rho0, const Functional& f, const JkoConfig& cfg,
                   const std::vector<CheckRequest>& checks, const ReportSpec& report = {});

// Value of the step objective F(rho) + W2^2(rho, eta)/(2 tau) with the same
// distance the stepper itself uses (exact in 1D, entropic in 2D).
double jko_objective(const DensityField& eta, const Functional& f, const JkoConfig& cfg,
                     const DensityField& rho);

// Brute-force reference: projected-gradient descent on cell masses over the
// probability simplex with multistart, exact W2 in 1D and dense small-N
// entropic W2 in 2D. Restart seeds are 9001 + r for r = 0..restarts-1.
// Guarded to grids of at most 64 cells.
DensityField oracle_step(const DensityField& eta, const Functional& f, double tau,
                         int restarts = 20);

}  // namespace jkoflow
