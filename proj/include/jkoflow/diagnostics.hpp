#pragma once

#include <map>
#include <string>
#include <vector>

#include "jkoflow/functionals.hpp"
#include "jkoflow/grid.hpp"
#include "jkoflow/ot.hpp"

namespace jkoflow {

// Radially symmetric convex integrands H(z) = H(|z|) used for the transport
// and Sobolev-type estimates; grad H(z) = slope(|z|) z/|z| with grad H(0) = 0.
struct RadialConvexFn {
  enum class Kind { Power, CoshMinusOne, BallPenalty };
  Kind kind = Kind::Power;
  double p = 2.0;      // Power exponent, 1 <= p <= 4
  double radius = 1.0; // BallPenalty: (|z| - radius)_+^2

  double operator()(double r) const;
  double slope(double r) const;

  static RadialConvexFn power(double p) { return {Kind::Power, p, 0.0}; }
  static RadialConvexFn cosh_minus_one() { return {Kind::CoshMinusOne, 0.0, 0.0}; }
  static RadialConvexFn ball_penalty(double radius) { return {Kind::BallPenalty, 0.0, radius}; }
};

enum class CheckId {
  LpLipschitzV,
  LpLaplacianV,
  LinfFPGeometric,
  WeightedSupFP,
  LpLipschitzW,
  WeightedSupInteraction,
  FpKKellerSegel,
  FiveGradients,
  JpSemiconvex,
  JpInteraction,
  JpKellerSegel,
  EnergyDissipation,
  LogLipschitz,
};

std::string check_name(CheckId id);
CheckId check_from_name(const std::string& name);

// Parameter bag for check_step; only the fields a given check reads matter.
struct CheckParams {
  double p = 2.0;          // Lp / Jp exponent
  double K = 1.0;          // FpK threshold
  double A = 0.0;          // upper bound on laplace(V)
  double lambda = 0.0;     // semi-convexity of V
  double mu = 0.0;         // Lip(grad W)
  double growth_C = 0.0;   // constant in grad H(z).z <= C (H(z) + 1), lambda < 0 case
  double D1_cap = 1.0;     // cap on the FpK increment per unit tau
  double C_cap = 1.0;      // cap on the empirical Jp Keller-Segel constant
  double tol = 1e-9;       // slack band separating slack-pass from fail
  RadialConvexFn H = RadialConvexFn::power(2.0);
};

struct Verdict {
  CheckId id = CheckId::EnergyDissipation;
  enum class Status { Pass, SlackPass, Fail } status = Status::Pass;
  double margin = 0.0;     // >= 0 means the raw inequality holds
  double empirical = 0.0;  // recorded empirical constant, check-specific
};

// All diagnostics for one scheme step.
struct StepReport {
  int n = 0;
  double t = 0.0;
  double energy = 0.0;
  double entropy = 0.0;
  double w2_step = 0.0;
  std::map<double, double> lp_norms;
  double sup_weighted = 0.0;  // max of rho exp(u[rho])
  double bv = 0.0;            // discrete total variation of rho
  std::map<double, double> jp;
  std::vector<Verdict> verdicts;
  // solver bookkeeping
  double opt_residual_std = 0.0;
  int outer_iterations = 0;
  double dissipation_margin = 0.0;
  double entropic_self_cost = 0.0;  // plan cost of the eta self-coupling (2D)
};

// Z_rho = grad(rho)/max(rho, floor) + grad(u), cellwise.
VectorField z_field(const DensityField& rho, const ScalarField& u);

// int |Z_rho|^p d rho.
double j_p(const DensityField& rho, const ScalarField& u, double p);

// int H(Z) d rho for a general catalog integrand.
double h_z_integral(const DensityField& rho, const ScalarField& u, const RadialConvexFn& H);

// LHS of the transport-pair inequality
// int grad(rho).grad H(grad phi) + grad(eta).grad H(grad psi) dx, which is
// nonnegative for radial convex H on convex domains. Gradients of the
// potentials come from the transport map (exact route) when available.
double five_gradients_residual(const DensityField& rho, const DensityField& eta,
                               const TransportResult& tr, const RadialConvexFn& H);

// max |grad(log rho + V)| over cells; throws NonPositiveDensity.
double log_lipschitz(const DensityField& rho, const ScalarField& v);

// One named per-step inequality; rho is the step output, eta its input, tr
// the transport from rho to eta. Failure is data, never an exception;
// WrongModelClass is thrown only when the functional lacks the terms the
// check is about.
Verdict check_step(const DensityField& eta, const DensityField& rho, const TransportResult& tr,
                   const Functional& f, double tau, CheckId id, const CheckParams& params);

// CSV log, one row per step:
// n,t,energy,entropy,w2_step,lp_<p>...,sup_weighted,bv,jp_<p>...,
// then verdict_<id>,margin_<id> per requested check. RFC-4180; all numeric
// fields formatted deterministically.
void write_csv(const std::string& path, const std::vector<StepReport>& reports, double tau);

}  // namespace jkoflow
