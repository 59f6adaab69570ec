#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "jkoflow/grid.hpp"

namespace jkoflow {

struct PotentialTerm {
  ScalarField v;
  double lipschitz = 0.0;  // Lip(V), declared by the caller
  double lambda = 0.0;     // semi-convexity: D^2 V >= lambda I
};

// Even kernel W sampled on the displacement lattice of a grid: entry for
// displacement (dx, dy) cell offsets lives at
// (dx + n1 - 1) * (2 n2 - 1) + (dy + n2 - 1).
struct InteractionTerm {
  Grid grid;
  std::vector<double> stencil;
  double lipschitz = 0.0;  // Lip(W)
  double mu = 0.0;         // Lip(grad W)

  double at(int dx, int dy = 0) const {
    const int n2 = grid.dim == 2 ? grid.n[1] : 1;
    return stencil[static_cast<std::size_t>(dx + grid.n[0] - 1) * (2 * n2 - 1) + (dy + n2 - 1)];
  }
};

// Builds the stencil from a callable W(z1, z2); evenness W(z) = W(-z) is
// validated to 1e-12.
InteractionTerm make_interaction(const Grid& g, const std::function<double(double, double)>& w,
                                 double lipschitz, double mu);

struct KellerSegelTerm {
  double chi = 0.0;
  double poisson_tol = 1e-10;
};

struct LqSmoothingTerm {
  double delta = 0.0;
  double q = 2.0;
};

// Composite energy E + G: entropy plus at most one term of each kind.
struct Functional {
  bool entropy = false;
  std::optional<PotentialTerm> potential;
  std::optional<InteractionTerm> interaction;
  std::optional<KellerSegelTerm> keller_segel;
  std::optional<LqSmoothingTerm> lq_smoothing;

  // throws BadParameter on inconsistent parameters (chi <= 0, q <= d/2 with
  // delta > 0, stencil grid mismatch)
  void validate(const Grid& g) const;
};

double evaluate(const Functional& f, const DensityField& rho);

// int rho log rho dx with the 0 log 0 = 0 convention.
double entropy_of(const DensityField& rho);

// u[rho] = V + W*rho - chi h[rho] + delta rho^(q-1); the entropy term is
// handled in closed form by the proximal stepper and stays out of u.
ScalarField first_variation(const Functional& f, const DensityField& rho);

// W * rho by direct double sum.
ScalarField convolve(const InteractionTerm& w, const DensityField& rho);

// Scalar convex integrands F with F(0) = 0 used for displacement-convexity
// bookkeeping: s^q, s log s, (s^p - K s^((d-1)/d))_+, (s - K)_+^p.
struct McCannFunction {
  enum class Kind { Power, Entropy, FpK, FtildepK };
  Kind kind = Kind::Power;
  double p = 2.0;
  double K = 1.0;
  int d = 2;  // dimension parameter baked into FpK

  double operator()(double s) const;

  static McCannFunction power(double q) { return {Kind::Power, q, 0.0, 0}; }
  static McCannFunction entropy() { return {Kind::Entropy, 0.0, 0.0, 0}; }
  static McCannFunction f_pk(double p, double K, int d) { return {Kind::FpK, p, K, d}; }
  static McCannFunction f_tilde_pk(double p, double K) { return {Kind::FtildepK, p, K, 0}; }
};

struct McCannVerdict {
  bool pass = true;
  double first_violation_s = 0.0;
  double worst_margin = 0.0;
};

// Numerically tests that g(s) = F(s^-d) s^d is convex (three-point second
// differences >= -1e-9) and nonincreasing on a log-spaced sample grid.
McCannVerdict mccann_check(const McCannFunction& f, int d, int samples = 400);

// Cellwise quadrature of F(rho).
double f_pk_integral(const McCannFunction& f, const DensityField& rho);

}  // namespace jkoflow
