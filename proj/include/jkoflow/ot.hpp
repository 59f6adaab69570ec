#pragma once

#include <vector>

#include "jkoflow/grid.hpp"

namespace jkoflow {

enum class TransportMethod { Exact1D, Entropic };

// Output of a transport solve between two densities on a shared grid.
// Conventions: cost c(x,y) = |x-y|^2 / 2 for the dual pair (phi, psi),
// w2 is the unregularized quadratic-cost distance sqrt(sum gamma |x-y|^2),
// phi lives on the source grid and is anchored to 0 at the first cell for
// the exact 1D solver; T(x) = x - grad phi(x).
struct TransportResult {
  double w2 = 0.0;
  ScalarField phi;
  ScalarField psi;
  VectorField map;  // Monge / barycentric map T evaluated at source cell centers
  TransportMethod method = TransportMethod::Exact1D;
  double eps = 0.0;                // entropic regularization used (0 for exact)
  double marginal_violation = 0.0; // max plan marginal mismatch at exit
  int iterations = 0;
};

// Monotone-rearrangement transport between two 1D densities on the same
// grid. The squared distance integrates the difference of the two
// piecewise-linear quantile functions exactly, so it is exact for the
// piecewise-constant-density interpretation of the fields. Zero-mass target
// cells are skipped by the left-continuous pseudo-inverse.
TransportResult exact_ot_1d(const DensityField& rho, const DensityField& eta);

struct SinkhornOptions {
  double marginal_tol = 1e-8;
  int max_iter = 50000;
};

// Log-domain entropic solver on cost |x-y|^2/2 with product-measure
// reference; the kernel factorizes per axis, so 2D updates run in
// O(N (n1 + n2)). Returns the entropic duals as (phi, psi) and the
// barycentric-projection map.
TransportResult sinkhorn(const DensityField& rho, const DensityField& eta, double eps,
                         const SinkhornOptions& opts = {});

// Pushforward of rho under x -> x - t grad phi(x) = (1-t) x + t T(x),
// realized by multilinear mass splatting of each cell's mass at its
// displaced center; the output is normalized.
DensityField displacement_interpolate(const DensityField& rho, const TransportResult& result,
                                      double t);

namespace detail {

// W2^2 between the piecewise-constant densities with cell masses ma, mb on a
// shared 1D grid (cost |x-y|^2, exact quantile-difference integral).
double transport_cost_1d(const Grid& g, const std::vector<double>& ma,
                         const std::vector<double>& mb);

// Cost plus derivative with respect to the interior cumulative masses
// M_j = sum_{i<j} ma_i: grad[j-1] = d cost / d M_j, j = 1..n-1. Requires
// ma > 0 cellwise (the callers keep iterates interior). mb may have zeros.
double transport_cost_and_grad_1d(const Grid& g, const std::vector<double>& ma,
                                  const std::vector<double>& mb, std::vector<double>& grad);

}  // namespace detail

}  // namespace jkoflow
