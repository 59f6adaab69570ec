#pragma once

#include "jkoflow/grid.hpp"

namespace jkoflow {

// Solution of -laplace(h) = rho with homogeneous Dirichlet boundary values.
struct PoissonSolution {
  ScalarField h;
  VectorField grad_h;
  double residual = 0.0;  // max |A h - rho| over interior cells
  int iterations = 0;
};

// 5-point (3-point in 1D) finite-difference Laplacian with the boundary
// value enforced by antisymmetric ghost reflection, solved matrix-free by
// conjugate gradients to relative residual <= tol.
PoissonSolution solve_poisson(const DensityField& rho, double tol = 1e-10);

struct KsEnergyStats {
  double pairing_form = 0.0;   // -(chi/2) int h d rho
  double gradient_form = 0.0;  // -(chi/2) int |grad h|^2 dx
  double discrepancy = 0.0;
};

// Chemotaxis energy -(chi/2) int h[rho] d rho. Both algebraic forms are
// evaluated; their gap is a boundary-quadrature consistency metric.
double ks_energy(const DensityField& rho, double chi, double tol = 1e-10,
                 KsEnergyStats* stats = nullptr);

}  // namespace jkoflow
