#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "jkoflow/grid.hpp"

namespace jkoflow::testing {

// smooth strictly positive 1D density: background plus gaussian bumps
inline DensityField bump_mixture_1d(const Grid& g, std::mt19937& rng, int bumps = 3,
                                    double background = 0.25) {
  std::uniform_real_distribution<double> upos(g.lo[0] + 0.15 * (g.hi[0] - g.lo[0]),
                                              g.hi[0] - 0.15 * (g.hi[0] - g.lo[0]));
  std::uniform_real_distribution<double> uw(0.3, 1.0);
  std::uniform_real_distribution<double> us(0.05 * (g.hi[0] - g.lo[0]),
                                            0.2 * (g.hi[0] - g.lo[0]));
  std::vector<double> c(bumps), w(bumps), s(bumps);
  for (int b = 0; b < bumps; ++b) {
    c[b] = upos(rng);
    w[b] = uw(rng);
    s[b] = us(rng);
  }
  return normalize(sample_density(g, [&](double x, double) {
    double v = background;
    for (int b = 0; b < bumps; ++b)
      v += w[b] * std::exp(-(x - c[b]) * (x - c[b]) / (2.0 * s[b] * s[b]));
    return v;
  }));
}

// midpoint-rule reference integral on a refined copy of the grid
template <class Fn>
double refined_quadrature_1d(const Grid& g, int factor, Fn&& f) {
  const int n = g.n[0] * factor;
  const double h = (g.hi[0] - g.lo[0]) / n;
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += f(g.lo[0] + (i + 0.5) * h);
  return s * h;
}

}  // namespace jkoflow::testing
