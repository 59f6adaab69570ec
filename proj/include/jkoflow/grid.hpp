#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "jkoflow/errors.hpp"

namespace jkoflow {

// Uniform cell-centered discretization of an axis-aligned box in 1 or 2
// dimensions. Cell centers sit at lo + (i + 1/2) h; linear cell index is
// row-major in the axis-0 coordinate: index = ix * n[1] + iy.
struct Grid {
  int dim = 1;
  std::array<int, 2> n{2, 1};
  std::array<double, 2> lo{0.0, 0.0};
  std::array<double, 2> hi{1.0, 0.0};

  static Grid line(int nx, double lox, double hix);
  static Grid box(int nx, int ny, double lox, double loy, double hix, double hiy);

  double spacing(int axis) const { return (hi[axis] - lo[axis]) / n[axis]; }
  double max_spacing() const;
  double cell_volume() const;
  double volume() const;
  double diameter() const;

  std::size_t size() const { return static_cast<std::size_t>(n[0]) * (dim == 2 ? n[1] : 1); }
  std::size_t index(int ix, int iy = 0) const {
    return static_cast<std::size_t>(ix) * (dim == 2 ? n[1] : 1) + iy;
  }
  double center(int axis, int i) const { return lo[axis] + (i + 0.5) * spacing(axis); }

  bool operator==(const Grid&) const = default;
};

struct ScalarField {
  Grid grid;
  std::vector<double> values;
};

// Nonnegative cell values interpreted as a probability density.
struct DensityField {
  Grid grid;
  std::vector<double> values;

  const ScalarField& as_scalar() const {
    // layout-compatible view; both structs are {Grid, vector<double>}
    return *reinterpret_cast<const ScalarField*>(this);
  }
};

// d components per cell, interleaved: values[i * dim + c].
struct VectorField {
  Grid grid;
  std::vector<double> values;
};

ScalarField make_scalar(const Grid& g, double fill = 0.0);
DensityField make_density(const Grid& g, double fill = 0.0);
VectorField make_vector(const Grid& g, double fill = 0.0);

template <class Fn>
ScalarField sample_scalar(const Grid& g, Fn&& f) {
  ScalarField out{g, std::vector<double>(g.size())};
  for (int ix = 0; ix < g.n[0]; ++ix) {
    const double x = g.center(0, ix);
    if (g.dim == 1) {
      out.values[g.index(ix)] = f(x, 0.0);
    } else {
      for (int iy = 0; iy < g.n[1]; ++iy) out.values[g.index(ix, iy)] = f(x, g.center(1, iy));
    }
  }
  return out;
}

template <class Fn>
DensityField sample_density(const Grid& g, Fn&& f) {
  ScalarField s = sample_scalar(g, std::forward<Fn>(f));
  return DensityField{s.grid, std::move(s.values)};
}

// Rescales to unit total mass. Throws ZeroMass if the quadrature of f is
// nonpositive.
DensityField normalize(const DensityField& f);

// Centered differences in the interior, one-sided at boundary cells.
VectorField gradient(const ScalarField& f);

// Midpoint rule: sum(values) * cell volume.
double quadrature(const ScalarField& f);
double quadrature(const DensityField& f);
// Weighted form: integral of f against the density `weight`.
double quadrature(const ScalarField& f, const DensityField& weight);

// (integral of f^p)^(1/p); max cell value for p = infinity.
double lp_norm(const DensityField& f, double p);

// Floor used only inside ratios like grad(rho)/rho, never applied to stored
// fields. Minimizers of the schemes here are positive, but discrete iterates
// may underflow.
inline double density_floor(const Grid& g) { return 1e-12 / g.volume(); }

// Plain-text snapshot: header line `# grid dim=<d> n=<n1[,n2]> lo=<..> hi=<..>`
// then one value per line in row-major order.
void write_snapshot(const std::string& path, const Grid& g, const std::vector<double>& values);
inline void write_snapshot(const std::string& path, const ScalarField& f) {
  write_snapshot(path, f.grid, f.values);
}
inline void write_snapshot(const std::string& path, const DensityField& f) {
  write_snapshot(path, f.grid, f.values);
}
ScalarField read_snapshot(const std::string& path);
DensityField read_snapshot_density(const std::string& path);

// Deterministic shortest-roundtrip-ish formatting shared by snapshot and CSV
// writers.
std::string format_double(double v);

}  // namespace jkoflow
